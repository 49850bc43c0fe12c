"""Command-line front end: fk, ik, jac, singularity, isotropy, sweep,
gait, oracle-check, config.

All numeric JSON output is serialized with 17 significant digits (exact
double round trip); angles are radians unless --degrees converts the
inputs.  Exit codes: 0 success, 2 domain errors, 1 usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import differential, gait as gait_mod, kinematics, oracle, scene, workspace
from .errors import WristKinError
from .geometry import Orientation, wrap_angle
from .mechanism import (JointAngles, MechanismParams, Variant, load_mechanism,
                        mechanism_from_variant, mechanism_to_config,
                        neutral_orientation)

_SENTINEL = "\x00f{}\x00"


def dumps_17g(obj) -> str:
    """JSON text with every float at 17 significant digits."""
    floats: list[float] = []

    def walk(x):
        if isinstance(x, float):
            floats.append(x)
            return _SENTINEL.format(len(floats) - 1)
        if isinstance(x, dict):
            return {k: walk(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [walk(v) for v in x]
        if isinstance(x, (np.floating,)):
            return walk(float(x))
        if isinstance(x, (np.integer,)):
            return int(x)
        if isinstance(x, np.ndarray):
            return walk(x.tolist())
        return x

    text = json.dumps(walk(obj), indent=2)
    for idx, v in enumerate(floats):
        token = json.dumps(_SENTINEL.format(idx))
        if math.isfinite(v):
            text = text.replace(token, format(v, ".17g"))
        else:
            text = text.replace(token, json.dumps(format(v, "g")))
    return text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _angles(values, degrees: bool):
    vals = [math.radians(v) for v in values] if degrees else list(values)
    return vals


def _mechanism(args) -> MechanismParams:
    if getattr(args, "config", None):
        return load_mechanism(args.config)
    return mechanism_from_variant(Variant(args.variant))


def _pose_dict(sol) -> dict:
    return {
        "yaw": sol.orientation.yaw,
        "pitch": sol.orientation.pitch,
        "roll": sol.orientation.roll,
        "theta": list(sol.joints.as_array()),
        "elbow_signs": list(sol.elbow_signs),
        "platform_sign": sol.platform_sign,
        "spurious": kinematics.is_spurious(sol),
    }


def _emit(payload, args=None) -> None:
    print(dumps_17g(payload))


def cmd_fk(args) -> int:
    m = _mechanism(args)
    t1, t2, t3 = _angles(args.theta, args.degrees)
    fk = kinematics.solve_fk(m, JointAngles(t1, t2, t3))
    sols = list(fk.solutions)
    working = fk.working
    payload = {
        "variant": m.variant.value,
        "theta": [t1, t2, t3],
        "solutions": [_pose_dict(s) for s in sols],
        "spurious_count": fk.spurious_count,
        "working_index": sols.index(working) if working in sols else None,
    }
    _emit(payload)
    _maybe_scene_fig(args, m, sols)
    return 0


def cmd_ik(args) -> int:
    m = _mechanism(args)
    if args.verify:
        return _verify_round_trip(m)
    y, p, r = _angles(args.rpy, args.degrees)
    ik = kinematics.solve_ik(m, Orientation(y, p, r))
    sols = list(ik.solutions)
    working = ik.working
    payload = {
        "variant": m.variant.value,
        "rpy": [y, p, r],
        "solutions": [_pose_dict(s) for s in sols],
        "leg_counts": list(ik.leg_counts),
        "leg_double_roots": list(ik.leg_doubles),
        "working_index": sols.index(working) if working in sols else None,
    }
    _emit(payload)
    _maybe_scene_fig(args, m, sols)
    return 0


def _verify_round_trip(m) -> int:
    """Read fk JSON from stdin; check each solution's orientation IK
    contains the original joint vector.  At pitch = pi/2 a leg's closure
    holds for a continuum of angles and IK is degenerate there, so the
    check falls back to the rod residuals."""
    from .errors import DegenerateQuadraticError
    from .mechanism import rod_residuals

    data = json.load(sys.stdin)
    theta = np.asarray(data["theta"], dtype=float)
    mismatches = 0
    for sol in data["solutions"]:
        o = Orientation(sol["yaw"], sol["pitch"], sol["roll"])
        try:
            ik = kinematics.solve_ik(m, o)
            hit = any(float(np.max(np.abs(wrap_angle(s.joints.as_array() - theta)))) < 1e-9
                      for s in ik.solutions)
        except DegenerateQuadraticError:
            e1, e2 = rod_residuals(m, JointAngles(*theta), o)
            hit = max(abs(e1), abs(e2)) < 1e-9
        except WristKinError:
            hit = False
        mismatches += 0 if hit else 1
    _emit({"checked": len(data["solutions"]), "mismatches": mismatches})
    return 0 if mismatches == 0 else 2


def _working_pose(m, args):
    y, p, r = _angles(args.rpy, args.degrees)
    ik = kinematics.solve_ik(m, Orientation(y, p, r))
    return ik.working or ik.solutions[0]


def cmd_jac(args) -> int:
    m = _mechanism(args)
    pose = _working_pose(m, args)
    dk = differential.build_jacobians(pose, m)
    _emit({
        "variant": m.variant.value,
        "pose": _pose_dict(pose),
        "A": dk.A.tolist(),
        "B": dk.B.tolist(),
        "jinv_nominal": dk.jinv_nominal.tolist(),
        "jinv_exact": dk.jinv_exact.tolist(),
        "det_A": dk.det_A,
        "det_B": dk.det_B,
        "det_A_normalized": dk.det_A_normalized,
        "det_B_normalized": dk.det_B_normalized,
        "kappa_A": dk.kappa_A,
        "kappa_jinv_nominal": dk.kappa_jinv_nominal,
        "kappa_jinv_exact": dk.kappa_jinv_exact,
    })
    return 0


def cmd_singularity(args) -> int:
    m = _mechanism(args)
    pose = _working_pose(m, args)
    rep = differential.classify_singularity(pose, m, args.threshold)
    _emit({
        "variant": m.variant.value,
        "pose": _pose_dict(pose),
        "kind": rep.tag(),
        "leg": rep.leg,
        "pair": rep.pair,
        "margin": rep.margin,
        "det_A_normalized": rep.det_A_normalized,
        "det_B_normalized": rep.det_B_normalized,
    })
    return 0


def cmd_isotropy(args) -> int:
    m = _mechanism(args)
    if args.rpy is not None:
        pose = _working_pose(m, args)
    else:
        pose = differential.find_isotropic_config(m)
    rep = differential.isotropy_report(pose, m)
    _emit({
        "variant": m.variant.value,
        "pose": _pose_dict(pose),
        "a_residuals": rep.a_residuals,
        "b_residuals": rep.b_residuals,
        "dist_A_identity": rep.dist_a_identity,
        "dist_B_identity": rep.dist_b_identity,
        "kappa_A": rep.kappa_a,
        "a_isotropic": rep.a_isotropic,
        "b_isotropic": rep.b_isotropic,
    })
    _maybe_scene_fig(args, m, [pose])
    return 0


def _parse_box(args) -> workspace.OrientationBox:
    if args.box == "default":
        return workspace.default_box()
    vals = [float(v) for v in args.box.split(",")]
    if len(vals) != 9:
        raise SystemExit(1)
    conv = math.radians
    return workspace.OrientationBox(
        (conv(vals[0]), conv(vals[1])), (conv(vals[3]), conv(vals[4])),
        (conv(vals[6]), conv(vals[7])),
        int(vals[2]), int(vals[5]), int(vals[8]))


def cmd_sweep(args) -> int:
    m = _mechanism(args)
    box = _parse_box(args)
    wmap = workspace.sweep_workspace(m, box, args.threshold)
    summary = workspace.summarize(wmap)
    if args.out:
        if args.format == "csv":
            workspace.write_csv(wmap, args.out)
        else:
            cells = [{
                "yaw_deg": math.degrees(wmap.yaw_off[k]),
                "pitch_deg": math.degrees(wmap.pitch[k]),
                "roll_deg": math.degrees(wmap.roll[k]),
                "reachable": bool(wmap.reachable[k]),
                "theta": wmap.theta[k].tolist(),
                "det_A_norm": wmap.det_a_norm[k],
                "det_B_norm": wmap.det_b_norm[k],
                "kappa_paper": wmap.kappa_nominal[k],
                "kappa_exact": wmap.kappa_exact[k],
                "singularity_kind": wmap.kind[k],
            } for k in range(wmap.yaw_off.shape[0])]
            with open(args.out, "w") as f:
                f.write(dumps_17g({"summary": summary, "cells": cells}))
                f.write("\n")
    if args.fig:
        from . import plots
        plots.render_sweep(wmap, args.fig)
    _emit({"variant": m.variant.value, "summary": summary,
           "out": args.out, "fig": args.fig})
    return 0


def cmd_gait(args) -> int:
    m = _mechanism(args)
    g = gait_mod.load_gait(args.gait_config) if args.gait_config else gait_mod.GaitParams()
    report = gait_mod.validate_trajectory(m, g, args.samples, args.threshold)
    if args.out:
        gait_mod.write_csv(report, args.out)
    if args.fig:
        from . import plots
        plots.render_gait(report, args.fig)
    fd, pred = report.rates_fd, report.rates_predicted
    mask = np.isfinite(fd) & np.isfinite(pred)
    scale = max(float(np.abs(pred[mask]).max()) if mask.any() else 0.0, 1e-12)
    max_rate_err = float(np.abs((fd - pred)[mask]).max()) / scale if mask.any() else float("nan")
    _emit({
        "variant": m.variant.value,
        "vertebrae": g.vertebra_count,
        "samples_per_cycle": report.samples_per_cycle,
        "violations": len(report.violations),
        "violation_list": [[kv, si, kind] for kv, si, kind, _ in report.violations[:50]],
        "max_relative_rate_error": max_rate_err,
        "min_margin": float(np.nanmin(report.margins)),
        "out": args.out, "fig": args.fig,
    })
    return 0


def _hausdorff(a, b) -> float:
    if not a and not b:
        return 0.0
    if not a or not b:
        return math.inf
    aa, bb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    d = np.abs(wrap_angle(aa[:, None, :] - bb[None, :, :])).max(axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def cmd_oracle_check(args) -> int:
    m = _mechanism(args)
    rng = np.random.default_rng(args.seed)
    worst_fk, worst_ik = 0.0, 0.0
    nfk = nik = 0
    for _ in range(args.count):
        th = rng.uniform(-math.pi, math.pi, 3)
        j = JointAngles(*th)
        try:
            cf = [(s.orientation.pitch, s.orientation.roll)
                  for s in kinematics.solve_fk(m, j).solutions]
        except WristKinError:
            cf = []
        worst_fk = max(worst_fk, _hausdorff(cf, oracle.grid_fk_roots(m, j)))
        nfk += 1
    for _ in range(args.count):
        o = Orientation(rng.uniform(-math.pi, math.pi),
                        rng.uniform(-0.6, 0.6), rng.uniform(-math.pi, math.pi))
        for leg in (1, 2):
            roots, _ = kinematics.ik_leg_roots(m, leg, o)
            ora = oracle.bisect_leg_residual(m, leg, o, samples=args.samples)
            worst_ik = max(worst_ik, _hausdorff([[t] for t in roots],
                                                [[t] for t in ora.roots]))
        nik += 1
    ok = worst_fk < 1e-6 and worst_ik < 1e-6
    _emit({"variant": m.variant.value, "fk_checked": nfk, "ik_checked": nik,
           "max_fk_hausdorff": worst_fk, "max_ik_hausdorff": worst_ik,
           "pass": ok})
    return 0 if ok else 2


def cmd_config(args) -> int:
    if args.gait:
        _emit(gait_mod.gait_to_config(gait_mod.GaitParams()))
    else:
        _emit(mechanism_to_config(mechanism_from_variant(Variant(args.variant))))
    return 0


def _maybe_scene_fig(args, m, sols) -> None:
    if getattr(args, "scene", None):
        scene.write_scene(scene.build_scene(m, sols), args.scene)
    if getattr(args, "fig", None):
        from . import plots
        plots.render_scene(scene.build_scene(m, sols), args.fig)


def build_parser() -> _Parser:
    p = _Parser(prog="wristkin", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, rpy=False, theta=False, out=False, fig=False, scn=False):
        sp.add_argument("--variant", default=Variant.PARALLEL_ACTUATORS.value,
                        choices=[v.value for v in Variant])
        sp.add_argument("--config", help="mechanism config JSON file")
        sp.add_argument("--degrees", action="store_true",
                        help="interpret input angles as degrees")
        sp.add_argument("--threshold", type=float, default=1e-6)
        sp.add_argument("--seed", type=int, default=0)
        if rpy:
            sp.add_argument("--rpy", type=float, nargs=3,
                            metavar=("YAW", "PITCH", "ROLL"))
        if theta:
            sp.add_argument("--theta", type=float, nargs=3, required=True,
                            metavar=("T1", "T2", "T3"))
        if out:
            sp.add_argument("--out")
            sp.add_argument("--format", choices=("json", "csv"), default="csv")
        if fig:
            sp.add_argument("--fig", help="render a figure to this file")
        if scn:
            sp.add_argument("--scene", help="write a scene JSON to this file")

    sp = sub.add_parser("fk", help="direct kinematics")
    common(sp, theta=True, fig=True, scn=True)
    sp.set_defaults(fn=cmd_fk)

    sp = sub.add_parser("ik", help="inverse kinematics")
    common(sp, rpy=True, fig=True, scn=True)
    sp.add_argument("--verify", action="store_true",
                    help="read fk JSON from stdin and verify the round trip")
    sp.set_defaults(fn=cmd_ik)

    sp = sub.add_parser("jac", help="differential kinematics at a pose")
    common(sp, rpy=True)
    sp.set_defaults(fn=cmd_jac)

    sp = sub.add_parser("singularity", help="classify a pose")
    common(sp, rpy=True)
    sp.set_defaults(fn=cmd_singularity)

    sp = sub.add_parser("isotropy", help="isotropy report / search")
    common(sp, rpy=True, fig=True, scn=True)
    sp.set_defaults(fn=cmd_isotropy)

    sp = sub.add_parser("sweep", help="workspace sweep")
    common(sp, out=True, fig=True)
    sp.add_argument("--box", default="default",
                    help="'default' or 9 comma values: ylo,yhi,ny,plo,phi,np,rlo,rhi,nr (deg)")
    sp.set_defaults(fn=cmd_sweep)

    sp = sub.add_parser("gait", help="gait trajectory validation")
    common(sp, out=True, fig=True)
    sp.add_argument("--gait-config", help="gait config JSON file")
    sp.add_argument("--samples", type=int, default=256)
    sp.set_defaults(fn=cmd_gait)

    sp = sub.add_parser("oracle-check", help="closed form vs brute force")
    common(sp)
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--samples", type=int, default=200_000,
                    help="1-D oracle scan samples")
    sp.set_defaults(fn=cmd_oracle_check)

    sp = sub.add_parser("config", help="emit default config JSON")
    sp.add_argument("--variant", default=Variant.PARALLEL_ACTUATORS.value,
                    choices=[v.value for v in Variant])
    sp.add_argument("--gait", action="store_true")
    sp.set_defaults(fn=cmd_config)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except WristKinError as e:
        kind = type(e).__name__.removesuffix("Error")
        print(dumps_17g({"error": kind, "detail": str(e)}))
        return 2


if __name__ == "__main__":
    sys.exit(main())
