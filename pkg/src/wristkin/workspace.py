"""Orientation-workspace sweep: conditioning and singularity margins over
the biomimetic command envelope.

Grid coordinates are offsets from the neutral posture (yaw measured about
NEUTRAL_YAW; the raw identity orientation is itself singular for the
parallel-actuator variant).  Cell order is row-major with yaw fastest:
index = (roll_idx * n_pitch + pitch_idx) * n_yaw + yaw_idx.  Evaluation
is vectorized; WRISTKIN_THREADS > 1 splits the cell range into chunks
that write disjoint slices of preallocated arrays, which keeps two runs
bit-identical regardless of scheduling.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .differential import SINGULARITY_THRESHOLD, classify_singularity, condition_number
from .errors import EmptyMapError
from .geometry import Orientation
from .mechanism import (ENVELOPE_PITCH, ENVELOPE_ROLL, ENVELOPE_YAW,
                        JointAngles, MechanismParams, NEUTRAL_YAW,
                        anchor_points, assemble_pose, link_zero_direction)

KIND_UNREACHABLE = "unreachable"


@dataclass(frozen=True)
class OrientationBox:
    """Command envelope: (lo, hi) offsets in radians plus per-axis counts."""

    yaw_range: tuple[float, float]
    pitch_range: tuple[float, float]
    roll_range: tuple[float, float]
    yaw_count: int
    pitch_count: int
    roll_count: int

    def __post_init__(self):
        if min(self.yaw_count, self.pitch_count, self.roll_count) < 1:
            raise ValueError("axis counts must be positive")
        for rng in (self.yaw_range, self.pitch_range, self.roll_range):
            if rng[1] < rng[0]:
                raise ValueError(f"empty range {rng}")

    def axes(self):
        return (np.linspace(*self.yaw_range, self.yaw_count),
                np.linspace(*self.pitch_range, self.pitch_count),
                np.linspace(*self.roll_range, self.roll_count))

    @property
    def cell_count(self) -> int:
        return self.yaw_count * self.pitch_count * self.roll_count


def default_box() -> OrientationBox:
    """+-30 deg yaw at 1 deg, +-15 deg pitch at 1 deg, +-4 deg roll at 0.5 deg."""
    return OrientationBox((-ENVELOPE_YAW, ENVELOPE_YAW),
                          (-ENVELOPE_PITCH, ENVELOPE_PITCH),
                          (-ENVELOPE_ROLL, ENVELOPE_ROLL), 61, 31, 17)


@dataclass
class WorkspaceMap:
    mechanism: MechanismParams
    box: OrientationBox
    neutral_yaw: float
    yaw_off: np.ndarray       # per-cell offsets, cell order
    pitch: np.ndarray
    roll: np.ndarray
    reachable: np.ndarray     # bool
    theta: np.ndarray         # (n, 3), NaN where unreachable
    elbow_signs: np.ndarray   # (n, 2) int
    det_a_norm: np.ndarray
    det_b_norm: np.ndarray
    kappa_nominal: np.ndarray
    kappa_exact: np.ndarray
    kind: np.ndarray          # object array of tag strings
    threshold: float

    @property
    def margin(self) -> np.ndarray:
        return np.minimum(np.abs(self.det_a_norm), np.abs(self.det_b_norm))

    def cell_orientation(self, idx: int) -> Orientation:
        return Orientation(self.neutral_yaw + self.yaw_off[idx],
                           self.pitch[idx], self.roll[idx])


def _leg_roots_vec(m: MechanismParams, leg: int, c_pts: np.ndarray):
    """Both polished tan-half roots per cell plus the final residuals."""
    a1, a2 = anchor_points(m)
    anchor = a1 if leg == 1 else a2
    i = m.axis(leg)
    d0 = link_zero_direction(m, leg)
    e2ax = np.cross(i, d0)
    ell, rho = m.link_length, m.rod_length

    v = c_pts - anchor
    ca = -2.0 * ell * (v @ d0)
    cb = -2.0 * ell * (v @ e2ax)
    cc = np.einsum("ij,ij->i", v, v) + ell * ell - rho * rho

    qa, qb, qc = cc - ca, 2.0 * cb, cc + ca
    disc = qb * qb - 4.0 * qa * qc
    sq = np.sqrt(np.maximum(disc, 0.0))
    sgn = np.where(qb >= 0.0, 1.0, -1.0)
    q = -(qb + sgn * sq) / 2.0

    safe_qa = np.where(np.abs(qa) > 1e-300, qa, 1.0)
    safe_q = np.where(np.abs(q) > 1e-300, q, 1.0)
    t_a = np.where(np.abs(qa) < 1e-12, math.pi, 2.0 * np.arctan(q / safe_qa))
    t_b = np.where(np.abs(q) < 1e-300,
                   t_a, 2.0 * np.arctan(qc / safe_q))
    # degenerate leading coefficient: pi is exact, partner from the linear part
    deg = np.abs(qa) < 1e-12
    safe_qb = np.where(np.abs(qb) > 1e-300, qb, 1.0)
    t_b = np.where(deg, np.where(np.abs(qb) < 1e-12, math.pi,
                                 2.0 * np.arctan(-qc / safe_qb)), t_b)

    roots = np.stack([t_a, t_b], axis=1)
    # one Newton polish on the trig residual
    f = (ca[:, None] * np.cos(roots) + cb[:, None] * np.sin(roots) + cc[:, None])
    df = (-ca[:, None] * np.sin(roots) + cb[:, None] * np.cos(roots))
    scale = np.maximum(np.abs(ca), np.maximum(np.abs(cb), np.abs(cc)))
    ok = np.abs(df) > 1e-6 * scale[:, None]
    roots = roots - np.where(ok, f / np.where(ok, df, 1.0), 0.0)
    res = (ca[:, None] * np.cos(roots) + cb[:, None] * np.sin(roots) + cc[:, None])
    return roots, res, anchor, i, d0, e2ax


def _evaluate_range(m: MechanismParams, t3, phi, psi, threshold, out, lo):
    """Fill out-arrays[lo:lo+n] for raw orientations (t3, phi, psi)."""
    n = t3.shape[0]
    c3, s3 = np.cos(t3), np.sin(t3)
    cph, sph = np.cos(phi), np.sin(phi)
    cps, sps = np.cos(psi), np.sin(psi)
    p = m.platform_radius

    c1 = p * np.stack([c3 * cph, s3 * cph, -sph], axis=1)
    c2 = p * np.stack([c3 * sph * sps - s3 * cps,
                       s3 * sph * sps + c3 * cps,
                       cph * sps], axis=1)

    legs = {}
    for leg, c_pts in ((1, c1), (2, c2)):
        roots, res, anchor, i, d0, e2ax = _leg_roots_vec(m, leg, c_pts)
        valid = np.abs(res) < 1e-10
        b_pts = (anchor[None, None, :]
                 + m.link_length * (np.cos(roots)[:, :, None] * d0[None, None, :]
                                    + np.sin(roots)[:, :, None] * e2ax[None, None, :]))
        l_v = b_pts - anchor[None, None, :]
        r_v = c_pts[:, None, :] - b_pts
        elbow = np.einsum("nkj,j->nk", np.cross(l_v, r_v), i)
        # working branch: positive elbow sign, else best available
        score = np.where(valid, elbow, -np.inf)
        pick = np.argmax(score, axis=1)
        rows = np.arange(n)
        legs[leg] = {
            "reachable": valid.any(axis=1),
            "theta": roots[rows, pick],
            "b": b_pts[rows, pick],
            "l": l_v[rows, pick],
            "r": r_v[rows, pick],
            "elbow": elbow[rows, pick],
            "c": c_pts,
            "axis": i,
        }

    reach = legs[1]["reachable"] & legs[2]["reachable"]
    l1, r1, b1 = legs[1]["l"], legs[1]["r"], legs[1]["b"]
    l2, r2, b2 = legs[2]["l"], legs[2]["r"], legs[2]["b"]
    u1, u2 = np.cross(c1, r1), np.cross(c2, r2)
    n1 = np.linalg.norm(u1, axis=1)
    n2 = np.linalg.norm(u2, axis=1)
    det_a = u1[:, 0] * u2[:, 1] - u1[:, 1] * u2[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        det_a_n = np.where((n1 > 0) & (n2 > 0), det_a / (n1 * n2), 0.0)
        b11, b22 = legs[1]["elbow"], legs[2]["elbow"]
        m1 = np.linalg.norm(l1, axis=1) * np.linalg.norm(r1, axis=1)
        m2 = np.linalg.norm(l2, axis=1) * np.linalg.norm(r2, axis=1)
        det_b_n = (b11 / m1) * (b22 / m2)

        jn = np.empty((n, 3, 3))
        jn[:, 0, :] = u1 / b11[:, None]
        jn[:, 1, :] = u2 / b22[:, None]
        jn[:, 2, :] = [0.0, 0.0, 1.0]
        je = jn.copy()
        tanphi = np.where(np.abs(cph) > 1e-9, sph / np.where(np.abs(cph) > 1e-9, cph, 1.0), np.inf)
        je[:, 2, 0] = c3 * tanphi
        je[:, 2, 1] = s3 * tanphi
        kn = condition_number(jn)
        ke = condition_number(je)

    sl = slice(lo, lo + n)
    out["reachable"][sl] = reach
    out["theta"][sl, 0] = np.where(reach, legs[1]["theta"], np.nan)
    out["theta"][sl, 1] = np.where(reach, legs[2]["theta"], np.nan)
    out["theta"][sl, 2] = np.where(reach, t3, np.nan)
    out["elbow_signs"][sl, 0] = np.where(reach, np.sign(b11), 0)
    out["elbow_signs"][sl, 1] = np.where(reach, np.sign(b22), 0)
    out["det_a_norm"][sl] = np.where(reach, det_a_n, np.nan)
    out["det_b_norm"][sl] = np.where(reach, det_b_n, np.nan)
    out["kappa_nominal"][sl] = np.where(reach, kn, np.nan)
    out["kappa_exact"][sl] = np.where(reach, ke, np.nan)

    margin = np.minimum(np.abs(det_a_n), np.abs(det_b_n))
    for k in range(n):
        if not reach[k]:
            out["kind"][lo + k] = KIND_UNREACHABLE
        elif margin[k] >= threshold:
            out["kind"][lo + k] = "none"
        else:
            # rare: defer to the scalar classifier for the exact sub-case
            j = JointAngles(out["theta"][lo + k, 0], out["theta"][lo + k, 1],
                            out["theta"][lo + k, 2])
            o = Orientation(t3[k], phi[k], psi[k])
            pose = assemble_pose(m, j, o, tol=1e-8)
            out["kind"][lo + k] = classify_singularity(pose, m, threshold).tag()


def sweep_workspace(m: MechanismParams, box: OrientationBox,
                    threshold: float = SINGULARITY_THRESHOLD) -> WorkspaceMap:
    """Evaluate every cell of the box; failures mark cells, never abort."""
    yaw_ax, pitch_ax, roll_ax = box.axes()
    rr, pp, yy = np.meshgrid(roll_ax, pitch_ax, yaw_ax, indexing="ij")
    yaw_off = yy.ravel()
    pitch = pp.ravel()
    roll = rr.ravel()
    n = yaw_off.shape[0]
    t3 = NEUTRAL_YAW + yaw_off

    out = {
        "reachable": np.zeros(n, dtype=bool),
        "theta": np.full((n, 3), np.nan),
        "elbow_signs": np.zeros((n, 2), dtype=int),
        "det_a_norm": np.full(n, np.nan),
        "det_b_norm": np.full(n, np.nan),
        "kappa_nominal": np.full(n, np.nan),
        "kappa_exact": np.full(n, np.nan),
        "kind": np.empty(n, dtype=object),
    }

    workers = max(1, int(os.environ.get("WRISTKIN_THREADS", "1")))
    if workers == 1 or n < 4096:
        _evaluate_range(m, t3, pitch, roll, threshold, out, 0)
    else:
        bounds = np.linspace(0, n, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_evaluate_range, m, t3[a:b], pitch[a:b], roll[a:b],
                              threshold, out, a)
                    for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
            for f in futs:
                f.result()

    return WorkspaceMap(m, box, NEUTRAL_YAW, yaw_off, pitch, roll,
                        out["reachable"], out["theta"], out["elbow_signs"],
                        out["det_a_norm"], out["det_b_norm"],
                        out["kappa_nominal"], out["kappa_exact"],
                        out["kind"], threshold)


def summarize(wmap: WorkspaceMap) -> dict:
    """Extremes, means, worst cell, and coverage fractions."""
    n = wmap.yaw_off.shape[0]
    if n == 0:
        raise EmptyMapError("workspace map has no cells")
    reach = wmap.reachable
    n_reach = int(reach.sum())
    summary = {
        "cells": n,
        "fraction_reachable": n_reach / n,
        "threshold": wmap.threshold,
    }
    if n_reach == 0:
        summary.update({"fraction_singularity_free": 0.0})
        return summary
    margin = wmap.margin[reach]
    abs_det_a = np.abs(wmap.det_a_norm[reach])
    kn = wmap.kappa_nominal[reach]
    ke = wmap.kappa_exact[reach]
    worst_local = int(np.argmin(margin))
    worst = int(np.nonzero(reach)[0][worst_local])
    summary.update({
        "det_A_norm_abs": {"min": float(abs_det_a.min()),
                           "max": float(abs_det_a.max()),
                           "mean": float(abs_det_a.mean())},
        "margin": {"min": float(margin.min()), "max": float(margin.max()),
                   "mean": float(margin.mean())},
        "kappa_paper": {"min": float(kn.min()), "max": float(kn.max()),
                        "mean": float(kn.mean())},
        "kappa_exact": {"min": float(ke.min()), "max": float(ke.max()),
                        "mean": float(ke.mean())},
        "worst_cell": {
            "index": worst,
            "yaw_deg": math.degrees(wmap.yaw_off[worst]),
            "pitch_deg": math.degrees(wmap.pitch[worst]),
            "roll_deg": math.degrees(wmap.roll[worst]),
            "margin": float(wmap.margin[worst]),
        },
        "fraction_singularity_free":
            float((wmap.margin[reach] >= wmap.threshold).mean() * n_reach / n),
    })
    return summary


CSV_HEADER = ["yaw_deg", "pitch_deg", "roll_deg", "reachable",
              "theta1", "theta2", "theta3", "det_A_norm", "det_B_norm",
              "kappa_paper", "kappa_exact", "singularity_kind"]


def write_csv(wmap: WorkspaceMap, path) -> None:
    def fmt(x):
        return format(x, ".17g")

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        for k in range(wmap.yaw_off.shape[0]):
            w.writerow([
                fmt(math.degrees(wmap.yaw_off[k])),
                fmt(math.degrees(wmap.pitch[k])),
                fmt(math.degrees(wmap.roll[k])),
                "1" if wmap.reachable[k] else "0",
                fmt(wmap.theta[k, 0]), fmt(wmap.theta[k, 1]), fmt(wmap.theta[k, 2]),
                fmt(wmap.det_a_norm[k]), fmt(wmap.det_b_norm[k]),
                fmt(wmap.kappa_nominal[k]), fmt(wmap.kappa_exact[k]),
                wmap.kind[k],
            ])
