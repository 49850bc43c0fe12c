"""Anguilliform traveling-wave commands for a vertebra chain and their
validation against the wrist workspace and rate limits.

The wave model is a single harmonic with a tabulated amplitude envelope:
yaw_k(t) = A(s_k) * sin(2*pi*(f*t - s_k/lambda)), clamped to the command
envelope.  Commands are offsets from the neutral posture.  The wave
shape itself is plumbing; validation asserts only properties that do not
depend on it (periodicity, phase lag, clamping, closure, rates).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .differential import build_jacobians, classify_singularity
from .errors import BranchDiscontinuityError, SerialSingularError, UnreachableError
from .geometry import Orientation, rpy_rates_to_angular_velocity, wrap_angle
from .kinematics import solve_ik
from .mechanism import (ENVELOPE_PITCH, ENVELOPE_ROLL, ENVELOPE_YAW,
                        MechanismParams, NEUTRAL_YAW)

DEFAULT_AMPLITUDE_TABLE = ((0.0, math.radians(10.0)), (1.0, math.radians(30.0)))


@dataclass(frozen=True)
class GaitParams:
    """Traveling-wave parameters; lengths in mm, angles in radians.

    The numeric defaults (frequency, wavelength, amplitude growth toward
    the tail) are placeholders: published kinematic tables for the eel
    are not reproduced here, and nothing downstream asserts the wave
    shape itself.  roll_gain couples roll to the pitch-command rate and
    defaults to 0 (roll commanded directly by the table, here none).
    """

    vertebra_count: int = 10
    body_length_mm: float = 1500.0
    vertebra_thickness_mm: float = 100.0
    cycle_frequency_hz: float = 1.0
    wavelength_fraction: float = 1.0
    yaw_amplitude_table: tuple[tuple[float, float], ...] = DEFAULT_AMPLITUDE_TABLE
    pitch_offset: float = 0.0
    roll_gain: float = 0.0

    def __post_init__(self):
        if self.vertebra_count < 1:
            raise ValueError("vertebra_count must be >= 1")
        for s, _amp in self.yaw_amplitude_table:
            if not 0.0 <= s <= 1.0:
                raise ValueError("amplitude table arc positions must lie in [0, 1]")
        # amplitudes beyond the command envelope are allowed here: commands
        # are clamped, and the validator reports each breach as a violation

    def arc_position(self, k: int) -> float:
        """Arc position s in [0, 1] of vertebra k (1-based, head to tail)."""
        if not 1 <= k <= self.vertebra_count:
            raise ValueError(f"vertebra index {k} out of range")
        return (k - 0.5) / self.vertebra_count

    def amplitude(self, s: float) -> float:
        tab = np.asarray(self.yaw_amplitude_table)
        return float(np.interp(s, tab[:, 0], tab[:, 1]))


def _raw_command(g: GaitParams, k: int, t: float) -> tuple[float, float, float]:
    s = g.arc_position(k)
    phase = 2.0 * math.pi * (g.cycle_frequency_hz * t - s / g.wavelength_fraction)
    dyaw = g.amplitude(s) * math.sin(phase)
    dpitch = g.pitch_offset
    # pitch command is constant, so its rate (and the coupled roll) is zero
    droll = g.roll_gain * 0.0
    return (dyaw, dpitch, droll)


def gait_command(g: GaitParams, k: int, t: float) -> tuple[float, float, float]:
    """Clamped (yaw, pitch, roll) command offsets for vertebra k at time t."""
    dyaw, dpitch, droll = _raw_command(g, k, t)
    return (max(-ENVELOPE_YAW, min(ENVELOPE_YAW, dyaw)),
            max(-ENVELOPE_PITCH, min(ENVELOPE_PITCH, dpitch)),
            max(-ENVELOPE_ROLL, min(ENVELOPE_ROLL, droll)))


def gait_orientation(g: GaitParams, k: int, t: float) -> Orientation:
    """Raw platform orientation commanded for vertebra k at time t."""
    dyaw, dpitch, droll = gait_command(g, k, t)
    return Orientation(NEUTRAL_YAW + dyaw, dpitch, droll)


def gait_command_rates(g: GaitParams, k: int, t: float) -> tuple[float, float, float]:
    """Analytic command rates; zero where a command sits on its clamp."""
    s = g.arc_position(k)
    f = g.cycle_frequency_hz
    phase = 2.0 * math.pi * (f * t - s / g.wavelength_fraction)
    amp = g.amplitude(s)
    dyaw = amp * math.sin(phase)
    rate = amp * math.cos(phase) * 2.0 * math.pi * f
    if abs(dyaw) >= ENVELOPE_YAW:
        rate = 0.0
    return (rate, 0.0, 0.0)


@dataclass
class TrajectoryReport:
    gait: GaitParams
    samples_per_cycle: int
    times: np.ndarray                   # (ns,)
    commands: np.ndarray                # (nv, ns, 3) offsets
    joints: np.ndarray                  # (nv, ns, 3)
    margins: np.ndarray                 # (nv, ns)
    kappa: np.ndarray                   # (nv, ns) kappa of the exact J^-1
    rates_fd: np.ndarray                # (nv, ns, 3) centered, periodic
    rates_predicted: np.ndarray         # (nv, ns, 3) Jinv_exact . omega
    yaw_rate_ratio: np.ndarray          # (nv, ns) theta1_dot / omega_z
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_trajectory(m: MechanismParams, g: GaitParams,
                        samples_per_cycle: int,
                        threshold: float = 1e-6) -> TrajectoryReport:
    """Solve one gait cycle for every vertebra and collect diagnostics.

    Violations (unreachable sample, singular sample, envelope breach)
    are recorded, never raised.  BranchDiscontinuityError is raised only
    if the IK branch flags flip without a singular sample in between.
    """
    if samples_per_cycle < 8:
        raise ValueError("samples_per_cycle must be >= 8")
    nv, ns = g.vertebra_count, samples_per_cycle
    period = 1.0 / g.cycle_frequency_hz
    times = np.arange(ns) * (period / ns)

    commands = np.zeros((nv, ns, 3))
    joints = np.full((nv, ns, 3), np.nan)
    margins = np.full((nv, ns), np.nan)
    kappa = np.full((nv, ns), np.nan)
    rates_pred = np.full((nv, ns, 3), np.nan)
    ratio = np.full((nv, ns), np.nan)
    violations = []

    for kv in range(1, nv + 1):
        prev = None
        prev_flags = None
        flags_flipped_at = None
        for si, t in enumerate(times):
            raw = _raw_command(g, kv, t)
            cmd = gait_command(g, kv, t)
            commands[kv - 1, si] = cmd
            if (abs(raw[0]) > ENVELOPE_YAW + 1e-12
                    or abs(raw[1]) > ENVELOPE_PITCH + 1e-12
                    or abs(raw[2]) > ENVELOPE_ROLL + 1e-12):
                violations.append((kv, si, "envelope", raw))
            o = gait_orientation(g, kv, t)
            try:
                ik = solve_ik(m, o)
            except UnreachableError:
                violations.append((kv, si, "unreachable", cmd))
                prev = None
                continue
            if prev is None:
                sol = ik.working or ik.solutions[0]
            else:
                sol = min(ik.solutions, key=lambda s: float(np.max(np.abs(
                    wrap_angle(s.joints.as_array() - prev)))))
            joints[kv - 1, si] = sol.joints.as_array()
            prev = sol.joints.as_array()

            singular_here = False
            try:
                dk = build_jacobians(sol, m)
                margins[kv - 1, si] = min(abs(dk.det_A_normalized),
                                          abs(dk.det_B_normalized))
                kappa[kv - 1, si] = dk.kappa_jinv_exact
                rates = gait_command_rates(g, kv, t)
                omega = rpy_rates_to_angular_velocity(o, rates)
                qdot = dk.jinv_exact @ omega
                rates_pred[kv - 1, si] = qdot
                ratio[kv - 1, si] = (qdot[0] / omega[2]
                                     if abs(omega[2]) > 1e-12 else np.nan)
            except SerialSingularError:
                singular_here = True
            if singular_here or margins[kv - 1, si] < threshold:
                violations.append((kv, si, "singular", cmd))
                singular_here = True

            if prev_flags is not None and sol.elbow_signs != prev_flags:
                if not singular_here:
                    flags_flipped_at = (kv, si)
            prev_flags = sol.elbow_signs
        if flags_flipped_at is not None:
            raise BranchDiscontinuityError(
                f"elbow flags flipped at vertebra {flags_flipped_at[0]}, "
                f"sample {flags_flipped_at[1]} with no singular sample")

    # centered finite differences, periodic in the cycle
    dt = period / ns
    rates_fd = (np.roll(joints, -1, axis=1) - np.roll(joints, 1, axis=1)) / (2.0 * dt)

    return TrajectoryReport(g, ns, times, commands, joints, margins, kappa,
                            rates_fd, rates_pred, ratio, violations)


CSV_HEADER = ["time", "vertebra", "yaw", "pitch", "roll",
              "theta1", "theta2", "theta3", "margin", "kappa", "viol_flags"]


def write_csv(report: TrajectoryReport, path) -> None:
    viol_map = {}
    for kv, si, kind, _ in report.violations:
        viol_map.setdefault((kv, si), []).append(kind)

    def fmt(x):
        return format(x, ".17g")

    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        nv, ns = report.joints.shape[:2]
        for kv in range(1, nv + 1):
            for si in range(ns):
                cmd = report.commands[kv - 1, si]
                jt = report.joints[kv - 1, si]
                w.writerow([
                    fmt(report.times[si]), kv,
                    fmt(cmd[0]), fmt(cmd[1]), fmt(cmd[2]),
                    fmt(jt[0]), fmt(jt[1]), fmt(jt[2]),
                    fmt(report.margins[kv - 1, si]),
                    fmt(report.kappa[kv - 1, si]),
                    ";".join(viol_map.get((kv, si), [])),
                ])


def gait_to_config(g: GaitParams) -> dict:
    return {
        "vertebra_count": g.vertebra_count,
        "body_length_mm": g.body_length_mm,
        "vertebra_thickness_mm": g.vertebra_thickness_mm,
        "cycle_frequency_hz": g.cycle_frequency_hz,
        "wavelength_fraction": g.wavelength_fraction,
        "yaw_amplitude_table": [list(row) for row in g.yaw_amplitude_table],
        "pitch_offset": g.pitch_offset,
        "roll_gain": g.roll_gain,
    }


def gait_from_config(cfg: dict) -> GaitParams:
    base = GaitParams()
    table = cfg.get("yaw_amplitude_table")
    return GaitParams(
        int(cfg.get("vertebra_count", base.vertebra_count)),
        float(cfg.get("body_length_mm", base.body_length_mm)),
        float(cfg.get("vertebra_thickness_mm", base.vertebra_thickness_mm)),
        float(cfg.get("cycle_frequency_hz", base.cycle_frequency_hz)),
        float(cfg.get("wavelength_fraction", base.wavelength_fraction)),
        tuple(tuple(map(float, row)) for row in table) if table else base.yaw_amplitude_table,
        float(cfg.get("pitch_offset", base.pitch_offset)),
        float(cfg.get("roll_gain", base.roll_gain)),
    )


def load_gait(path) -> GaitParams:
    with open(path) as f:
        return gait_from_config(json.load(f))


def save_gait(g: GaitParams, path) -> None:
    with open(path, "w") as f:
        json.dump(gait_to_config(g), f, indent=2)
        f.write("\n")
