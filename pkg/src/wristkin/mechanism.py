"""Vertebra mechanism geometry: design variants, characteristic points,
rod-closure residuals and assembled poses.

One vertebra is a spherical wrist: two revolute-universal-spherical legs
(actuated revolutes at A1/A2 with axes i1/i2, elbows B1/B2, platform
attachments C1/C2) plus a coaxial three-revolute leg through the center
O whose first joint is the actuated yaw.  All lengths are in the unit
mechanism scale; scale_mm converts at I/O boundaries only.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentAssemblyError
from .geometry import Orientation, rotate_about, rotation_from_rpy, wrap_angle

SQRT2 = math.sqrt(2.0)

# Command envelope per vertebra: +-30 deg yaw, +-15 deg pitch, +-4 deg roll,
# measured as offsets from the neutral posture.
ENVELOPE_YAW = math.radians(30.0)
ENVELOPE_PITCH = math.radians(15.0)
ENVELOPE_ROLL = math.radians(4.0)

# Yaw at which the two platform attachment points straddle the forward (y)
# axis symmetrically; the mechanism's working center.  The raw identity
# orientation is a serial singularity of the parallel-actuator variant, so
# swim commands are offsets about this posture.
NEUTRAL_YAW = math.pi / 4.0

# Elliptic cross-section of one vertebra, recorded as metadata only.
SECTION_ENVELOPE_MM = (150.0, 100.0)


class Variant(str, enum.Enum):
    PARALLEL_AXES = "parallel-axes"
    ORTHOGONAL_AXES = "orthogonal-axes"
    PARALLEL_ACTUATORS = "parallel-actuators"


@dataclass(frozen=True, eq=False)
class MechanismParams:
    """Geometry of one vertebra; immutable."""

    variant: Variant
    a: float
    b: float
    c: float
    link_length: float
    rod_length: float
    platform_radius: float
    i1: np.ndarray
    i2: np.ndarray
    scale_mm: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "i1", np.asarray(self.i1, dtype=float))
        object.__setattr__(self, "i2", np.asarray(self.i2, dtype=float))
        for name in ("i1", "i2"):
            n = np.linalg.norm(getattr(self, name))
            if abs(n - 1.0) > 1e-12:
                raise ValueError(f"{name} must be a unit vector (|{name}| = {n})")
        if min(self.link_length, self.rod_length, self.platform_radius) <= 0.0:
            raise ValueError("lengths must be positive")

    def axis(self, leg: int) -> np.ndarray:
        return self.i1 if leg == 1 else self.i2


@dataclass(frozen=True)
class JointAngles:
    """Actuated coordinates (theta1, theta2, theta3), wrapped to (-pi, pi]."""

    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        for name in ("theta1", "theta2", "theta3"):
            object.__setattr__(self, name, float(wrap_angle(getattr(self, name))))

    def as_array(self) -> np.ndarray:
        return np.array([self.theta1, self.theta2, self.theta3])


@dataclass(frozen=True)
class PoseSolution:
    """A consistent assembly: joints, orientation, all points, branch flags.

    elbow_signs are sign((l_i x r_i) . i_i) per leg: the two IK roots of a
    leg always carry opposite signs (they coalesce exactly at a serial
    singularity), unlike sign(l_i . r_i) which is the same for both roots.
    platform_sign is sign(r2 . p2), recorded as data; it is fixed by theta2
    alone (r2.p2 = 1 - |B2|^2/2 on the unit mechanism) and vanishes at the
    neutral posture.
    """

    joints: JointAngles
    orientation: Orientation
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    elbow_signs: tuple[int, int]
    platform_sign: int


def mechanism_from_variant(v: Variant) -> MechanismParams:
    """Published parameter set for a design variant (unit mechanism)."""
    v = Variant(v)
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([0.0, 1.0, 0.0])
    if v is Variant.PARALLEL_AXES:
        return MechanismParams(v, SQRT2 / 2.0, (SQRT2 - 2.0) / 2.0, -1.0,
                               1.0, 1.0, 1.0, x, x)
    if v is Variant.PARALLEL_ACTUATORS:
        return MechanismParams(v, SQRT2 / 2.0, 0.0, -1.0,
                               SQRT2 / 2.0, 1.0, 1.0, x, x)
    # Orthogonal axes: anchors coincide with O; lengths are a documented
    # choice (link = rod = sqrt2/2 closes on a unit platform radius).
    return MechanismParams(v, 0.0, 0.0, 0.0,
                           SQRT2 / 2.0, SQRT2 / 2.0, 1.0, x, y)


def anchor_points(m: MechanismParams) -> tuple[np.ndarray, np.ndarray]:
    """A1 = (a, b, c), A2 = (-a, b, c)."""
    return (np.array([m.a, m.b, m.c]), np.array([-m.a, m.b, m.c]))


def link_zero_direction(m: MechanismParams, leg: int) -> np.ndarray:
    """Unit link direction at theta = 0: normalize(z x i), so the
    parallel-actuator elbows reproduce B_i = A_i + l*(0, cos, sin)."""
    i = m.axis(leg)
    d = np.cross([0.0, 0.0, 1.0], i)
    n = np.linalg.norm(d)
    if n < 1e-9:
        d = np.cross([1.0, 0.0, 0.0], i)
        n = np.linalg.norm(d)
    return d / n


def elbow_point(m: MechanismParams, leg: int, theta: float) -> np.ndarray:
    """Elbow B_leg: the link end on the circle of radius link_length about
    axis i_leg through the anchor."""
    a1, a2 = anchor_points(m)
    anchor = a1 if leg == 1 else a2
    d0 = link_zero_direction(m, leg)
    return anchor + m.link_length * rotate_about(m.axis(leg), theta, d0)


def platform_points(m: MechanismParams, o: Orientation) -> tuple[np.ndarray, np.ndarray]:
    """C1, C2 in the fixed frame: the rotated mobile-frame unit points
    scaled by the platform radius."""
    q = rotation_from_rpy(o)
    return (m.platform_radius * q[:, 0], m.platform_radius * q[:, 1])


def rod_residuals(m: MechanismParams, j: JointAngles, o: Orientation) -> tuple[float, float]:
    """e_i = |C_i - B_i|^2 - rod_length^2; zero iff leg i closes."""
    c1, c2 = platform_points(m, o)
    b1 = elbow_point(m, 1, j.theta1)
    b2 = elbow_point(m, 2, j.theta2)
    rho2 = m.rod_length ** 2
    d1, d2 = c1 - b1, c2 - b2
    return (float(d1 @ d1 - rho2), float(d2 @ d2 - rho2))


def _sign(x: float, tol: float = 1e-12) -> int:
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


def branch_flags(m: MechanismParams, b1, b2, c1, c2) -> tuple[tuple[int, int], int]:
    a1, a2 = anchor_points(m)
    l1, l2 = b1 - a1, b2 - a2
    r1, r2 = c1 - b1, c2 - b2
    e1 = _sign(float(np.cross(l1, r1) @ m.i1))
    e2 = _sign(float(np.cross(l2, r2) @ m.i2))
    p2 = _sign(float(r2 @ c2))
    return ((e1, e2), p2)


def assemble_pose(m: MechanismParams, j: JointAngles, o: Orientation,
                  tol: float = 1e-8) -> PoseSolution:
    """Build a PoseSolution, checking the rod closure to tol."""
    e1, e2 = rod_residuals(m, j, o)
    if max(abs(e1), abs(e2)) > tol:
        raise InconsistentAssemblyError(
            f"rod residuals ({e1:.3e}, {e2:.3e}) exceed {tol:.1e}")
    a1, a2 = anchor_points(m)
    b1 = elbow_point(m, 1, j.theta1)
    b2 = elbow_point(m, 2, j.theta2)
    c1, c2 = platform_points(m, o)
    elbow_signs, platform_sign = branch_flags(m, b1, b2, c1, c2)
    return PoseSolution(j, o, a1, a2, b1, b2, c1, c2, elbow_signs, platform_sign)


def neutral_orientation(m: MechanismParams | None = None) -> Orientation:
    return Orientation(NEUTRAL_YAW, 0.0, 0.0)


def leg_vectors(m: MechanismParams, pose: PoseSolution, leg: int):
    """(l, r, p, i) for one leg of an assembled pose."""
    if leg == 1:
        l = pose.b1 - pose.a1
        r = pose.c1 - pose.b1
        p = pose.c1
    else:
        l = pose.b2 - pose.a2
        r = pose.c2 - pose.b2
        p = pose.c2
    return l, r, p, m.axis(leg)


# -- config file (JSON) -------------------------------------------------

def mechanism_to_config(m: MechanismParams) -> dict:
    return {
        "variant": m.variant.value,
        "a": m.a, "b": m.b, "c": m.c,
        "link_length": m.link_length,
        "rod_length": m.rod_length,
        "platform_radius": m.platform_radius,
        "i1": list(map(float, m.i1)),
        "i2": list(map(float, m.i2)),
        "scale_mm": m.scale_mm,
    }


def mechanism_from_config(cfg: dict) -> MechanismParams:
    base = mechanism_from_variant(Variant(cfg["variant"]))
    return MechanismParams(
        base.variant,
        float(cfg.get("a", base.a)),
        float(cfg.get("b", base.b)),
        float(cfg.get("c", base.c)),
        float(cfg.get("link_length", base.link_length)),
        float(cfg.get("rod_length", base.rod_length)),
        float(cfg.get("platform_radius", base.platform_radius)),
        np.asarray(cfg.get("i1", base.i1), dtype=float),
        np.asarray(cfg.get("i2", base.i2), dtype=float),
        float(cfg.get("scale_mm", base.scale_mm)),
    )


def load_mechanism(path) -> MechanismParams:
    with open(path) as f:
        return mechanism_from_config(json.load(f))


def save_mechanism(m: MechanismParams, path) -> None:
    with open(path, "w") as f:
        json.dump(mechanism_to_config(m), f, indent=2)
        f.write("\n")
