"""Rotation parametrization and angular-rate maps.

Orientation is the intrinsic z-y'-x'' sequence: yaw about the fixed z
axis, pitch about the once-rotated y axis, roll about the twice-rotated
x axis.  The parametrization degenerates when cos(pitch) = 0; pitch is
recovered in [-pi/2, pi/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GimbalLockError, NotARotationError

GIMBAL_COS_TOL = 1e-9
ROTATION_TOL = 1e-9

Z_AXIS = np.array([0.0, 0.0, 1.0])


def wrap_angle(a):
    """Wrap an angle or array of angles to (-pi, pi]."""
    return -(np.remainder(-np.asarray(a) + math.pi, 2.0 * math.pi) - math.pi)


@dataclass(frozen=True)
class Orientation:
    """Platform attitude as (yaw, pitch, roll) in radians."""

    yaw: float
    pitch: float
    roll: float

    def as_tuple(self):
        return (self.yaw, self.pitch, self.roll)

    def matrix(self) -> np.ndarray:
        return rotation_from_rpy(self)


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_rpy(o: Orientation) -> np.ndarray:
    """Rotation matrix R(z, yaw) R(y', pitch) R(x'', roll)."""
    return rot_z(o.yaw) @ rot_y(o.pitch) @ rot_x(o.roll)


def _check_rotation(m: np.ndarray, tol: float = ROTATION_TOL) -> None:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise NotARotationError(f"expected 3x3 matrix, got shape {m.shape}")
    err = np.linalg.norm(m.T @ m - np.eye(3))
    if err > tol:
        raise NotARotationError(f"orthogonality defect {err:.3e} exceeds {tol:.1e}")
    if np.linalg.det(m) < 0.0:
        raise NotARotationError("determinant is negative (improper rotation)")


def rpy_from_rotation(m: np.ndarray) -> Orientation:
    """Invert rotation_from_rpy; pitch returned in [-pi/2, pi/2].

    Raises GimbalLockError when |cos(pitch)| < 1e-9 (yaw and roll are
    not separable there) and NotARotationError on bad input.
    """
    _check_rotation(m)
    sp = -float(m[2, 0])
    sp = max(-1.0, min(1.0, sp))
    pitch = math.asin(sp)
    cp = math.sqrt(max(0.0, 1.0 - sp * sp))
    if cp < GIMBAL_COS_TOL:
        raise GimbalLockError("cos(pitch) ~ 0: yaw/roll not separable")
    yaw = math.atan2(m[1, 0], m[0, 0])
    roll = math.atan2(m[2, 1], m[2, 2])
    return Orientation(yaw, pitch, roll)


def rate_axes(o: Orientation) -> np.ndarray:
    """Columns (z, y', x''): instantaneous axes of the yaw/pitch/roll rates."""
    cy, sy = math.cos(o.yaw), math.sin(o.yaw)
    cp, sp = math.cos(o.pitch), math.sin(o.pitch)
    y1 = np.array([-sy, cy, 0.0])
    x2 = np.array([cy * cp, sy * cp, -sp])
    return np.column_stack([Z_AXIS, y1, x2])


def rpy_rates_to_angular_velocity(o: Orientation, rates) -> np.ndarray:
    """omega = yaw_rate * z + pitch_rate * y' + roll_rate * x''."""
    return rate_axes(o) @ np.asarray(rates, dtype=float)


def angular_velocity_to_rpy_rates(o: Orientation, omega) -> tuple[float, float, float]:
    """Invert the rate composition for (yaw_rate, pitch_rate, roll_rate)."""
    cp = math.cos(o.pitch)
    if abs(cp) < GIMBAL_COS_TOL:
        raise GimbalLockError("cos(pitch) ~ 0: rate map singular")
    rates = np.linalg.solve(rate_axes(o), np.asarray(omega, dtype=float))
    return (float(rates[0]), float(rates[1]), float(rates[2]))


def yaw_rate_row(o: Orientation) -> np.ndarray:
    """Row vector mapping omega to the exact yaw rate: (cy*t, sy*t, 1), t = tan(pitch).

    This is the first row of the inverse of rate_axes; it reduces to
    (0, 0, 1) only when sin(pitch) = 0.
    """
    cp = math.cos(o.pitch)
    if abs(cp) < GIMBAL_COS_TOL:
        raise GimbalLockError("cos(pitch) ~ 0: yaw-rate row singular")
    t = math.tan(o.pitch)
    return np.array([math.cos(o.yaw) * t, math.sin(o.yaw) * t, 1.0])


def rotate_about(axis, angle: float, v) -> np.ndarray:
    """Rodrigues rotation of v about a unit axis."""
    axis = np.asarray(axis, dtype=float)
    v = np.asarray(v, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * (axis @ v) * (1.0 - c)


def apply_world_rotation(axis_angle, m: np.ndarray) -> np.ndarray:
    """Left-multiply m by the rotation exp([w]x) for a world-frame increment w."""
    w = np.asarray(axis_angle, dtype=float)
    th = float(np.linalg.norm(w))
    if th < 1e-300:
        return np.array(m, dtype=float)
    k = w / th
    kx = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    r = np.eye(3) + math.sin(th) * kx + (1.0 - math.cos(th)) * (kx @ kx)
    return r @ np.asarray(m, dtype=float)
