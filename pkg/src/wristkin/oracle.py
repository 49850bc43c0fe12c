"""Brute-force root finders used to validate every closed-form result.

These solvers only evaluate rod-closure residuals from the mechanism
geometry (scan + bisection / 2-D Newton); they share no solution
formulas with the kinematics module.  Double roots that only touch zero
are the documented residual risk of sign-change scanning; local-minimum
probing below recovers them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Orientation, wrap_angle
from .mechanism import (JointAngles, MechanismParams, anchor_points,
                        link_zero_direction, platform_points)

SCAN_SAMPLES_1D = 1_000_000
GRID_SAMPLES_2D = 2000
ROOT_TOL = 1e-12
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RootSet1D:
    """Sorted roots of one leg's closure residual over (-pi, pi]."""

    roots: tuple[float, ...]
    is_double: tuple[bool, ...]
    tol: float


def leg_residual_samples(m: MechanismParams, leg: int, o: Orientation,
                         thetas: np.ndarray) -> np.ndarray:
    """Vectorized e_leg(theta) = |C - B(theta)|^2 - rod^2."""
    a1, a2 = anchor_points(m)
    anchor = a1 if leg == 1 else a2
    c1, c2 = platform_points(m, o)
    target = c1 if leg == 1 else c2
    i = m.axis(leg)
    d0 = link_zero_direction(m, leg)
    e2 = np.cross(i, d0)
    th = np.asarray(thetas, dtype=float)
    b = (anchor[None, :]
         + m.link_length * (np.cos(th)[:, None] * d0[None, :]
                            + np.sin(th)[:, None] * e2[None, :]))
    d = target[None, :] - b
    return np.einsum("ij,ij->i", d, d) - m.rod_length ** 2


def _bisect_brackets(f, lo: np.ndarray, hi: np.ndarray, flo: np.ndarray,
                     tol: float) -> np.ndarray:
    lo, hi, flo = lo.copy(), hi.copy(), flo.copy()
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        left = flo * fm <= 0.0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
    return 0.5 * (lo + hi)


def bisect_leg_residual(m: MechanismParams, leg: int, o: Orientation,
                        samples: int = SCAN_SAMPLES_1D,
                        tol: float = ROOT_TOL) -> RootSet1D:
    """All roots of e_leg over (-pi, pi] by dense scan plus bisection.

    An empty set means the leg cannot reach this orientation.  Touching
    double roots (tangencies) are found by probing local minima of |e|
    and flagged is_double.
    """
    # one extra sample past pi closes the periodic window
    th = np.linspace(-math.pi, math.pi, samples + 1)
    e = leg_residual_samples(m, leg, o, th)
    f = lambda t: leg_residual_samples(m, leg, o, t)

    s = np.sign(e)
    # <= 0 keeps roots that land exactly on a grid node
    crossing = (s[:-1] * s[1:] <= 0.0) & ~((s[:-1] == 0.0) & (s[1:] == 0.0))
    idx = np.nonzero(crossing)[0]
    roots = list(_bisect_brackets(f, th[idx], th[idx + 1], e[idx], tol)) if idx.size else []
    doubles = [False] * len(roots)

    # tangency probe: interior local minima of e that dip near zero
    interior = np.nonzero((e[1:-1] < e[:-2]) & (e[1:-1] <= e[2:]))[0] + 1
    span = th[1] - th[0]
    for i in interior:
        if e[i] > 0.0 and e[i] < 1e-6:
            lo, hi = th[i] - span, th[i] + span
            for _ in range(80):
                third = (hi - lo) / 3.0
                if f(np.array([lo + third]))[0] < f(np.array([hi - third]))[0]:
                    hi = hi - third
                else:
                    lo = lo + third
            t = 0.5 * (lo + hi)
            if abs(f(np.array([t]))[0]) < RESIDUAL_TOL:
                roots.append(t)
                doubles.append(True)
        elif e[i] <= 0.0 and -e[i] < 1e-12 and not crossing[i - 1] and not crossing[i]:
            roots.append(th[i])
            doubles.append(True)

    if not roots:
        return RootSet1D((), (), tol)
    # roots closer than the merge radius are a discriminant-zero pair (the
    # residual only grazes zero there, splitting into two noisy crossings)
    merge_radius = max(2.0 * tol, 1e-6)
    order = np.argsort(roots)
    merged, mflags = [], []
    for k in order:
        t = float(wrap_angle(roots[k]))
        if merged and abs(t - merged[-1]) <= merge_radius:
            merged[-1] = 0.5 * (merged[-1] + t)
            mflags[-1] = True
            continue
        merged.append(t)
        mflags.append(doubles[k])
    # wrapped duplicates at +-pi
    if len(merged) > 1 and abs((merged[0] + 2.0 * math.pi) - merged[-1]) <= merge_radius:
        mflags[0] = mflags[0] or mflags[-1]
        merged.pop()
        mflags.pop()
    return RootSet1D(tuple(merged), tuple(mflags), tol)


def fk_residual_pair(m: MechanismParams, j: JointAngles, phi: float,
                     psi: float) -> tuple[float, float]:
    """(e1, e2) at orientation (theta3, phi, psi) with the joint elbows."""
    from .mechanism import rod_residuals
    return rod_residuals(m, j, Orientation(j.theta3, phi, psi))


def grid_fk_roots(m: MechanismParams, j: JointAngles,
                  grid: int = GRID_SAMPLES_2D) -> list[tuple[float, float]]:
    """All simultaneous roots of (e1, e2) on (phi, psi) in (-pi, pi]^2.

    e1 depends only on phi (the platform x point never feels roll), so
    candidate cells are sign changes of e1 in phi crossed with sign
    changes of e2 among cell corners; each candidate is polished by 2-D
    Newton with finite-difference partials.
    """
    a1, a2 = anchor_points(m)
    c3, s3 = math.cos(j.theta3), math.sin(j.theta3)
    p = m.platform_radius
    rho2 = m.rod_length ** 2

    def elbow(leg, theta):
        anchor = a1 if leg == 1 else a2
        d0 = link_zero_direction(m, leg)
        e2ax = np.cross(m.axis(leg), d0)
        return anchor + m.link_length * (math.cos(theta) * d0 + math.sin(theta) * e2ax)

    b1 = elbow(1, j.theta1)
    b2 = elbow(2, j.theta2)

    phis = np.linspace(-math.pi, math.pi, grid + 1)
    psis = np.linspace(-math.pi, math.pi, grid + 1)
    cp, sp = np.cos(phis), np.sin(phis)
    cq, sq = np.cos(psis), np.sin(psis)

    # C1 = p*(c3*cp, s3*cp, -sp); e1 is 1-D in phi
    d1x = p * c3 * cp - b1[0]
    d1y = p * s3 * cp - b1[1]
    d1z = -p * sp - b1[2]
    e1 = d1x ** 2 + d1y ** 2 + d1z ** 2 - rho2

    # C2 = cos(psi)*(Rz Ry y) + sin(psi)*(Rz Ry z) scaled by p, so
    # e2 = |C2|^2 + |B2|^2 - 2 C2.B2 - rho^2 separates into 1-D factors
    y_dot = -s3 * b2[0] + c3 * b2[1]
    w_dot = (c3 * b2[0] + s3 * b2[1]) * sp + b2[2] * cp
    k2 = p * p + float(b2 @ b2) - rho2
    e2 = k2 - 2.0 * p * (y_dot * cq)[None, :] - 2.0 * p * np.outer(w_dot, sq)

    s1 = np.sign(e1)
    phi_cross = np.nonzero((s1[:-1] * s1[1:] <= 0.0)
                           & ~((s1[:-1] == 0.0) & (s1[1:] == 0.0)))[0]
    cands = []
    for i in phi_cross:
        corners_neg = (np.minimum.reduce([e2[i, :-1], e2[i, 1:],
                                          e2[i + 1, :-1], e2[i + 1, 1:]]) <= 0.0)
        corners_pos = (np.maximum.reduce([e2[i, :-1], e2[i, 1:],
                                          e2[i + 1, :-1], e2[i + 1, 1:]]) >= 0.0)
        for k in np.nonzero(corners_neg & corners_pos)[0]:
            cands.append((0.5 * (phis[i] + phis[i + 1]),
                          0.5 * (psis[k] + psis[k + 1])))

    def res(x):
        return np.array(fk_residual_pair(m, j, x[0], x[1]))

    roots = []
    h = 1e-7
    for x0 in cands:
        x = np.array(x0)
        f0 = res(x)
        # Newton converges only linearly onto double roots, so iterate to a
        # tight residual with a stall check instead of a fixed small count.
        for _ in range(80):
            if max(abs(f0[0]), abs(f0[1])) < 1e-13:
                break
            jac = np.empty((2, 2))
            for k in range(2):
                dx = np.zeros(2)
                dx[k] = h
                jac[:, k] = (res(x + dx) - res(x - dx)) / (2.0 * h)
            try:
                step = np.linalg.solve(jac, f0)
            except np.linalg.LinAlgError:
                break
            if np.linalg.norm(step) > 1.0:
                step *= 1.0 / np.linalg.norm(step)
            x = x - step
            f0 = res(x)
            if np.linalg.norm(step) < 1e-12:
                break
        if max(abs(f0[0]), abs(f0[1])) < RESIDUAL_TOL:
            roots.append((float(wrap_angle(x[0])), float(wrap_angle(x[1]))))

    # distinct simple roots sit far above this radius; only the fuzz around
    # a double root collapses
    uniq = []
    for r in sorted(roots):
        if not any(abs(wrap_angle(r[0] - u[0])) < 1e-6
                   and abs(wrap_angle(r[1] - u[1])) < 1e-6 for u in uniq):
            uniq.append(r)
    return uniq
