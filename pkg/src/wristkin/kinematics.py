"""Closed-form direct and inverse kinematics with tan-half-angle
substitutions, full solution enumeration, branch selection, and a Newton
fallback for variants without the published direct closed form.

Every leg-closure equation reduces to a*cos(t) + b*sin(t) + c = 0.  The
tan-half substitution turns it into a quadratic whose T -> infinity root
(t = pi) the substitution drops, so t = pi is always tested explicitly.
Each root gets one Newton polish on the true residual to absorb
cancellation near double roots.

Branch conventions: the two roots of one leg always carry opposite
sign((l x r) . i) (they meet at serial singularities); the working
assembly is the one with both signs positive, calibrated at the neutral
posture where both equal +sqrt(2)/2 scaled.  The dot products l.r and
r2.p2 look like natural branch selectors but are degenerate here: the
closure constraint freezes them (l.r = (|C-A|^2 - l^2 - rho^2)/2 and
r2.p2 = 1 - |B2|^2/2 on the unit mechanism), so they are carried as
data only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateQuadraticError, NoConvergenceError,
                     NoRealSolutionError, UnreachableError)
from .geometry import Orientation, rot_y, rot_z, wrap_angle
from .mechanism import (JointAngles, MechanismParams, PoseSolution, Variant,
                        anchor_points, assemble_pose, elbow_point,
                        link_zero_direction, neutral_orientation,
                        platform_points, rod_residuals)

RESIDUAL_TOL = 1e-10
COEFF_TOL = 1e-12
SPURIOUS_PITCH = math.pi / 2.0

# Working assembly: both elbow signs positive (reference posture has
# (l_i x r_i) . i_i > 0 on both legs).
WORKING_ELBOW_SIGNS = (1, 1)


@dataclass(frozen=True)
class FkSolutionSet:
    """All direct-kinematics assemblies for one joint vector."""

    solutions: tuple[PoseSolution, ...]
    spurious_count: int

    @property
    def working(self) -> PoseSolution | None:
        return _select_working(self.solutions, skip_spurious=True)

    def spurious(self) -> tuple[PoseSolution, ...]:
        return tuple(s for s in self.solutions if is_spurious(s))


@dataclass(frozen=True)
class IkSolutionSet:
    """All inverse-kinematics assemblies for one orientation."""

    solutions: tuple[PoseSolution, ...]
    leg_counts: tuple[int, int]
    leg_doubles: tuple[bool, bool]

    @property
    def working(self) -> PoseSolution | None:
        return _select_working(self.solutions, skip_spurious=False)


def is_spurious(sol: PoseSolution) -> bool:
    return abs(sol.orientation.pitch - SPURIOUS_PITCH) < 1e-9


def _select_working(solutions, skip_spurious: bool) -> PoseSolution | None:
    for s in solutions:
        if skip_spurious and is_spurious(s):
            continue
        if s.elbow_signs == WORKING_ELBOW_SIGNS:
            return s
    return None


def solve_cos_sin(a: float, b: float, c: float) -> tuple[list[float], bool]:
    """Roots of a*cos(t) + b*sin(t) + c = 0 in (-pi, pi].

    Returns (roots, is_double).  Raises DegenerateQuadraticError when all
    coefficients vanish (indeterminate equation).  An empty root list
    means no real solution.
    """
    scale = max(abs(a), abs(b), abs(c))
    if scale < COEFF_TOL:
        raise DegenerateQuadraticError("all trig coefficients vanish")
    an, bn, cn = a / scale, b / scale, c / scale

    qa = cn - an          # leading tan-half coefficient
    qb = 2.0 * bn
    qc = cn + an

    roots: list[float] = []
    double = False
    if abs(qa) < COEFF_TOL:
        # tan-half blind spot: t = pi is a root exactly when qa = 0
        roots.append(math.pi)
        if abs(qb) >= COEFF_TOL:
            roots.append(2.0 * math.atan(-qc / qb))
        else:
            double = True
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc < -1e-12:
            return ([], False)
        if disc <= 1e-12:
            # within noise of a tangency: report the vertex as one double root
            roots.append(2.0 * math.atan(-qb / (2.0 * qa)))
            double = True
        else:
            sq = math.sqrt(disc)
            # sign-aware quadratic: avoid cancellation in -qb +- sq
            if qb >= 0.0:
                q = -(qb + sq) / 2.0
            else:
                q = -(qb - sq) / 2.0
            roots.append(2.0 * math.atan(q / qa))
            roots.append(2.0 * math.atan(qc / q))

    polished = []
    for t in roots:
        f = a * math.cos(t) + b * math.sin(t) + c
        df = -a * math.sin(t) + b * math.cos(t)
        if abs(df) > 1e-6 * scale:
            t -= f / df
        polished.append(float(wrap_angle(t)))

    polished = sorted(set(polished))
    # roots this close are a tangency pair split by rounding noise
    if len(polished) == 2 and abs(polished[1] - polished[0]) < 1e-6:
        polished = [0.5 * (polished[0] + polished[1])]
        double = True
    return (polished, double)


def ik_leg_coefficients(m: MechanismParams, leg: int,
                        o: Orientation) -> tuple[float, float, float]:
    """Trig coefficients of the leg's closure  a*cos + b*sin + c = 0."""
    a1, a2 = anchor_points(m)
    anchor = a1 if leg == 1 else a2
    c1, c2 = platform_points(m, o)
    target = c1 if leg == 1 else c2
    i = m.axis(leg)
    d0 = link_zero_direction(m, leg)
    v = target - anchor
    ca = -2.0 * m.link_length * float(v @ d0)
    cb = -2.0 * m.link_length * float(v @ np.cross(i, d0))
    cc = float(v @ v) + m.link_length ** 2 - m.rod_length ** 2
    return (ca, cb, cc)


def ik_leg_roots(m: MechanismParams, leg: int, o: Orientation) -> tuple[list[float], bool]:
    roots, double = solve_cos_sin(*ik_leg_coefficients(m, leg, o))
    return (roots, double)


def solve_ik(m: MechanismParams, o: Orientation) -> IkSolutionSet:
    """All joint-angle assemblies reaching orientation o.

    theta3 is the yaw coordinate itself; legs 1 and 2 contribute up to
    two roots each.  Raises UnreachableError when a leg has none.
    """
    roots1, dbl1 = ik_leg_roots(m, 1, o)
    roots2, dbl2 = ik_leg_roots(m, 2, o)
    if not roots1:
        raise UnreachableError("leg 1 cannot reach this orientation")
    if not roots2:
        raise UnreachableError("leg 2 cannot reach this orientation")
    sols = []
    for t1 in roots1:
        for t2 in roots2:
            j = JointAngles(t1, t2, o.yaw)
            e1, e2 = rod_residuals(m, j, o)
            if max(abs(e1), abs(e2)) < RESIDUAL_TOL:
                sols.append(assemble_pose(m, j, o, tol=RESIDUAL_TOL))
    if not sols:
        raise UnreachableError("no root combination closes both rods")
    sols.sort(key=lambda s: (s.joints.theta1, s.joints.theta2))
    return IkSolutionSet(tuple(sols), (len(roots1), len(roots2)), (dbl1, dbl2))


def enumerate_branches(m: MechanismParams, o: Orientation):
    """Map elbow-sign pair -> JointAngles over the IK solution set.

    Keys are (sign((l1 x r1).i1), sign((l2 x r2).i2)); a 0 entry marks a
    double root (serial singularity of that leg).  Returns the mapping
    and the per-leg double-root flags.
    """
    ik = solve_ik(m, o)
    mapping = {}
    for s in ik.solutions:
        mapping[s.elbow_signs] = s.joints
    return mapping, ik.leg_doubles


# -- direct kinematics ---------------------------------------------------

def _fk_pitch_coefficients(m: MechanismParams, j: JointAngles):
    """Leg-1 closure as a function of pitch only (the platform x point
    never feels roll):  a*cos(phi) + b*sin(phi) + c = 0."""
    b1 = elbow_point(m, 1, j.theta1)
    p = m.platform_radius
    c3, s3 = math.cos(j.theta3), math.sin(j.theta3)
    # C1 = p*(cos(phi)*(c3, s3, 0) + sin(phi)*(0, 0, -1))
    ca = -2.0 * p * (c3 * b1[0] + s3 * b1[1])
    cb = 2.0 * p * b1[2]
    cc = p * p + float(b1 @ b1) - m.rod_length ** 2
    return (ca, cb, cc)


def _fk_roll_coefficients(m: MechanismParams, j: JointAngles, phi: float):
    """Leg-2 closure at fixed pitch as a function of roll."""
    b2 = elbow_point(m, 2, j.theta2)
    p = m.platform_radius
    rzy = rot_z(j.theta3) @ rot_y(phi)
    # C2 = p*(cos(psi) * rzy[:,1] + sin(psi) * rzy[:,2])
    ca = -2.0 * p * float(rzy[:, 1] @ b2)
    cb = -2.0 * p * float(rzy[:, 2] @ b2)
    cc = p * p + float(b2 @ b2) - m.rod_length ** 2
    return (ca, cb, cc)


def solve_fk(m: MechanismParams, j: JointAngles,
             seed: Orientation | None = None) -> FkSolutionSet:
    """All platform orientations for joint vector j.

    The closed form (pitch quadratic with its universal pitch = pi/2
    root, then a roll quadratic per pitch branch) applies to the
    parallel-actuator variant; other variants route to the Newton
    solver, seeded at the neutral posture unless a seed is given.
    """
    if m.variant is not Variant.PARALLEL_ACTUATORS:
        sol = solve_fk_numeric(m, j, seed or neutral_orientation(m))
        return FkSolutionSet((sol,), 1 if is_spurious(sol) else 0)

    phis, _ = solve_cos_sin(*_fk_pitch_coefficients(m, j))
    sols = []
    spurious = 0
    for phi in phis:
        roots, _ = solve_cos_sin(*_fk_roll_coefficients(m, j, phi))
        for psi in roots:
            o = Orientation(j.theta3, phi, psi)
            e1, e2 = rod_residuals(m, j, o)
            if max(abs(e1), abs(e2)) >= RESIDUAL_TOL:
                continue
            sol = assemble_pose(m, j, o, tol=RESIDUAL_TOL)
            sols.append(sol)
            if is_spurious(sol):
                spurious += 1
    if not sols:
        raise NoRealSolutionError("no real assembly for these joint angles")
    sols.sort(key=lambda s: (s.orientation.pitch, s.orientation.roll))
    return FkSolutionSet(tuple(sols), spurious)


def solve_fk_numeric(m: MechanismParams, j: JointAngles,
                     seed: Orientation, max_iter: int = 50) -> PoseSolution:
    """Newton iteration on the two closure residuals over (pitch, roll).

    The seed must lie in the basin of the intended assembly (callers
    track trajectories and pass the previous point).
    """
    x = np.array([seed.pitch, seed.roll], dtype=float)
    h = 1e-7

    def res(v):
        return np.array(rod_residuals(m, j, Orientation(j.theta3, v[0], v[1])))

    f = res(x)
    for _ in range(max_iter):
        if max(abs(f[0]), abs(f[1])) < RESIDUAL_TOL:
            o = Orientation(j.theta3, float(wrap_angle(x[0])), float(wrap_angle(x[1])))
            return assemble_pose(m, j, o, tol=RESIDUAL_TOL)
        jac = np.empty((2, 2))
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = h
            jac[:, k] = (res(x + dx) - res(x - dx)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            raise NoConvergenceError("singular iteration matrix",
                                     last_iterate=tuple(x), residual=tuple(f))
        x = x - step
        f = res(x)
    raise NoConvergenceError(f"no convergence in {max_iter} iterations",
                             last_iterate=tuple(x), residual=tuple(f))
