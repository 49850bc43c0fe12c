"""Analytic differential kinematics: the velocity equation A w = B qdot,
singularity detection and classification, condition numbers, isotropy
residuals, and the isotropic-configuration search.

Row i of A is (p_i x r_i)^T for the two RUS legs and (0, 0, 1) for the
coaxial yaw leg; B is diagonal with (l_i x r_i) . i_i and 1.  Two inverse
Jacobians are kept: the nominal one whose third row asserts that the yaw
joint rate equals the z angular velocity, and the exact one whose third
row is the full yaw-rate composition (they differ when sin(pitch) and
the roll rate are both nonzero); the gap is measured, never hidden.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import BranchJumpError, IsotropySearchError, SerialSingularError
from .geometry import (Orientation, apply_world_rotation, rpy_from_rotation,
                       wrap_angle, yaw_rate_row)
from .kinematics import solve_ik
from .mechanism import (MechanismParams, PoseSolution, Variant, leg_vectors,
                        neutral_orientation)

Z = np.array([0.0, 0.0, 1.0])

SERIAL_TOL = 1e-9
SINGULARITY_THRESHOLD = 1e-6


@dataclass(frozen=True)
class DiffKinematics:
    A: np.ndarray
    B: np.ndarray
    jinv_nominal: np.ndarray
    jinv_exact: np.ndarray
    det_A: float
    det_B: float
    det_A_normalized: float
    det_B_normalized: float
    kappa_A: float
    kappa_jinv_nominal: float
    kappa_jinv_exact: float

    @property
    def condition_number(self) -> float:
        return self.kappa_A


@dataclass(frozen=True)
class SingularityReport:
    kind: str            # "none" | "parallel_coplanar" | "parallel_aligned"
    #                      | "serial_aligned"
    leg: int | None
    pair: str | None     # for serial: "l_r" | "r_i" | "l_i" | "coplanar"
    margin: float
    det_A_normalized: float
    det_B_normalized: float

    @property
    def singular(self) -> bool:
        return self.kind != "none"

    def tag(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "parallel_coplanar":
            return "parallel_coplanar"
        if self.kind == "parallel_aligned":
            return f"parallel_aligned_leg{self.leg}"
        return f"serial_leg{self.leg}_{self.pair}"


@dataclass(frozen=True)
class IsotropyReport:
    """Magnitudes of every isotropy condition residual.

    a_residuals: p1.r1, p2.r2, |p| and |r| norm deviations, u1.u2,
    u1.z, u2.z (u_i = p_i x r_i; the last three make the rows of A an
    orthogonal frame).  b_residuals: l_i.r_i, l_i.i_i, |l| norm
    deviations, |B_ii - 1|.
    """

    a_residuals: dict
    b_residuals: dict
    dist_a_identity: float
    dist_b_identity: float
    kappa_a: float
    a_isotropic: bool
    b_isotropic: bool

    def max_a_residual(self) -> float:
        return max(self.a_residuals.values())

    def max_b_residual(self) -> float:
        return max(self.b_residuals.values())


def condition_number(mat: np.ndarray) -> float | np.ndarray:
    """2-norm condition number via analytic eigenvalues of the 3x3 Gram
    matrix (no general-purpose decomposition); +inf when the smallest
    singular value is below 1e-300.  Broadcasts over stacked (...,3,3)."""
    m = np.asarray(mat, dtype=float)
    g = np.swapaxes(m, -1, -2) @ m
    # symmetric 3x3 eigenvalues, trigonometric form
    q = np.trace(g, axis1=-2, axis2=-1) / 3.0
    gq = g - q[..., None, None] * np.eye(3)
    p2 = np.einsum("...ij,...ij->...", gq, gq) / 6.0
    p = np.sqrt(np.maximum(p2, 0.0))
    safe_p = np.where(p > 0.0, p, 1.0)
    detb = np.linalg.det(gq / safe_p[..., None, None])
    r = np.clip(np.where(p > 0.0, detb / 2.0, 0.0), -1.0, 1.0)
    ang = np.arccos(r) / 3.0
    lmax = q + 2.0 * p * np.cos(ang)
    lmin = q + 2.0 * p * np.cos(ang + 2.0 * math.pi / 3.0)
    # the trig form leaves O(eps*|G|) noise in the small eigenvalue; when it
    # is tiny against lmax, lmin ~ det(G)/c1 is the well-conditioned value
    # (and vanishes exactly for clean rank deficiencies)
    c0 = np.linalg.det(g)
    c1 = (g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
          + g[..., 0, 0] * g[..., 2, 2] - g[..., 0, 2] * g[..., 2, 0]
          + g[..., 1, 1] * g[..., 2, 2] - g[..., 1, 2] * g[..., 2, 1])
    tiny = (lmin < 1e-6 * lmax) & (c1 > 0.0)
    lam = np.maximum(c0 / np.where(c1 > 0.0, c1, 1.0), 0.0)
    c2 = 3.0 * q
    for _ in range(2):
        # Newton on the characteristic polynomial; chi' ~ -c1 here, far
        # from degenerate because this branch only runs for isolated lmin
        chi = c0 - c1 * lam + c2 * lam * lam - lam ** 3
        dchi = -c1 + 2.0 * c2 * lam - 3.0 * lam * lam
        lam = np.where(np.abs(dchi) > 1e-300, lam - chi / np.where(dchi == 0.0, 1.0, dchi), lam)
    lmin = np.where(tiny, np.maximum(lam, 0.0), lmin)
    smax = np.sqrt(np.maximum(lmax, 0.0))
    smin = np.sqrt(np.maximum(lmin, 0.0))
    out = np.where(smin < 1e-300, np.inf, smax / np.where(smin < 1e-300, 1.0, smin))
    return float(out) if out.ndim == 0 else out


def build_jacobians(pose: PoseSolution, m: MechanismParams,
                    serial_tol: float = SERIAL_TOL) -> DiffKinematics:
    """Populate the velocity-equation matrices for a consistent pose.

    Raises SerialSingularError when |(l_i x r_i) . i_i| < serial_tol (B
    not invertible); the exception carries the partial record with A and
    its determinant still filled in.
    """
    l1, r1, p1, i1 = leg_vectors(m, pose, 1)
    l2, r2, p2, i2 = leg_vectors(m, pose, 2)
    u1, u2 = np.cross(p1, r1), np.cross(p2, r2)
    a_mat = np.vstack([u1, u2, Z])
    b11 = float(np.cross(l1, r1) @ i1)
    b22 = float(np.cross(l2, r2) @ i2)
    b_mat = np.diag([b11, b22, 1.0])

    det_a = float(np.linalg.det(a_mat))
    det_b = b11 * b22
    n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
    det_a_n = det_a / (n1 * n2) if n1 > 0.0 and n2 > 0.0 else 0.0
    m1 = np.linalg.norm(l1) * np.linalg.norm(r1)
    m2 = np.linalg.norm(l2) * np.linalg.norm(r2)
    det_b_n = det_b / (m1 * m2) if m1 > 0.0 and m2 > 0.0 else 0.0
    kappa_a = condition_number(a_mat)

    if min(abs(b11), abs(b22)) < serial_tol:
        partial = DiffKinematics(a_mat, b_mat, None, None, det_a, det_b,
                                 det_a_n, det_b_n, kappa_a, math.inf, math.inf)
        raise SerialSingularError(
            f"B diagonal ({b11:.3e}, {b22:.3e}) below {serial_tol:.1e}",
            partial=partial)

    jinv_nominal = np.vstack([u1 / b11, u2 / b22, Z])
    jinv_exact = np.vstack([u1 / b11, u2 / b22, yaw_rate_row(pose.orientation)])
    return DiffKinematics(a_mat, b_mat, jinv_nominal, jinv_exact,
                          det_a, det_b, det_a_n, det_b_n, kappa_a,
                          condition_number(jinv_nominal),
                          condition_number(jinv_exact))


def fd_jacobian(m: MechanismParams, pose: PoseSolution, h: float = 1e-6) -> np.ndarray:
    """Central-difference inverse Jacobian: column k is the joint response
    to a world angular perturbation about axis e_k, with IK branch
    tracking.  Raises BranchJumpError if the elbow flags flip under the
    perturbation (h too large or too near a singularity)."""
    if not 1e-8 <= h <= 1e-4:
        raise ValueError("h must lie in [1e-8, 1e-4]")
    q0 = pose.orientation.matrix()
    th0 = pose.joints.as_array()
    cols = []
    for k in range(3):
        w = np.zeros(3)
        th_pm = []
        for s in (+1.0, -1.0):
            w[k] = s * h
            o = rpy_from_rotation(apply_world_rotation(w, q0))
            ik = solve_ik(m, o)
            best = min(ik.solutions,
                       key=lambda sol: np.max(np.abs(wrap_angle(sol.joints.as_array() - th0))))
            if best.elbow_signs != pose.elbow_signs:
                raise BranchJumpError(f"branch flags flipped at axis {k}")
            th_pm.append(best.joints.as_array())
        cols.append(wrap_angle(th_pm[0] - th_pm[1]) / (2.0 * h))
    return np.column_stack(cols)


def classify_singularity(pose: PoseSolution, m: MechanismParams,
                         threshold: float = SINGULARITY_THRESHOLD) -> SingularityReport:
    """Classify by normalized determinant margins and pairwise
    parallelism tests; margin is the smallest normalized determinant."""
    l1, r1, p1, i1 = leg_vectors(m, pose, 1)
    l2, r2, p2, i2 = leg_vectors(m, pose, 2)
    u1, u2 = np.cross(p1, r1), np.cross(p2, r2)
    n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
    pn1 = np.linalg.norm(p1) * np.linalg.norm(r1)
    pn2 = np.linalg.norm(p2) * np.linalg.norm(r2)
    det_a_n = float(np.cross(u1, u2) @ Z) / (n1 * n2) if n1 > 0 and n2 > 0 else 0.0

    serial = []
    for leg, (l, r, i) in enumerate(((l1, r1, i1), (l2, r2, i2)), start=1):
        nl, nr = np.linalg.norm(l), np.linalg.norm(r)
        bnorm = float(np.cross(l, r) @ i) / (nl * nr)
        serial.append((leg, l / nl, r / nr, i, bnorm))
    det_b_n = serial[0][4] * serial[1][4]
    margin = min(abs(det_a_n), abs(det_b_n))

    parallel_bad = abs(det_a_n) < threshold
    serial_bad = [s for s in serial if abs(s[4]) < threshold]

    if not parallel_bad and not serial_bad:
        return SingularityReport("none", None, None, margin, det_a_n, det_b_n)

    # choose the family with the smaller margin; parallel wins ties
    if parallel_bad and (not serial_bad or abs(det_a_n) <= min(abs(s[4]) for s in serial_bad)):
        if n1 / pn1 < threshold or n2 / pn2 < threshold:
            leg = 1 if n1 / pn1 <= n2 / pn2 else 2
            return SingularityReport("parallel_aligned", leg, None,
                                     margin, det_a_n, det_b_n)
        return SingularityReport("parallel_coplanar", None, None,
                                 margin, det_a_n, det_b_n)

    leg, ln, rn, i, _ = min(serial_bad, key=lambda s: abs(s[4]))
    if np.linalg.norm(np.cross(ln, rn)) < threshold:
        pair = "l_r"
    elif np.linalg.norm(np.cross(rn, i)) < threshold:
        pair = "r_i"
    elif np.linalg.norm(np.cross(ln, i)) < threshold:
        pair = "l_i"
    else:
        pair = "coplanar"
    return SingularityReport("serial_aligned", leg, pair, margin, det_a_n, det_b_n)


def isotropy_report(pose: PoseSolution, m: MechanismParams,
                    tol: float = 1e-9) -> IsotropyReport:
    l1, r1, p1, i1 = leg_vectors(m, pose, 1)
    l2, r2, p2, i2 = leg_vectors(m, pose, 2)
    u1, u2 = np.cross(p1, r1), np.cross(p2, r2)
    a_res = {
        "p1_dot_r1": abs(float(p1 @ r1)),
        "p2_dot_r2": abs(float(p2 @ r2)),
        "norm_p1": abs(np.linalg.norm(p1) - 1.0),
        "norm_p2": abs(np.linalg.norm(p2) - 1.0),
        "norm_r1": abs(np.linalg.norm(r1) - 1.0),
        "norm_r2": abs(np.linalg.norm(r2) - 1.0),
        "u1_dot_u2": abs(float(u1 @ u2)),
        "u1_dot_z": abs(float(u1 @ Z)),
        "u2_dot_z": abs(float(u2 @ Z)),
    }
    b_res = {
        "l1_dot_r1": abs(float(l1 @ r1)),
        "l2_dot_r2": abs(float(l2 @ r2)),
        "l1_dot_i1": abs(float(l1 @ i1)),
        "l2_dot_i2": abs(float(l2 @ i2)),
        "norm_l1": abs(np.linalg.norm(l1) - 1.0),
        "norm_l2": abs(np.linalg.norm(l2) - 1.0),
        "b11_dev": abs(float(np.cross(l1, r1) @ i1) - 1.0),
        "b22_dev": abs(float(np.cross(l2, r2) @ i2) - 1.0),
    }
    a_mat = np.vstack([u1, u2, Z])
    b_mat = np.diag([float(np.cross(l1, r1) @ i1),
                     float(np.cross(l2, r2) @ i2), 1.0])
    kappa_a = condition_number(a_mat)
    a_iso = max(a_res.values()) < tol and kappa_a - 1.0 < tol * 10.0
    b_iso = max(b_res.values()) < tol
    return IsotropyReport(a_res, b_res,
                          float(np.linalg.norm(a_mat - np.eye(3))),
                          float(np.linalg.norm(b_mat - np.eye(3))),
                          kappa_a, a_iso, b_iso)


def _isotropy_residual_vector(m: MechanismParams, x: np.ndarray,
                              branch: tuple[int, int], want_b: bool) -> np.ndarray:
    big = 1e3
    try:
        ik = solve_ik(m, Orientation(*x))
    except Exception:
        return np.full(9, big)
    sol = next((s for s in ik.solutions if s.elbow_signs == branch), None)
    if sol is None:
        return np.full(9, big)
    rep = isotropy_report(sol, m)
    keys_a = ["p1_dot_r1", "p2_dot_r2", "u1_dot_u2", "u1_dot_z", "u2_dot_z"]
    res = [rep.a_residuals[k] for k in keys_a]
    if want_b:
        res += [rep.b_residuals[k] for k in ("l1_dot_r1", "l2_dot_r2",
                                             "b11_dev", "b22_dev")]
    else:
        res += [0.0] * 4
    return np.asarray(res)


def find_isotropic_config(m: MechanismParams, residual_target: float = 1e-9,
                          give_up: float = 1e-6) -> PoseSolution:
    """Search orientation space (times elbow branches) for the pose
    minimizing the isotropy residuals; B residuals are included only for
    the variant whose B can reach identity (parallel axes).

    Raises IsotropySearchError when the best residual exceeds 1e-6; the
    best pose found is attached.
    """
    want_b = m.variant is Variant.PARALLEL_AXES
    n0 = neutral_orientation(m)
    yaw_seeds = [n0.yaw + d for d in (0.0, 0.35, -0.35, 0.7, -0.7)]
    tilt_seeds = [0.0, 0.25, -0.25]
    best_pose, best_res = None, math.inf
    for branch in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        for y, p, r in itertools.product(yaw_seeds, tilt_seeds, tilt_seeds):
            x0 = np.array([y, p, r])
            if _isotropy_residual_vector(m, x0, branch, want_b)[0] >= 1e3:
                continue
            out = least_squares(
                lambda x: _isotropy_residual_vector(m, x, branch, want_b),
                x0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
            res = float(np.max(np.abs(out.fun)))
            if res < best_res:
                best_res = res
                o = Orientation(float(wrap_angle(out.x[0])), float(out.x[1]),
                                float(out.x[2]))
                ik = solve_ik(m, o)
                best_pose = next(s for s in ik.solutions if s.elbow_signs == branch)
            if best_res < residual_target:
                return best_pose
    if best_res > give_up or best_pose is None:
        raise IsotropySearchError(
            f"best isotropy residual {best_res:.3e} exceeds {give_up:.1e}",
            best_pose=best_pose, best_residual=best_res)
    return best_pose
