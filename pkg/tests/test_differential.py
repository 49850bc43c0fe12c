import math

import numpy as np
import pytest

from wristkin.differential import (build_jacobians, classify_singularity,
                                   condition_number, fd_jacobian,
                                   find_isotropic_config, isotropy_report)
from wristkin.errors import BranchJumpError, SerialSingularError
from wristkin.geometry import Orientation, rpy_from_rotation
from wristkin.kinematics import ik_leg_roots, solve_ik
from wristkin.mechanism import (JointAngles, MechanismParams, PoseSolution,
                                Variant, assemble_pose, leg_vectors,
                                mechanism_from_variant, neutral_orientation,
                                rod_residuals)

SQ2 = math.sqrt(2.0)


@pytest.fixture
def pa():
    return mechanism_from_variant(Variant.PARALLEL_ACTUATORS)


@pytest.fixture
def px():
    return mechanism_from_variant(Variant.PARALLEL_AXES)


def envelope_pose(m, rng):
    o = Orientation(math.pi / 4 + rng.uniform(-0.5, 0.5),
                    rng.uniform(-0.26, 0.26), rng.uniform(-0.07, 0.07))
    return solve_ik(m, o).working


class TestConditionNumber:
    def test_identity(self):
        assert abs(condition_number(np.eye(3)) - 1.0) < 1e-14

    def test_diagonal(self):
        assert abs(condition_number(np.diag([2.0, 1.0, 1.0])) - 2.0) < 1e-12

    def test_rank_deficient(self):
        m = np.array([[1.0, 0, 0], [0, 1, 0], [1.0, 1.0, 0]])
        assert condition_number(m) == math.inf

    def test_matches_svd(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            m = rng.normal(size=(3, 3))
            ours = condition_number(m)
            ref = np.linalg.cond(m, 2)
            assert abs(ours - ref) <= 1e-8 * ref

    def test_broadcast(self):
        rng = np.random.default_rng(13)
        ms = rng.normal(size=(40, 3, 3))
        ours = condition_number(ms)
        refs = np.linalg.cond(ms, 2)
        assert np.all(np.abs(ours - refs) <= 1e-7 * refs)


class TestBuildJacobians:
    def test_neutral_parallel_actuators(self, pa):
        pose = solve_ik(pa, neutral_orientation(pa)).working
        dk = build_jacobians(pose, pa)
        assert np.allclose(np.diag(dk.B), [SQ2 / 2, SQ2 / 2, 1.0], atol=1e-12)
        assert abs(dk.kappa_A - 1.0) < 1e-9
        assert abs(dk.det_A_normalized - 1.0) < 1e-12
        assert np.allclose(dk.A[2], [0, 0, 1], atol=0)
        # nominal rows 1-2 are (p x r)^T / ((l x r).i)
        l1, r1, p1, i1 = leg_vectors(pa, pose, 1)
        row = np.cross(p1, r1) / float(np.cross(l1, r1) @ i1)
        assert np.allclose(dk.jinv_nominal[0], row, atol=1e-14)

    def test_isotropic_parallel_axes_b_identity(self, px):
        pose = find_isotropic_config(px)
        dk = build_jacobians(pose, px)
        assert np.linalg.norm(dk.B - np.eye(3)) < 1e-9
        assert abs(dk.kappa_A - 1.0) < 1e-9
        # input rates (1,1,0) produce the amplified single-axis velocity
        omega = np.linalg.solve(dk.jinv_nominal, [1.0, 1.0, 0.0])
        assert np.linalg.norm(omega - [SQ2, 0.0, 0.0]) < 1e-9

    def test_serial_singular_carries_partial(self, pa):
        sol = solve_ik(pa, Orientation(0, 0, 0)).solutions[0]
        with pytest.raises(SerialSingularError) as ei:
            build_jacobians(sol, pa)
        partial = ei.value.partial
        assert partial is not None
        assert partial.jinv_nominal is None
        assert math.isfinite(partial.det_A)
        assert abs(partial.det_B) < 1e-12


class TestFdJacobian:
    def test_matches_analytic(self, pa):
        rng = np.random.default_rng(14)
        for _ in range(20):
            pose = envelope_pose(pa, rng)
            dk = build_jacobians(pose, pa)
            fd = fd_jacobian(pa, pose, 1e-6)
            for r in range(2):
                err = np.linalg.norm(dk.jinv_nominal[r] - fd[r])
                assert err < 1e-5 * max(1.0, np.linalg.norm(fd[r]))
            for r in range(3):
                err = np.linalg.norm(dk.jinv_exact[r] - fd[r])
                assert err < 1e-5 * max(1.0, np.linalg.norm(fd[r]))

    def test_yaw_row_at_zero_pitch(self, pa):
        pose = solve_ik(pa, Orientation(math.pi / 4 + 0.2, 0.0, 0.0)).working
        fd = fd_jacobian(pa, pose, 1e-6)
        assert np.linalg.norm(fd[2] - [0, 0, 1]) < 1e-6

    def test_h_range_enforced(self, pa):
        pose = solve_ik(pa, neutral_orientation(pa)).working
        with pytest.raises(ValueError):
            fd_jacobian(pa, pose, 1e-2)


def coplanar_case():
    """B1, B2, C1, C2, O all in the xz-plane."""
    m = MechanismParams(Variant.PARALLEL_ACTUATORS, 0.5, 0.0, -1.0,
                        0.5, math.sqrt(0.5), 1.0,
                        np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
    pose = assemble_pose(m, JointAngles(math.pi / 2, math.pi / 2, 0.0),
                         Orientation(0.0, 0.0, -math.pi / 2))
    return m, pose


def aligned_case():
    """B1 at O, so (B1, C1, O) are trivially collinear."""
    m = MechanismParams(Variant.PARALLEL_ACTUATORS, 0.0, 0.0, -1.0,
                        1.0, 1.0, 1.0,
                        np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
    pose = assemble_pose(m, JointAngles(math.pi / 2, 0.0, 0.0),
                         Orientation(0.0, 0.0, 0.0))
    return m, pose


def _complete_leg2(m, c1, theta1):
    """Scan platform rolls about c1 until leg 2 assembles; return the pose."""
    e = np.cross(c1, [0.0, 0.0, 1.0])
    if np.linalg.norm(e) < 1e-9:
        e = np.cross(c1, [1.0, 0.0, 0.0])
    e /= np.linalg.norm(e)
    f = np.cross(c1, e)
    for ang in np.linspace(0.0, 2 * math.pi, 721):
        c2 = math.cos(ang) * e + math.sin(ang) * f
        q = np.column_stack([c1, c2, np.cross(c1, c2)])
        try:
            o = rpy_from_rotation(q)
        except Exception:
            continue
        roots, _ = ik_leg_roots(m, 2, o)
        for t2 in roots:
            j = JointAngles(theta1, t2, o.yaw)
            e1, e2 = rod_residuals(m, j, o)
            if max(abs(e1), abs(e2)) < 1e-10:
                return assemble_pose(m, j, o)
    raise AssertionError("no leg-2 completion found")


def stretched_case():
    """Leg 1 fully extended: l1 parallel to r1."""
    m = MechanismParams(Variant.PARALLEL_ACTUATORS, 0.3, 0.0, -0.4,
                        0.5, 0.5, 1.0,
                        np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
    # direction (0, c, s) with ||A1 + u|| = 1
    s, c = 0.3125, math.sqrt(1.0 - 0.3125 ** 2)
    theta1 = math.atan2(s, c)
    c1 = np.array([0.3, c, s - 0.4])
    return m, _complete_leg2(m, c1, theta1)


def rod_axis_case():
    """Leg-1 rod parallel to its actuator axis."""
    m = MechanismParams(Variant.PARALLEL_ACTUATORS, 0.2, 0.0, -0.5,
                        0.5, 0.6, 1.0,
                        np.array([1.0, 0, 0]), np.array([1.0, 0, 0]))
    s, c = 0.28, 0.96
    theta1 = math.atan2(s, c)
    c1 = np.array([0.2 + 0.6, 0.5 * c, -0.5 + 0.5 * s])
    return m, _complete_leg2(m, c1, theta1)


class TestClassifySingularity:
    def test_coplanar(self):
        m, pose = coplanar_case()
        rep = classify_singularity(pose, m)
        assert rep.tag() == "parallel_coplanar"
        assert rep.margin < 1e-8

    def test_aligned(self):
        m, pose = aligned_case()
        rep = classify_singularity(pose, m)
        assert rep.tag() == "parallel_aligned_leg1"
        assert rep.margin < 1e-8

    def test_stretched_l_parallel_r(self):
        m, pose = stretched_case()
        l1, r1, _, i1 = leg_vectors(m, pose, 1)
        assert np.linalg.norm(np.cross(l1 / np.linalg.norm(l1),
                                       r1 / np.linalg.norm(r1))) < 1e-9
        rep = classify_singularity(pose, m)
        assert rep.tag() == "serial_leg1_l_r"
        assert rep.margin < 1e-8

    def test_rod_parallel_axis(self):
        m, pose = rod_axis_case()
        rep = classify_singularity(pose, m)
        assert rep.tag() == "serial_leg1_r_i"
        assert rep.margin < 1e-8

    def test_isotropic_nonsingular(self, pa):
        pose = find_isotropic_config(pa)
        rep = classify_singularity(pose, pa)
        assert rep.tag() == "none"
        assert rep.margin >= 1.0 - 1e-6

    def test_det_monotone_into_coplanar(self):
        # approach the coplanar pose along the roll coordinate
        m, _ = coplanar_case()
        rolls = -math.pi / 2 + np.linspace(0.3, 0.0, 40)[:-1]
        dets = []
        for r in rolls:
            o = Orientation(0.0, 0.0, float(r))
            try:
                sol = solve_ik(m, o).working or solve_ik(m, o).solutions[0]
            except Exception:
                continue
            rep = classify_singularity(sol, m)
            dets.append(abs(rep.det_A_normalized))
        tail = dets[-10:]
        assert all(a > b for a, b in zip(tail, tail[1:]))


def test_triple_product_cyclic_invariance(pa):
    rng = np.random.default_rng(15)
    for _ in range(30):
        pose = envelope_pose(pa, rng)
        for leg in (1, 2):
            l, r, _, i = leg_vectors(pa, pose, leg)
            t1 = abs(float(np.cross(l, r) @ i))
            t2 = abs(float(np.cross(r, i) @ l))
            t3 = abs(float(np.cross(i, l) @ r))
            assert abs(t1 - t2) < 1e-14 and abs(t1 - t3) < 1e-14


class TestIsotropy:
    def test_parallel_axes_report(self, px):
        pose = find_isotropic_config(px)
        rep = isotropy_report(pose, px)
        assert rep.max_a_residual() < 1e-9
        assert rep.max_b_residual() < 1e-9
        assert rep.a_isotropic and rep.b_isotropic
        assert rep.dist_b_identity < 1e-9
        assert abs(rep.kappa_a - 1.0) < 1e-9

    def test_parallel_actuators_partial(self, pa):
        pose = find_isotropic_config(pa)
        rep = isotropy_report(pose, pa)
        assert rep.max_a_residual() < 1e-9
        assert rep.a_isotropic
        # B cannot reach identity: both diagonals sit at sqrt(2)/2
        assert abs(rep.b_residuals["b11_dev"] - (1 - SQ2 / 2)) < 1e-9
        assert abs(rep.b_residuals["b22_dev"] - (1 - SQ2 / 2)) < 1e-9
        l1, r1, _, i1 = leg_vectors(pa, pose, 1)
        l2, r2, _, i2 = leg_vectors(pa, pose, 2)
        assert abs(float(np.cross(l1, r1) @ i1) - SQ2 / 2) < 1e-9
        assert abs(float(np.cross(l2, r2) @ i2) - SQ2 / 2) < 1e-9

    def test_isotropic_configuration_location(self, pa):
        pose = find_isotropic_config(pa)
        assert abs(pose.orientation.yaw - math.pi / 4) < 1e-8
        assert abs(pose.orientation.pitch) < 1e-8
        assert abs(pose.orientation.roll) < 1e-8
        assert abs(pose.joints.theta1) < 1e-8
        assert abs(pose.joints.theta2) < 1e-8

    def test_generic_pose_not_isotropic(self, pa):
        pose = solve_ik(pa, Orientation(math.pi / 4 + 0.3, 0.1, 0.02)).working
        rep = isotropy_report(pose, pa)
        assert rep.max_a_residual() > 1e-6
        assert not rep.a_isotropic
