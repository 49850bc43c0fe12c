import math

import numpy as np
import pytest

from wristkin.errors import UnreachableError
from wristkin.geometry import Orientation, wrap_angle
from wristkin.kinematics import ik_leg_roots, solve_fk, solve_ik
from wristkin.mechanism import (JointAngles, Variant, mechanism_from_variant,
                                rod_residuals)
from wristkin.oracle import bisect_leg_residual, grid_fk_roots

FIG13_RPY = Orientation(math.pi / 4, math.pi / 12, math.pi / 12)


@pytest.fixture
def pa():
    return mechanism_from_variant(Variant.PARALLEL_ACTUATORS)


def test_fig13_leg_counts(pa):
    for leg in (1, 2):
        rs = bisect_leg_residual(pa, leg, FIG13_RPY, samples=300_000)
        assert len(rs.roots) == 2
    ik = solve_ik(pa, FIG13_RPY)
    assert ik.leg_counts == (2, 2)


def test_roots_have_tiny_residuals(pa):
    rs = bisect_leg_residual(pa, 1, FIG13_RPY, samples=300_000)
    for t in rs.roots:
        j = JointAngles(t, 0.0, FIG13_RPY.yaw)
        assert abs(rod_residuals(pa, j, FIG13_RPY)[0]) < 1e-10


def test_deterministic(pa):
    a = bisect_leg_residual(pa, 1, FIG13_RPY, samples=100_000)
    b = bisect_leg_residual(pa, 1, FIG13_RPY, samples=100_000)
    assert a == b
    ga = grid_fk_roots(pa, JointAngles(0.1, 0.2, 0.7), grid=500)
    gb = grid_fk_roots(pa, JointAngles(0.1, 0.2, 0.7), grid=500)
    assert ga == gb


def test_unreachable_agrees_with_ik(pa):
    o = Orientation(-math.pi / 2, 0.0, 0.0)
    counts = [len(bisect_leg_residual(pa, leg, o, samples=300_000).roots)
              for leg in (1, 2)]
    assert 0 in counts
    with pytest.raises(UnreachableError):
        solve_ik(pa, o)


def test_tangency_double_root_flagged(pa):
    # raw identity orientation: leg 2 grazes zero at theta2 = pi/4
    rs = bisect_leg_residual(pa, 2, Orientation(0, 0, 0), samples=300_000)
    assert len(rs.roots) == 1
    assert rs.is_double == (True,)
    assert abs(rs.roots[0] - math.pi / 4) < 1e-6


def test_leg_roots_match_closed_form(pa):
    rng = np.random.default_rng(7)
    for _ in range(25):
        o = Orientation(rng.uniform(-math.pi, math.pi),
                        rng.uniform(-1.2, 1.2),
                        rng.uniform(-math.pi, math.pi))
        for leg in (1, 2):
            cf, _ = ik_leg_roots(pa, leg, o)
            orc = bisect_leg_residual(pa, leg, o, samples=200_000)
            assert len(cf) == len(orc.roots)
            for a, b in zip(sorted(cf), orc.roots):
                assert abs(wrap_angle(a - b)) < 1e-9


def test_fk_grid_fig12(pa):
    roots = grid_fk_roots(pa, JointAngles(0.1, 0.2, math.pi / 4))
    assert len(roots) == 4
    spurious = [r for r in roots if abs(r[0] - math.pi / 2) < 1e-9]
    assert len(spurious) == 2


def test_fk_grid_contains_ik_consistent_pose(pa):
    w = solve_ik(pa, FIG13_RPY).working
    roots = grid_fk_roots(pa, w.joints)
    assert any(abs(wrap_angle(r[0] - FIG13_RPY.pitch)) < 1e-8
               and abs(wrap_angle(r[1] - FIG13_RPY.roll)) < 1e-8 for r in roots)


def test_fk_grid_matches_closed_form(pa):
    rng = np.random.default_rng(9)
    for _ in range(10):
        j = JointAngles(*rng.uniform(-math.pi, math.pi, 3))
        try:
            cf = [(s.orientation.pitch, s.orientation.roll)
                  for s in solve_fk(pa, j).solutions]
        except Exception:
            cf = []
        orc = grid_fk_roots(pa, j)
        assert len(cf) == len(orc)
        for a in cf:
            assert min(max(abs(wrap_angle(a[0] - b[0])),
                           abs(wrap_angle(a[1] - b[1]))) for b in orc) < 1e-6
