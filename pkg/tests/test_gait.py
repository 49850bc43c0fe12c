import csv
import json
import math

import numpy as np
import pytest

from wristkin.gait import (GaitParams, gait_command, gait_from_config,
                           gait_orientation, gait_to_config, load_gait,
                           save_gait, validate_trajectory, write_csv)
from wristkin.geometry import Orientation
from wristkin.kinematics import solve_ik
from wristkin.mechanism import (ENVELOPE_YAW, NEUTRAL_YAW, Variant,
                                mechanism_from_variant, neutral_orientation)


@pytest.fixture(scope="module")
def pa():
    return mechanism_from_variant(Variant.PARALLEL_ACTUATORS)


def flat_gait(amp, **kw):
    return GaitParams(yaw_amplitude_table=((0.0, amp), (1.0, amp)), **kw)


def test_zero_amplitude_is_neutral():
    g = flat_gait(0.0)
    for k in (1, 5, 10):
        for t in (0.0, 0.3, 1.7):
            assert gait_command(g, k, t) == (0.0, 0.0, 0.0)
            o = gait_orientation(g, k, t)
            assert o.yaw == NEUTRAL_YAW and o.pitch == 0.0 and o.roll == 0.0


def test_periodicity():
    g = GaitParams(cycle_frequency_hz=1.0)
    for k in (1, 4, 10):
        for t in (0.0, 0.21, 0.93):
            a = gait_command(g, k, t)
            b = gait_command(g, k, t + 1.0)
            assert all(abs(x - y) < 1e-12 for x, y in zip(a, b))


def test_adjacent_vertebra_phase_lag():
    # measure the phase of each vertebra by zero-crossing detection
    g = flat_gait(math.radians(20.0), wavelength_fraction=0.8)
    n = 20000
    ts = np.arange(n) / n  # one cycle at 1 Hz
    crossings = []
    for k in (4, 5):
        y = np.array([gait_command(g, k, t)[0] for t in ts])
        idx = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0][0]
        # linear interpolation of the upward crossing
        frac = -y[idx] / (y[idx + 1] - y[idx])
        crossings.append((idx + frac) / n)
    lag = crossings[1] - crossings[0]
    expected = (g.arc_position(5) - g.arc_position(4)) / g.wavelength_fraction
    assert abs(lag - expected) < 1e-4


def test_amplitude_clamped():
    g = flat_gait(math.radians(80.0))
    worst = max(abs(gait_command(g, 3, t)[0]) for t in np.linspace(0, 1, 200))
    assert worst <= ENVELOPE_YAW + 1e-15
    assert worst == pytest.approx(ENVELOPE_YAW)


def test_zero_amplitude_validation(pa):
    report = validate_trajectory(pa, flat_gait(0.0), 16)
    assert report.ok
    neutral_margin = 1.0  # margin at the neutral posture
    assert np.allclose(report.margins, neutral_margin, atol=1e-12)


def test_default_gait_clean(pa):
    report = validate_trajectory(pa, GaitParams(vertebra_count=4), 64)
    assert report.ok
    assert np.isfinite(report.joints).all()


def test_overdriven_gait_flags_envelope(pa):
    report = validate_trajectory(pa, flat_gait(math.radians(80.0),
                                               vertebra_count=2), 32)
    kinds = {v[2] for v in report.violations}
    assert "envelope" in kinds


def test_rate_consistency(pa):
    g = flat_gait(math.radians(25.0), vertebra_count=1)
    report = validate_trajectory(pa, g, 1000)
    fd, pred = report.rates_fd[0], report.rates_predicted[0]
    for joint in range(3):
        scale = max(np.abs(pred[:, joint]).max(), 1e-9)
        assert np.abs(fd[:, joint] - pred[:, joint]).max() < 1e-3 * scale


def test_yaw_ratio_reported_and_zero_at_neutral(pa):
    """Under pure yaw the legs' rate ratio vanishes at the isotropy pose:
    rows 1-2 of A are orthogonal to z there by construction."""
    g = flat_gait(math.radians(20.0), vertebra_count=1)
    report = validate_trajectory(pa, g, 64)
    # t = 0 is the neutral (isotropic) posture
    assert abs(report.yaw_rate_ratio[0, 0]) < 1e-9
    assert np.nanmax(np.abs(report.yaw_rate_ratio)) < 1.0


def test_branch_continuity_no_flips(pa):
    report = validate_trajectory(pa, GaitParams(vertebra_count=3), 64)
    assert report.ok


def test_samples_per_cycle_minimum(pa):
    with pytest.raises(ValueError):
        validate_trajectory(pa, GaitParams(), 4)


def test_csv_export(pa, tmp_path):
    g = GaitParams(vertebra_count=2)
    report = validate_trajectory(pa, g, 16)
    path = tmp_path / "traj.csv"
    write_csv(report, path)
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["time", "vertebra", "yaw", "pitch", "roll",
                       "theta1", "theta2", "theta3", "margin", "kappa",
                       "viol_flags"]
    assert len(rows) == 1 + 2 * 16
    assert float(rows[1][8]) == report.margins[0, 0]


def test_config_round_trip(tmp_path):
    g = GaitParams(cycle_frequency_hz=0.5, wavelength_fraction=0.7,
                   yaw_amplitude_table=((0.0, 0.1), (0.5, 0.3), (1.0, 0.5)))
    path = tmp_path / "gait.json"
    save_gait(g, path)
    g2 = load_gait(path)
    assert g2 == g
    cfg = gait_to_config(g)
    assert gait_from_config(json.loads(json.dumps(cfg))) == g


def test_arc_positions():
    g = GaitParams(vertebra_count=10)
    assert g.arc_position(1) == 0.05
    assert g.arc_position(10) == 0.95
    with pytest.raises(ValueError):
        g.arc_position(11)
