import math

import numpy as np
import pytest
from hypothesis import given as hgiven, settings, strategies as st

from morphwing import flightlog as fl
from morphwing.errors import TooFewMarkers, TooFewTrials
from morphwing.flightlog import NO_CROSSING, AttitudeLog


def make_log(roll_of_tau, freq=5.0, rate=200.0, beats=6.0, start_beat=1, t0=0.3, yaw0=17.0, markers=None):
    """Log whose roll is ``roll_of_tau(tau - start_beat)`` with uniform wingbeats."""
    t = t0 + np.arange(int(beats * rate / freq) + 1) / rate
    tau = (t - t0) * freq
    rel = tau - start_beat
    roll = np.array([roll_of_tau(max(r, 0.0)) for r in rel])
    if markers is None:
        markers = fl.markers_from_frequency(freq, t0, t[-1])
    return AttitudeLog(
        t=t, roll=roll, pitch=0.5 * roll, yaw=yaw0 + 0.1 * rel, wingbeat_markers=markers,
        maneuver_marker=start_beat,
    )


def test_normalize_uniform_markers():
    tau = fl.to_wingbeats([0.6, 0.4, 0.8], [0.0, 0.4, 0.8])
    assert tau[0] == pytest.approx(1.5)
    assert tau[1] == 1.0 and tau[2] == 2.0


def test_normalize_nonuniform_markers():
    assert fl.to_wingbeats([0.7], [0.0, 0.4, 1.0])[0] == pytest.approx(1.5)


def test_normalize_extrapolates():
    tau = fl.to_wingbeats([-0.2, 1.3], [0.0, 0.4, 1.0])
    assert tau == pytest.approx([-0.5, 2.5])


def test_too_few_markers():
    with pytest.raises(TooFewMarkers):
        fl.to_wingbeats([0.1], [0.0])
    with pytest.raises(TooFewMarkers):
        AttitudeLog(t=[0, 1], roll=[0, 0], pitch=[0, 0], yaw=[0, 0], wingbeat_markers=[0.0])


def test_agility_headline_value():
    log = make_log(lambda r: 90.0 * (r / 2.5) ** 2)
    assert fl.agility_metric(log) == pytest.approx(2.5, abs=0.01)


def test_agility_linear_ramp():
    log = make_log(lambda r: -40.0 * r)
    assert fl.agility_metric(log) == pytest.approx(2.25, abs=1e-9)


def test_agility_no_crossing():
    log = make_log(lambda r: 5.0)
    assert fl.agility_metric(log) == NO_CROSSING


@settings(max_examples=30, deadline=None)
@hgiven(scale=st.floats(0.1, 10.0), shift=st.floats(-5.0, 5.0))
def test_time_dilation_invariance(scale, shift):
    log = make_log(lambda r: 90.0 * (r / 2.5) ** 2)
    dilated = AttitudeLog(
        t=log.t * scale + shift, roll=log.roll, pitch=log.pitch, yaw=log.yaw,
        wingbeat_markers=log.wingbeat_markers * scale + shift, maneuver_marker=log.maneuver_marker,
    )
    assert np.allclose(fl.normalize_time(dilated), fl.normalize_time(log), atol=1e-9)
    assert fl.agility_metric(dilated) == pytest.approx(fl.agility_metric(log), abs=1e-9)


def test_metric_monotone_in_target():
    log = make_log(lambda r: 30.0 * r + 5 * math.sin(6 * r))
    values = [fl.agility_metric(log, target) for target in (10, 30, 60, 90, 120)]
    assert values == sorted(values)


def test_align_zeroes_yaw_and_is_idempotent():
    log = make_log(lambda r: 10 * r)
    once = fl.align(log)
    assert np.interp(0.0, once.t, once.yaw) == pytest.approx(0.0, abs=1e-12)
    assert once.wingbeat_markers[once.maneuver_marker] == 0.0
    twice = fl.align(once)
    assert np.array_equal(twice.t, once.t) and np.array_equal(twice.yaw, once.yaw)


def test_identical_trials_have_zero_se():
    log = make_log(lambda r: 20 * r)
    ens = fl.ensemble_stats([log, log, log])
    assert np.max(ens.se_roll) < 1e-12 and np.max(ens.se_yaw) < 1e-12


def test_two_sample_se():
    a = make_log(lambda r: 10.0)
    b = make_log(lambda r: 14.0)
    ens = fl.ensemble_stats([a, b])
    assert np.allclose(ens.mean_roll, 12.0)
    # sample standard deviation of {10, 14} is 2 sqrt(2)
    assert np.allclose(ens.se_roll, 2 * math.sqrt(2) / math.sqrt(2))


def test_se_matches_direct_formula():
    rng = np.random.default_rng(4)
    trials, offsets = [], []
    for _ in range(5):
        off = rng.normal(0, 3)
        offsets.append(off)
        trials.append(make_log(lambda r, off=off: 15 * r + off, start_beat=1 + int(rng.integers(0, 2)),
                               beats=8, t0=rng.uniform(0, 1), yaw0=rng.normal(0, 30)))
    ens = fl.ensemble_stats(trials, bins=20)
    # roll at each bin centre is 15 tau + offset for every trial
    mean = 15 * np.maximum(ens.tau, 0) + np.mean(offsets)
    se = np.std(offsets, ddof=1) / math.sqrt(5)
    assert np.allclose(ens.mean_roll, mean, atol=1e-9)
    assert np.allclose(ens.se_roll, se, atol=1e-12)
    assert np.allclose(np.diff(ens.tau), 1 / 20)
    assert 0.0 in ens.tau


def test_too_few_trials():
    with pytest.raises(TooFewTrials):
        fl.ensemble_stats([make_log(lambda r: 0.0)])


def test_ensemble_agility_and_rows():
    trials = [make_log(lambda r, k=k: (36 + k) * r) for k in (-2, 0, 2)]
    ens = fl.ensemble_stats(trials)
    assert fl.agility_metric(ens) == pytest.approx(2.5, abs=0.01)
    rows = list(ens.rows())
    assert len(rows[0]) == len(fl.ENSEMBLE_HEADER)


def test_read_log_with_and_without_marker_column(tmp_path):
    t = np.arange(0, 1.0, 0.005)
    lines = ["t,roll_deg,pitch_deg,yaw_deg,p_dps,q_dps,r_dps,marker"]
    for k, tk in enumerate(t):
        lines.append(f"{tk:.3f},{90 * tk:.6f},0,0,0,0,0,{1 if k % 40 == 0 else 0}")
    path = tmp_path / "log.csv"
    path.write_text("\n".join(lines) + "\n")
    log = fl.read_log_csv(path)
    assert np.allclose(log.wingbeat_markers, [0.0, 0.2, 0.4, 0.6, 0.8])
    plain = tmp_path / "plain.csv"
    plain.write_text("\n".join(line.rsplit(",", 1)[0] for line in lines) + "\n")
    with pytest.raises(TooFewMarkers):
        fl.read_log_csv(plain)
    log2 = fl.read_log_csv(plain, freq=5.0, t0=0.0)
    assert np.allclose(log2.wingbeat_markers, log.wingbeat_markers)
