import numpy as np
import pytest

from adlradar.errors import ConfigError, DurationError, SequenceError
from adlradar.sigsim import (C, MotionScenario, RadarConfig, ScattererTrajectory, Segment,
                             TEMPLATES, gen_trajectory, scenario_truth, simulate, synth_baseband)
from adlradar.states import Action, Group


def static(r, n, refl=1.0, pri=1e-3):
    t = np.arange(n) * pri
    return ScattererTrajectory(t, np.full(n, r), np.zeros(n), refl)


def moving(r0, v, n, refl=1.0, pri=1e-3):
    t = np.arange(n) * pri
    return ScattererTrajectory(t, r0 + v * t, np.full(n, v), refl)


def test_radar_defaults():
    cfg = RadarConfig()
    assert cfg.samples_per_pri == 512 and cfg.num_pri == 8000
    assert cfg.range_resolution == pytest.approx(0.075, rel=1e-3)
    assert cfg.chirp_rate == cfg.bandwidth_hz / cfg.pri_s


def test_radar_config_validation():
    with pytest.raises(ConfigError):
        RadarConfig(samples_per_pri=1)
    with pytest.raises(ConfigError):
        RadarConfig(bandwidth_hz=0)


def test_standing_scenario_is_static():
    sc = MotionScenario((Segment("stand", 2.0),), start_range_m=3.0)
    torso = gen_trajectory(sc)[0]
    assert torso.name == "torso"
    assert len(torso) == 2000
    assert np.ptp(torso.range_m) == 0.0
    assert np.all(torso.radial_velocity_mps == 0.0)


def test_walking_toward_ramps_linearly():
    sc = MotionScenario((Segment("walk", 4.0, 1.0),), start_range_m=8.0)
    torso = gen_trajectory(sc)[0]
    t = torso.time_s
    assert torso.range_m[0] == pytest.approx(8.0)
    assert np.allclose(torso.range_m, 8.0 - t, atol=1e-9)
    assert np.allclose(torso.radial_velocity_mps, -1.0)


def test_trajectory_velocity_matches_range_increments():
    kinds = ["walk", "walking-stop", "stand", "falling-from-standing", "lay", "standing-from-falling",
             "stand", "sitting-down", "sit", "bending-from-sitting", "standing-up-walking", "walk",
             "walking-bend", "walk", "walking-fall", "lay"]
    sc = MotionScenario(tuple(Segment(k) for k in kinds), start_range_m=30.0)
    pri = 1e-3
    for tr in gen_trajectory(sc):
        assert np.all(np.diff(tr.time_s) > 0)
        assert np.all(tr.range_m > 0)
        step = np.diff(tr.range_m) - tr.radial_velocity_mps[:-1] * pri
        # first-order consistency: the residual is O(a * PRI^2)
        assert np.abs(step).max() < 5e-5


def test_in_place_motion_has_no_net_drift_but_moves():
    sc = MotionScenario((Segment("stand", 1.0), Segment("bending-while-standing"), Segment("stand", 1.0)))
    torso = gen_trajectory(sc)[0]
    assert torso.range_m[-1] == pytest.approx(torso.range_m[0], abs=1e-9)
    assert np.abs(torso.radial_velocity_mps).max() > 0.05


def test_walk_then_sit_is_rejected():
    # walking must stop before sitting down
    with pytest.raises(SequenceError, match="sitting-down"):
        MotionScenario((Segment("walk", 4.0), Segment("sitting-down"), Segment("sit", 2.0)))


def test_walk_stop_breakpoint_from_kinematics():
    d = TEMPLATES["walking-stop"].duration_s
    sc = MotionScenario((Segment("walk", 4.0, 1.0), Segment("walking-stop"), Segment("stand", 2.0)))
    truth = scenario_truth(sc)
    # the stop decelerates symmetrically, covering speed*d/2; the extrapolated
    # walking line reaches the resting range half-way through the stop
    assert len(truth.breakpoints) == 1
    assert truth.breakpoints[0].time_s == pytest.approx(4.0 + d / 2, abs=2e-3)
    torso = gen_trajectory(sc)[0]
    v = torso.radial_velocity_mps
    assert abs(v[3900]) == pytest.approx(1.0)
    assert v[5500] == 0.0


def test_truth_states_follow_the_actions():
    sc = MotionScenario((Segment("walk", 3.0), Segment("walking-fall"), Segment("lay", 1.5),
                         Segment("standing-from-falling"), Segment("stand", 1.5),
                         Segment("start-walking"), Segment("walk", 2.5)))
    truth = scenario_truth(sc)
    assert [s.state.value for _, s in truth.states] == ["WS", "LS", "StS", "WS"]
    assert [b.kind for b in truth.breakpoints] == ["translation->in-place", "in-place->translation"]


def test_empty_scene_is_zero():
    cfg = RadarConfig(samples_per_pri=64, num_pri=10)
    assert np.all(synth_baseband([], cfg).data == 0)


def test_static_scatterer_peaks_at_analytic_bin():
    cfg = RadarConfig(num_pri=4)
    bb = synth_baseband([static(3.0, 4)], cfg)
    # beat frequency alpha * 2r/c over one PRI of N samples
    beat = cfg.chirp_rate * 2 * 3.0 / C
    expected = round(beat * cfg.pri_s)
    assert expected == round(3.0 / 0.075) == 40
    for m in range(4):
        assert np.allclose(bb.data[:, m], bb.data[:, 0])
        assert int(np.argmax(np.abs(np.fft.fft(bb.data[:, m])))) == expected


def test_linearity():
    cfg = RadarConfig(samples_per_pri=128, num_pri=200)
    a, b = moving(2.0, 0.7, 200, 0.6), moving(5.0, -1.1, 200, 1.3)
    both = synth_baseband([a, b], cfg).data
    each = synth_baseband([a], cfg).data + synth_baseband([b], cfg).data
    assert np.abs(both - each).max() < 1e-9


def test_doppler_phase_increment_exact_for_bin_centred_scatterer():
    cfg = RadarConfig(samples_per_pri=64, num_pri=50)
    n = 50
    t = np.arange(n) * 1e-3
    v = 0.5
    # range moves by less than a micrometre per PRI; the slow-time phase is -4 pi fc r / c
    tr = ScattererTrajectory(t, 3.0 + v * t, np.full(n, v))
    bb = synth_baseband([tr], cfg)
    ph = np.unwrap(np.angle(bb.data[0]))
    expected = -2 * np.pi * (2 * v * cfg.center_frequency_hz / C) * cfg.pri_s
    assert np.abs(np.diff(ph) - expected).max() < 1e-6
    # approaching targets have a positive Doppler shift
    assert cfg.doppler_hz(-v) == pytest.approx(-expected / (2 * np.pi * cfg.pri_s))


def test_energy_scales_with_reflectivity_squared():
    cfg = RadarConfig(samples_per_pri=256, num_pri=8)
    refl = [0.5, 1.0, 2.0]
    trs = [static(r, 8, a) for r, a in zip((1.5, 4.5, 9.0), refl)]
    power = np.mean(np.abs(synth_baseband(trs, cfg).data) ** 2)
    assert power == pytest.approx(sum(a * a for a in refl), rel=0.01)


def test_short_trajectory_raises():
    cfg = RadarConfig(samples_per_pri=16, num_pri=100)
    with pytest.raises(DurationError):
        synth_baseband([static(2.0, 50)], cfg)


def test_noise_power_and_seed():
    cfg = RadarConfig(samples_per_pri=128, num_pri=400)
    a = synth_baseband([], cfg, noise_power=0.01, seed=5).data
    b = synth_baseband([], cfg, noise_power=0.01, seed=5).data
    assert np.array_equal(a, b)
    assert np.mean(np.abs(a) ** 2) == pytest.approx(0.01, rel=0.05)


def test_simulate_sets_duration_from_scenario():
    sc = MotionScenario((Segment("stand", 0.5),), seed=3)
    bb = simulate(sc, RadarConfig(samples_per_pri=32), noise_power=0.0)
    assert bb.data.shape == (32, 500)


def test_away_group_recedes():
    sc = MotionScenario((Segment("walk", 2.0, 1.0),), group=Group.AWAY, start_range_m=2.0)
    torso = gen_trajectory(sc)[0]
    assert torso.range_m[-1] > torso.range_m[0]
    assert sc.class_sequence == []
    sc2 = MotionScenario((Segment("walk", 2.0), Segment(Action.WALK_STOP.value)), group=Group.AWAY)
    assert [a.label for a in sc2.class_sequence] == ["A-walking-stop"]
