import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bilinear_at, naive_dft_columns, naive_stft_power
from adlradar.errors import ConfigError, LengthError, RangeError, ShapeError
from adlradar.rangedoppler import (RangeMap, StftConfig, compute_rangemap, resize_image,
                                   resize_to_rate, spectrogram, sum_range_bins)
from adlradar.sigsim import RadarConfig, ScattererTrajectory, synth_baseband


def rand_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_dc_input():
    rm = compute_rangemap(np.ones((16, 5), dtype=complex))
    assert np.allclose(rm.complex_data[0], 1.0)
    assert np.abs(rm.complex_data[1:]).max() < 1e-12


def test_single_tone_lands_in_its_bin():
    n = np.arange(512)[:, None]
    s = np.exp(2j * np.pi * 40 * n / 512) * np.ones((1, 3))
    rm = compute_rangemap(s)
    ref = naive_dft_columns(s)
    assert np.allclose(rm.complex_data, ref, atol=1e-12)
    assert np.allclose(rm.data[40], 1.0)
    mask = np.ones(512, bool)
    mask[40] = False
    assert rm.data[mask].max() < 1e-9


def test_rangemap_matches_naive_dft_on_random_input():
    rng = np.random.default_rng(0)
    s = rand_complex(rng, (64, 7))
    ref = naive_dft_columns(s)
    got = compute_rangemap(s).complex_data
    assert np.abs(got - ref).max() / np.abs(ref).max() < 1e-9


def test_parseval_per_column():
    rng = np.random.default_rng(1)
    s = rand_complex(rng, (128, 10))
    r = compute_rangemap(s).complex_data
    lhs = (np.abs(r) ** 2).sum(axis=0)
    rhs = (np.abs(s) ** 2).sum(axis=0) / 128
    assert np.max(np.abs(lhs - rhs) / rhs) < 1e-9


def test_rangemap_shape_errors():
    with pytest.raises(ShapeError):
        compute_rangemap(np.ones(8))


def test_sum_range_bins():
    rng = np.random.default_rng(2)
    rm = RangeMap(rand_complex(rng, (32, 20)), 0.075)
    assert np.array_equal(sum_range_bins(rm, 5, 5), rm.complex_data[5])
    assert np.allclose(sum_range_bins(rm, 3, 9), rm.complex_data[3:10].sum(axis=0))
    with pytest.raises(RangeError):
        sum_range_bins(rm, 9, 3)
    with pytest.raises(RangeError):
        sum_range_bins(rm, 0, 32)


def test_default_swath():
    cfg = RadarConfig()
    assert 10 * cfg.range_resolution == pytest.approx(0.75, rel=1e-3)
    assert 128 * cfg.range_resolution == pytest.approx(9.6, rel=1e-3)


def test_two_scatterers_give_two_doppler_lines():
    cfg = RadarConfig(samples_per_pri=256, num_pri=1024)
    t = np.arange(1024) * 1e-3
    lam = cfg.wavelength
    # +100 Hz (approaching) at bin 20, -60 Hz (receding) at bin 60
    v1, v2 = -100 * lam / 2, 60 * lam / 2
    trs = [ScattererTrajectory(t, 20 * cfg.range_resolution + v1 * t, np.full(1024, v1)),
           ScattererTrajectory(t, 60 * cfg.range_resolution + v2 * t, np.full(1024, v2))]
    rm = compute_rangemap(synth_baseband(trs, cfg))
    v = sum_range_bins(rm, 10, 128)
    direct = rm.complex_data[10:129].sum(axis=0)
    assert np.allclose(v, direct)
    md = spectrogram(v)
    profile = md.data.mean(axis=1)
    f = md.doppler_axis_hz
    neg, pos = f < 0, f > 0
    assert f[neg][np.argmax(profile[neg])] == pytest.approx(-60, abs=8)
    assert f[pos][np.argmax(profile[pos])] == pytest.approx(100, abs=8)
    # both lines stand well above the empty part of the spectrum
    quiet = profile[np.abs(f) > 300].max()
    assert profile[neg].max() > 100 * quiet and profile[pos].max() > 100 * quiet


def test_stft_framing_constants():
    cfg = StftConfig()
    assert cfg.overlap == 0.9375
    for m in (128, 129, 135, 136, 8000):
        md = spectrogram(np.zeros(m, complex))
        assert md.data.shape == (128, (m - 128) // 8 + 1) == (128, cfg.frame_count(m))


def test_stft_zero_input():
    assert np.all(spectrogram(np.zeros(300, complex)).data == 0)


def test_stft_rejects_short_input_and_bad_config():
    with pytest.raises(LengthError):
        spectrogram(np.zeros(100, complex))
    with pytest.raises(ConfigError):
        StftConfig(window_len=8, hop=16)


def test_stft_tone_ridge():
    m = np.arange(1024)
    v = np.exp(2j * np.pi * 100 * m * 1e-3)
    md = spectrogram(v)
    rows = np.argmax(md.data, axis=0)
    assert np.all(rows == rows[0])
    assert md.doppler_axis_hz[rows[0]] == pytest.approx(100, abs=1000 / 128 / 2 + 1e-9)
    assert np.allclose(md.data[rows[0]], md.data[rows[0], 0])


def test_stft_matches_naive_oracle():
    rng = np.random.default_rng(3)
    v = rand_complex(rng, 200)
    got = spectrogram(v, StftConfig(32, 8)).data
    ref = naive_stft_power(v, 32, 8)
    assert np.abs(got - ref).max() / ref.max() < 1e-9


def test_stft_axes():
    md = spectrogram(np.zeros(400, complex))
    assert md.doppler_axis_hz[64] == 0.0
    assert md.doppler_axis_hz[0] == -500.0
    assert np.all(np.diff(md.doppler_axis_hz) > 0)
    assert np.all(np.diff(md.time_axis_s) > 0)
    assert md.time_axis_s[0] == pytest.approx(0.064)
    assert md.frame_rate == pytest.approx(125.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(130, 400))
def test_stft_time_shift_covariance(seed, n):
    rng = np.random.default_rng(seed)
    v = rand_complex(rng, n + 8)
    a = spectrogram(v[8:]).data
    b = spectrogram(v).data
    assert np.allclose(b[:, 1:], a, rtol=1e-10, atol=1e-10)
    assert np.all(b >= 0)


def test_resize_identity_is_bit_exact():
    rng = np.random.default_rng(4)
    img = rng.random((7, 9))
    assert np.array_equal(resize_image(img, 7, 9), img)


def test_resize_midpoint():
    out = resize_image(np.array([[0.0, 0.0], [2.0, 2.0]]), 3, 2)
    assert np.array_equal(out[1], [1.0, 1.0])


def test_resize_matches_pointwise_interpolation():
    rng = np.random.default_rng(5)
    img = rng.random((128, 200))
    out = resize_image(img, 128, 64)
    rows = np.linspace(0, 127, 128)
    cols = np.linspace(0, 199, 64)
    for j in range(0, 64, 7):
        for i in range(0, 128, 11):
            assert out[i, j] == pytest.approx(bilinear_at(img, rows[i], cols[j]), abs=1e-12)
        lo, hi = int(np.floor(cols[j])), int(np.ceil(cols[j]))
        span = img[:, lo:hi + 1]
        assert span.min() - 1e-12 <= out[:, j].min() and out[:, j].max() <= span.max() + 1e-12


def test_resize_to_rate():
    assert resize_to_rate(np.ones((50, 300)), 2.0).shape == (128, 64)
    with pytest.raises(ShapeError):
        resize_image(np.ones((2, 2)), 0, 3)
