"""Range-map, range-bin summation, micro-Doppler spectrogram and image resizing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, LengthError, RangeError, ShapeError
from .sigsim import ComplexBaseband, RadarConfig

DEFAULT_R1 = 10
DEFAULT_R2 = 128


@dataclass(frozen=True, eq=False)
class RangeMap:
    """Complex range profiles, one column per PRI. ``data`` is the magnitude."""

    complex_data: np.ndarray
    bin_resolution_m: float
    pri_s: float = 1e-3

    @property
    def data(self) -> np.ndarray:
        return np.abs(self.complex_data)

    @property
    def shape(self) -> tuple[int, int]:
        return self.complex_data.shape

    @property
    def range_axis_m(self) -> np.ndarray:
        return np.arange(self.shape[0]) * self.bin_resolution_m

    @property
    def time_axis_s(self) -> np.ndarray:
        return np.arange(self.shape[1]) * self.pri_s


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 128
    hop: int = 8

    def __post_init__(self):
        if self.window_len < 1 or self.hop < 1:
            raise ConfigError("window length and hop must be positive")
        if self.hop > self.window_len:
            raise ConfigError("hop must not exceed the window length")

    @property
    def overlap(self) -> float:
        return 1.0 - self.hop / self.window_len

    def frame_count(self, n: int) -> int:
        return (n - self.window_len) // self.hop + 1


@dataclass(frozen=True, eq=False)
class MicroDopplerImage:
    data: np.ndarray  # Doppler rows x frames, magnitude squared
    doppler_axis_hz: np.ndarray
    time_axis_s: np.ndarray

    @property
    def frame_rate(self) -> float:
        if len(self.time_axis_s) < 2:
            return float("nan")
        return 1.0 / (self.time_axis_s[1] - self.time_axis_s[0])


def compute_rangemap(s: ComplexBaseband | np.ndarray, cfg: RadarConfig | None = None) -> RangeMap:
    """Column-wise DFT with 1/N normalisation."""
    if isinstance(s, ComplexBaseband):
        cfg, data = s.config, s.data
    else:
        data = np.asarray(s)
        cfg = cfg or RadarConfig()
    if data.ndim != 2 or data.shape[0] < 1:
        raise ShapeError(f"baseband must be a 2-D matrix, got shape {data.shape}")
    n = data.shape[0]
    return RangeMap(np.fft.fft(data, axis=0) / n, cfg.range_resolution, cfg.pri_s)


def sum_range_bins(rm: RangeMap, r1: int = DEFAULT_R1, r2: int = DEFAULT_R2) -> np.ndarray:
    """Complex sum over range bins r1..r2 inclusive, one value per PRI."""
    if r1 > r2:
        raise RangeError(f"r1={r1} exceeds r2={r2}")
    if r1 < 0 or r2 >= rm.shape[0]:
        raise RangeError(f"bins {r1}..{r2} outside 0..{rm.shape[0] - 1}")
    return rm.complex_data[r1:r2 + 1].sum(axis=0)


def spectrogram(v: np.ndarray, cfg: StftConfig | None = None, pri_s: float = 1e-3,
                t0: float = 0.0) -> MicroDopplerImage:
    """Hanning-windowed STFT magnitude squared, zero Doppler in the centre row.

    Only complete frames are kept.  Frame j spans samples [j*hop, j*hop+L)
    and is time-stamped at its centre.
    """
    cfg = cfg or StftConfig()
    v = np.asarray(v)
    L, D = cfg.window_len, cfg.hop
    if v.ndim != 1 or len(v) < L:
        raise LengthError(f"sequence of length {v.shape} shorter than window {L}")
    w = np.hanning(L)
    frames = sliding_window_view(v, L)[::D] * w
    spec = np.fft.fftshift(np.fft.fft(frames, axis=1), axes=1)
    md = (spec.real ** 2 + spec.imag ** 2).T
    doppler = np.fft.fftshift(np.fft.fftfreq(L, pri_s))
    times = t0 + (np.arange(md.shape[1]) * D + L / 2) * pri_s
    return MicroDopplerImage(np.ascontiguousarray(md), doppler, times)


def _interp_axis(img: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    n_in = img.shape[axis]
    if n_out == n_in:
        return img
    if n_in == 1:
        return np.repeat(img, n_out, axis=axis)
    pos = np.linspace(0.0, n_in - 1, n_out) if n_out > 1 else np.array([(n_in - 1) / 2])
    i0 = np.clip(np.floor(pos).astype(int), 0, n_in - 2)
    frac = pos - i0
    a = np.take(img, i0, axis=axis)
    b = np.take(img, i0 + 1, axis=axis)
    shape = [1] * img.ndim
    shape[axis] = n_out
    frac = frac.reshape(shape)
    return a * (1 - frac) + b * frac


def resize_image(img: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Bilinear resize with corner samples aligned."""
    img = np.asarray(img, dtype=float)
    if rows < 1 or cols < 1:
        raise ShapeError("target dimensions must be >= 1")
    if img.ndim != 2 or img.size == 0:
        raise ShapeError(f"expected a non-empty 2-D image, got shape {img.shape}")
    if img.shape == (rows, cols):
        return img.copy()
    return _interp_axis(_interp_axis(img, rows, 0), cols, 1)


def resize_to_rate(img: np.ndarray, duration_s: float, rows: int = 128,
                   cols_per_s: float = 32.0) -> np.ndarray:
    """Resize to a fixed row count and a fixed number of columns per second."""
    return resize_image(img, rows, max(1, int(round(duration_s * cols_per_s))))
