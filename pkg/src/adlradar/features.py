"""Two-dimensional PCA features for micro-Doppler and range-map windows.

Images stay matrices: the scatter matrix is built from image columns,
H = (1/I) sum (X_i - Xbar)^T (X_i - Xbar), and each image is projected onto
the leading eigenvectors of H.  A window's micro-Doppler and range-map
projections are vectorised and concatenated into one fused vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, RankError, ShapeError
from .rangedoppler import MicroDopplerImage, RangeMap, resize_image

D_MD = 14
D_RM = 4
IMAGE_ROWS = 128
IMAGE_COLS = 64
WINDOW_DYN_DB = 40.0


@dataclass(frozen=True, eq=False)
class PcaBasis:
    mean_image: np.ndarray  # rows x cols
    eigenvectors: np.ndarray  # cols x d, orthonormal columns
    eigenvalues: np.ndarray  # all cols eigenvalues, nonincreasing, >= 0
    d: int

    @property
    def image_shape(self) -> tuple[int, int]:
        return self.mean_image.shape


@dataclass(frozen=True, eq=False)
class FeatureVector:
    md_part: np.ndarray
    rm_part: np.ndarray

    @property
    def fused(self) -> np.ndarray:
        return np.concatenate([self.md_part, self.rm_part])

    def __len__(self) -> int:
        return self.md_part.size + self.rm_part.size


@dataclass(frozen=True)
class FusionScaler:
    """Scalar z-score per modality, estimated on training vectors."""

    md_mean: float = 0.0
    md_std: float = 1.0
    rm_mean: float = 0.0
    rm_std: float = 1.0

    @classmethod
    def identity(cls) -> "FusionScaler":
        return cls()

    @classmethod
    def fit(cls, md_vecs: Sequence[np.ndarray], rm_vecs: Sequence[np.ndarray]) -> "FusionScaler":
        if len(md_vecs) == 0 or len(rm_vecs) == 0:
            raise ConfigError("scaler needs at least one training vector per modality")
        md = np.concatenate([np.ravel(v) for v in md_vecs])
        rm = np.concatenate([np.ravel(v) for v in rm_vecs])
        return cls(float(md.mean()), _safe_std(md), float(rm.mean()), _safe_std(rm))


def _safe_std(x: np.ndarray) -> float:
    s = float(x.std())
    return s if s > 0 else 1.0


def _stack(images: Sequence[np.ndarray]) -> np.ndarray:
    if len(images) < 2:
        raise ShapeError(f"need at least 2 images, got {len(images)}")
    shapes = {np.shape(x) for x in images}
    if len(shapes) != 1:
        raise ShapeError(f"images differ in shape: {sorted(shapes)}")
    stack = np.asarray(images, dtype=float)
    if stack.ndim != 3:
        raise ShapeError(f"images must be 2-D matrices, got shape {stack.shape[1:]}")
    return stack


def scatter_matrix(images: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Mean image and image-column scatter matrix H (cols x cols)."""
    stack = _stack(images)
    mean = stack.mean(axis=0)
    centred = stack - mean
    h = np.einsum("irc,ird->cd", centred, centred) / len(stack)
    return mean, 0.5 * (h + h.T)


def _fix_signs(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip each column so its first clearly nonzero entry is positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > tol * max(np.abs(col).max(), 1.0))
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def fit_2dpca(images: Sequence[np.ndarray], d: int) -> PcaBasis:
    """Fit a 2-D PCA basis and keep the ``d`` leading eigenvectors."""
    mean, h = scatter_matrix(images)
    n = h.shape[0]
    if not 1 <= d <= n:
        raise RankError(f"d={d} outside 1..{n}")
    vals, vecs = np.linalg.eigh(h)
    # eigh returns ascending order; a stable sort on -vals keeps ties in index order
    order = np.argsort(-vals, kind="stable")
    vals = np.clip(vals[order], 0.0, None)
    vecs = _fix_signs(vecs[:, order])
    return PcaBasis(mean, np.ascontiguousarray(vecs[:, :d]), vals, d)


def truncate(basis: PcaBasis, d: int) -> PcaBasis:
    if not 1 <= d <= basis.d:
        raise RankError(f"d={d} outside 1..{basis.d}")
    return PcaBasis(basis.mean_image, basis.eigenvectors[:, :d].copy(), basis.eigenvalues, d)


def project(image: np.ndarray, basis: PcaBasis) -> np.ndarray:
    """Y = (X - Xbar) Phi, one row per image row."""
    x = np.asarray(image, dtype=float)
    if x.shape != basis.image_shape:
        raise ShapeError(f"image shape {x.shape} does not match basis {basis.image_shape}")
    return (x - basis.mean_image) @ basis.eigenvectors


def reconstruct(y: np.ndarray, basis: PcaBasis) -> np.ndarray:
    return np.asarray(y) @ basis.eigenvectors.T + basis.mean_image


def vectorize(y: np.ndarray) -> np.ndarray:
    """Column-major flattening: all rows of projection 1, then projection 2, ..."""
    return np.asarray(y, dtype=float).ravel(order="F")


def fuse(y_md: np.ndarray, y_rm: np.ndarray, scaler: FusionScaler | None = None) -> FeatureVector:
    """Vectorise both projections, z-score each modality, micro-Doppler first."""
    s = scaler or FusionScaler.identity()
    md = (vectorize(y_md) - s.md_mean) / s.md_std
    rm = (vectorize(y_rm) - s.rm_mean) / s.rm_std
    return FeatureVector(md, rm)


# Window images -----------------------------------------------------------

def _bin_columns(power: np.ndarray, times: np.ndarray, t0: float, dur: float,
                 cols: int) -> np.ndarray:
    """Average power into ``cols`` equal time bins covering [t0, t0+dur).

    Bins with no samples (the window runs past the recording) stay zero.
    """
    if dur <= 0 or cols < 1:
        raise ConfigError("window duration and column count must be positive")
    idx = np.floor((np.asarray(times) - t0) / dur * cols).astype(int)
    sel = (idx >= 0) & (idx < cols)
    out = np.zeros((power.shape[0], cols))
    counts = np.bincount(idx[sel], minlength=cols).astype(float)
    np.add.at(out.T, idx[sel], power[:, sel].T)
    filled = counts > 0
    out[:, filled] /= counts[filled]
    return out


def _to_relative_db(power: np.ndarray, dyn_db: float) -> np.ndarray:
    """dB relative to the window peak, clipped at -dyn_db and shifted to [0, dyn_db]."""
    peak = power.max()
    if peak <= 0:
        return np.zeros_like(power)
    db = 10 * np.log10(np.maximum(power, peak * 10 ** (-dyn_db / 10)) / peak)
    return db + dyn_db


def md_window(md: MicroDopplerImage, t0: float, dur: float, rows: int = IMAGE_ROWS,
              cols: int = IMAGE_COLS, dyn_db: float = WINDOW_DYN_DB) -> np.ndarray:
    power = _bin_columns(md.data, md.time_axis_s, t0, dur, cols)
    return resize_image(_to_relative_db(power, dyn_db), rows, cols)


def rm_window(rm: RangeMap, t0: float, dur: float, range_bins: int = 256,
              rows: int = IMAGE_ROWS, cols: int = IMAGE_COLS,
              dyn_db: float = WINDOW_DYN_DB) -> np.ndarray:
    t = rm.time_axis_s
    lo, hi = np.searchsorted(t, [t0, t0 + dur])
    mag = rm.data[:range_bins, lo:hi]
    power = _bin_columns(mag ** 2, t[lo:hi], t0, dur, cols)
    n = power.shape[0]
    if n % rows == 0:
        power = power.reshape(rows, n // rows, cols).mean(axis=1)
    return resize_image(_to_relative_db(power, dyn_db), rows, cols)


@dataclass(frozen=True, eq=False)
class FeatureExtractor:
    """Fitted bases plus fusion statistics; turns window pairs into vectors."""

    md_basis: PcaBasis
    rm_basis: PcaBasis
    scaler: FusionScaler

    @classmethod
    def fit(cls, md_images: Sequence[np.ndarray], rm_images: Sequence[np.ndarray],
            d_md: int = D_MD, d_rm: int = D_RM, normalize: bool = True) -> "FeatureExtractor":
        if len(md_images) != len(rm_images):
            raise ShapeError("micro-Doppler and range-map image counts differ")
        md_b = fit_2dpca(md_images, d_md)
        rm_b = fit_2dpca(rm_images, d_rm)
        scaler = FusionScaler.identity()
        if normalize:
            scaler = FusionScaler.fit([vectorize(project(x, md_b)) for x in md_images],
                                      [vectorize(project(x, rm_b)) for x in rm_images])
        return cls(md_b, rm_b, scaler)

    def transform(self, md_image: np.ndarray, rm_image: np.ndarray) -> FeatureVector:
        return fuse(project(md_image, self.md_basis), project(rm_image, self.rm_basis), self.scaler)
