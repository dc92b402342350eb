"""Translation / in-place segmentation.

Lines in the (dB, sub-sampled, smoothed) range-map image are found with a
Radon transform: a horizontal line is a person staying at one range, a
sloped line is walking.  Where a sloped and a horizontal line meet is a
breakpoint.  Inside in-place intervals the power burst curve (band-limited
micro-Doppler energy) gives onset and offset times of individual motions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter, uniform_filter1d

from .errors import BandError, ConfigError
from .rangedoppler import MicroDopplerImage, RangeMap, resize_image

TO_IN_PLACE = "translation->in-place"
TO_TRANSLATION = "in-place->translation"
HORIZONTAL_DEG = 90.0


@dataclass(frozen=True, eq=False)
class PreprocessedRangeImage:
    data: np.ndarray  # dB, floor-clamped
    floor_db: np.ndarray  # per-column floor, broadcastable against data
    time_axis_s: np.ndarray  # slow time of each column
    row_res_m: float  # range covered by one row

    @property
    def weights(self) -> np.ndarray:
        """Intensity above the floor; what the Radon transform integrates."""
        return self.data - self.floor_db

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True)
class LineParam:
    angle_deg: float  # direction of the line normal, 90 = horizontal line
    offset_px: float  # signed distance from the image centre
    score: float

    @property
    def is_horizontal(self) -> bool:
        return abs(self.angle_deg - HORIZONTAL_DEG) < HORIZONTAL_TOL_DEG

    @property
    def slope_rows_per_col(self) -> float:
        s = math.sin(math.radians(self.angle_deg))
        if abs(s) < 1e-12:
            return math.inf
        return -math.cos(math.radians(self.angle_deg)) / s


HORIZONTAL_TOL_DEG = 3.0


@dataclass(frozen=True)
class Breakpoint:
    slow_time_s: float
    kind: str
    column: float = float("nan")
    score: float = 0.0
    # direction of the translation line meeting here (None when unknown)
    approaching: bool | None = None


@dataclass(frozen=True)
class EventInterval:
    onset_s: float
    offset_s: float
    peak: float = 0.0

    def __post_init__(self):
        if not self.onset_s < self.offset_s:
            raise ConfigError(f"event onset {self.onset_s} not before offset {self.offset_s}")


@dataclass(frozen=True)
class PbcConfig:
    pos_band_hz: tuple[float, float] = (20.0, 270.0)
    neg_band_hz: tuple[float, float] = (-270.0, -20.0)
    smooth_len: int = 5
    threshold_frac: float = 0.03
    square: bool = False
    # bursts closer than this are one event (a bend's velocity crosses zero midway)
    merge_gap_s: float = 0.25

    def __post_init__(self):
        p1, p2 = self.pos_band_hz
        n1, n2 = self.neg_band_hz
        if not (n1 < n2 < 0 < p1 < p2):
            raise ConfigError("PBC bands must satisfy K_N1 < K_N2 < 0 < K_P1 < K_P2")
        if self.smooth_len < 1:
            raise ConfigError("smoothing length must be >= 1")
        if not 0 < self.threshold_frac < 1:
            raise ConfigError("threshold fraction must lie in (0, 1)")
        if self.merge_gap_s < 0:
            raise ConfigError("merge gap must be nonnegative")


@dataclass(frozen=True, eq=False)
class Sinogram:
    values: np.ndarray  # angle x offset
    angles_deg: np.ndarray
    offsets_px: np.ndarray


def smooth3x3(img: np.ndarray) -> np.ndarray:
    """3x3 box of unit coefficients, normalised by 9; edges replicate."""
    return uniform_filter(np.asarray(img, dtype=float), size=3, mode="nearest")


def preprocess_rangemap(rm: RangeMap | np.ndarray, rows: int = 128, cols: int = 384,
                        floor_db: float = 40.0, range_bins: int | None = None,
                        pri_s: float = 1e-3, bin_res_m: float = 0.075,
                        column_floor_db: float | None = 20.0) -> PreprocessedRangeImage:
    """dB image of the range-map, reduced to rows x cols, smoothed and floor-clamped.

    Range bins are averaged in blocks (a tone sitting exactly on an odd bin
    would vanish under plain decimation); slow time is uniformly sub-sampled.
    The floor sits ``floor_db`` below the image maximum, raised where needed
    to ``column_floor_db`` below each column's own maximum, which strips the
    sidelobe skirt of the unwindowed range DFT.
    """
    if isinstance(rm, RangeMap):
        mag, pri_s, bin_res_m = rm.data, rm.pri_s, rm.bin_resolution_m
    else:
        mag = np.abs(np.asarray(rm))
    if range_bins is not None:
        mag = mag[:range_bins]
    n_bins, n_cols = mag.shape
    col_idx = np.floor(np.arange(cols) * n_cols / cols).astype(int)
    sub = mag[:, col_idx]
    if n_bins <= rows:
        blocks = resize_image(sub, rows, cols)
    else:
        edges = np.linspace(0, n_bins, rows + 1).round().astype(int)
        blocks = np.add.reduceat(sub, edges[:-1], axis=0) / np.diff(edges)[:, None]
    peak = blocks.max()
    tiny = peak * 1e-12 if peak > 0 else 1e-300
    db = 20 * np.log10(blocks + tiny)
    db = smooth3x3(db)
    floor = np.full((1, cols), db.max() - floor_db)
    if column_floor_db is not None:
        floor = np.maximum(floor, db.max(axis=0, keepdims=True) - column_floor_db)
    return PreprocessedRangeImage(np.maximum(db, floor), floor, col_idx * pri_s,
                                  n_bins * bin_res_m / rows)


def _as_weights(img) -> np.ndarray:
    if isinstance(img, PreprocessedRangeImage):
        return img.weights
    return np.asarray(img, dtype=float)


def default_angles(step: float = 0.5) -> np.ndarray:
    return np.arange(0.0, 180.0, step)


def radon(img, angles=None) -> Sinogram:
    """Pixel-driven Radon transform.

    Each pixel's intensity is split linearly between the two offset bins
    adjacent to its projection x*cos(theta) + y*sin(theta), with (x, y)
    measured from the image centre (x along columns, y along rows).
    """
    w = _as_weights(img)
    angles = default_angles() if angles is None else np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size == 0:
        raise ConfigError("angle list must not be empty")
    h, wd = w.shape
    half = int(math.ceil(math.hypot(h, wd) / 2)) + 1
    offsets = np.arange(-half, half + 1, dtype=float)
    out = np.zeros((len(angles), len(offsets)))
    rr, cc = np.nonzero(w)
    vals = w[rr, cc]
    if vals.size == 0:
        return Sinogram(out, angles, offsets)
    x = cc - (wd - 1) / 2.0
    y = rr - (h - 1) / 2.0
    nb = len(offsets)
    for i, th in enumerate(np.radians(angles)):
        pos = x * math.cos(th) + y * math.sin(th) + half
        i0 = np.floor(pos).astype(int)
        f = pos - i0
        out[i] = (np.bincount(i0, vals * (1 - f), minlength=nb + 1)[:nb]
                  + np.bincount(i0 + 1, vals * f, minlength=nb + 1)[:nb])
    return Sinogram(out, angles, offsets)


def _parabolic(ym, y0, yp) -> float:
    den = ym - 2 * y0 + yp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (ym - yp) / den, -0.5, 0.5))


def detect_lines(sino: Sinogram, max_lines: int = 4, nms_radius: tuple[float, float] = (5.0, 9.0),
                 min_rel_score: float = 0.2) -> list[LineParam]:
    """Greedy sinogram peak picking with non-maximum suppression.

    Peaks below ``min_rel_score`` times the strongest peak are treated as
    noise.  Angle and offset are refined by parabolic interpolation.
    """
    if max_lines < 1:
        raise ConfigError("max_lines must be >= 1")
    v = sino.values
    if v.size == 0 or not np.any(v > 0):
        return []
    work = v.copy()
    na, no = v.shape
    step_a = float(sino.angles_deg[1] - sino.angles_deg[0]) if na > 1 else 1.0
    step_o = float(sino.offsets_px[1] - sino.offsets_px[0]) if no > 1 else 1.0
    ra = int(round(nms_radius[0] / step_a))
    ro = int(round(nms_radius[1] / step_o))
    lines = []
    top = v.max()
    while len(lines) < max_lines:
        ia, io = np.unravel_index(np.argmax(work), work.shape)
        score = work[ia, io]
        if score <= 0 or score < min_rel_score * top:
            break
        da = _parabolic(v[(ia - 1) % na, io], v[ia, io], v[(ia + 1) % na, io]) if na > 2 else 0.0
        do = _parabolic(v[ia, io - 1], v[ia, io], v[ia, io + 1]) if 0 < io < no - 1 else 0.0
        angle = float(sino.angles_deg[ia]) + da * step_a
        offset = float(sino.offsets_px[io]) + do * step_o
        if angle < 0:
            angle, offset = angle + 180.0, -offset
        elif angle >= 180.0:
            angle, offset = angle - 180.0, -offset
        lines.append(LineParam(angle, offset, float(score)))
        # angle wraps with the offset sign flipped
        for k in range(-ra, ra + 1):
            j = ia + k
            o_lo, o_hi = max(io - ro, 0), min(io + ro + 1, no)
            if 0 <= j < na:
                work[j, o_lo:o_hi] = 0.0
            else:
                jj = j % na
                mirror = no - 1 - io
                work[jj, max(mirror - ro, 0):min(mirror + ro + 1, no)] = 0.0
    return lines


def _fit_track(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    """Weighted straight-line fit; returns slope, intercept and weighted squared error."""
    b, y0 = np.polyfit(x, y, 1, w=np.sqrt(w))
    return b, y0, float((w * (y - (b * x + y0)) ** 2).sum())


def _kinked_side(line: LineParam, weights: np.ndarray, band: float, min_cols: int,
                 min_rel_mass: float, excluded: np.ndarray | None, min_rms: float = 0.75,
                 min_gain: float = 2.0, min_turn_deg: float = 1.0) -> np.ndarray | None:
    """Columns of the heavier arm when the ridge near ``line`` bends, else None.

    A peak of the transform can fall on a line that runs through the kink
    between two ridges of similar direction; the gated fit then keeps most
    columns of both.  The ridge centroid track is tested for a single hinge:
    when two straight pieces explain it far better than one, the columns of
    the piece with more ridge mass are returned.
    """
    h, wd = weights.shape
    cols = np.arange(wd)
    rows = np.arange(h)[:, None]
    mask = np.abs(rows - line_row_at(line, cols, (h, wd))[None, :]) <= band
    wsum = (weights * mask).sum(axis=0)
    ok = wsum > 0
    if excluded is not None:
        ok &= ~(excluded & mask).any(axis=0)
    if not ok.any():
        return None
    ok &= wsum >= min_rel_mass * wsum[ok].max()
    idx = np.flatnonzero(ok)
    if len(idx) < 2 * min_cols:
        return None
    cen = (weights * mask * rows).sum(axis=0)[idx] / wsum[idx]
    x, m = idx.astype(float), wsum[idx]
    b1, _, sse1 = _fit_track(x, cen, m)
    if sse1 / m.sum() < min_rms ** 2:
        return None
    best = None
    for i in range(min_cols, len(idx) - min_cols + 1, 2):
        bl, _, el = _fit_track(x[:i], cen[:i], m[:i])
        br, _, er = _fit_track(x[i:], cen[i:], m[i:])
        if best is None or el + er < best[0]:
            best = (el + er, i, bl, br)
    sse2, i, bl, br = best
    turn = abs(math.degrees(math.atan(bl) - math.atan(br)))
    if sse1 < min_gain * sse2 or turn < min_turn_deg:
        return None
    side = np.zeros(wd, dtype=bool)
    side[idx[:i] if m[:i].sum() >= m[i:].sum() else idx[i:]] = True
    return side


def refine_line(line: LineParam, weights: np.ndarray, band: float = 6.0,
                gates: tuple[float, ...] = (3.0, 1.5, 1.0), min_cols: int = 12,
                min_rel_mass: float = 0.3, excluded: np.ndarray | None = None,
                split_kinks: bool = True) -> LineParam:
    """Least-squares fit of a line to per-column ridge centroids near ``line``.

    Columns whose centroid lies farther than the current gate from the line
    are dropped before each refit, so curved ends of a ridge (acceleration,
    deceleration) do not tilt the result.  Columns holding less than
    ``min_rel_mass`` of the heaviest column's in-band mass are residue
    rather than ridge and are dropped as well, as are columns whose band
    touches a pixel flagged in ``excluded`` (a ridge already explained).
    With ``split_kinks`` a fit that straddles two bent-together ridges is
    redone on the heavier one alone.
    """
    if abs(math.sin(math.radians(line.angle_deg))) < 0.2:
        return line
    current = _gated_fit(line, weights, band, gates, min_cols, min_rel_mass, excluded, None)
    if current is line and excluded is not None:
        # a short ridge running into one already explained can have every
        # column touch the erased band; erased pixels are zero, so fit anyway
        excluded = None
        current = _gated_fit(line, weights, band, gates, min_cols, min_rel_mass, None, None)
    if not split_kinks:
        return current
    side = _kinked_side(current, weights, band, min_cols, min_rel_mass, excluded)
    if side is None:
        return current
    return _gated_fit(current, weights, band, (band,) + tuple(gates), min_cols, min_rel_mass,
                      excluded, side)


def _gated_fit(line: LineParam, weights: np.ndarray, band: float, gates: tuple[float, ...],
               min_cols: int, min_rel_mass: float, excluded: np.ndarray | None,
               allowed: np.ndarray | None) -> LineParam:
    h, wd = weights.shape
    cols = np.arange(wd)
    rows = np.arange(h)[:, None]
    yc, xc = (h - 1) / 2.0, (wd - 1) / 2.0
    current = line
    for gate in gates:
        centre = line_row_at(current, cols, (h, wd))
        # the band narrows with the gate so a neighbouring ridge stays out
        mask = np.abs(rows - centre[None, :]) <= min(band, 2 * gate + 1)
        wsum = (weights * mask).sum(axis=0)
        ok = wsum > 0
        if excluded is not None:
            ok &= ~(excluded & mask).any(axis=0)
        if allowed is not None:
            ok &= allowed
        if ok.sum() < min_cols:
            return current
        cen = np.zeros(wd)
        cen[ok] = (weights * mask * rows).sum(axis=0)[ok] / wsum[ok]
        keep = ok & (np.abs(cen - centre) <= gate)
        if keep.any():
            keep &= wsum >= min_rel_mass * wsum[keep].max()
        if keep.sum() < min_cols:
            return current
        x = cols[keep] - xc
        b, y0 = np.polyfit(x, cen[keep] - yc, 1, w=np.sqrt(wsum[keep]))
        theta = math.pi / 2 + math.atan(b)
        current = LineParam(math.degrees(theta), y0 * math.sin(theta), line.score)
    return current


def _support_span(line: LineParam, weights: np.ndarray, band: float, gate: float = 1.5,
                  min_rel_mass: float = 0.3, max_gap: int = 8) -> tuple[int, int] | None:
    """First and last column of the longest stretch where the ridge follows ``line``."""
    h, wd = weights.shape
    cols = np.arange(wd)
    rows = np.arange(h)[:, None]
    centre = line_row_at(line, cols, (h, wd))
    mask = np.abs(rows - centre[None, :]) <= band
    wsum = (weights * mask).sum(axis=0)
    ok = wsum > 0
    if not ok.any():
        return None
    cen = np.zeros(wd)
    cen[ok] = (weights * mask * rows).sum(axis=0)[ok] / wsum[ok]
    idx = np.flatnonzero(ok & (np.abs(cen - centre) <= gate) & (wsum >= min_rel_mass * wsum[ok].max()))
    if len(idx) == 0:
        return None
    breaks = np.flatnonzero(np.diff(idx) > max_gap + 1)
    starts = np.r_[0, breaks + 1]
    ends = np.r_[breaks, len(idx) - 1]
    best = int(np.argmax(idx[ends] - idx[starts]))
    return int(idx[starts[best]]), int(idx[ends[best]])


def find_lines(img, max_lines: int = 4, angles=None, nms_radius: tuple[float, float] = (5.0, 9.0),
               min_rel_score: float = 0.2, erase_rows: float = 4.0, refine: bool = True,
               span_margin: int = 8) -> list[LineParam]:
    """Sequential line detection: take the strongest peak, erase its ridge, repeat.

    Erasing explains away the spurious peaks that a single sinogram shows
    for lines grazing two real ridges at once.
    """
    w = _as_weights(img).copy()
    h, wd = w.shape
    erased = np.zeros(w.shape, dtype=bool)
    cols = np.arange(wd)
    rows = np.arange(h)[:, None]
    lines: list[LineParam] = []
    top = None
    while len(lines) < max_lines:
        found = detect_lines(radon(w, angles), 1, nms_radius, 0.0)
        if not found:
            break
        ln = found[0]
        if top is None:
            top = ln.score
        elif ln.score < min_rel_score * top:
            break
        if refine:
            ln = refine_line(ln, w, excluded=erased)
        lines.append(ln)
        if abs(math.sin(math.radians(ln.angle_deg))) < 1e-3:
            break
        centre = line_row_at(ln, cols, (h, wd))[None, :]
        band = np.abs(rows - centre) <= erase_rows
        span = _support_span(ln, w, erase_rows)
        if span is not None:
            # only the stretch the ridge occupies; past its end the line may
            # cross another ridge that must survive
            band &= (cols >= span[0] - span_margin) & (cols <= span[1] + span_margin)
        erased |= band
        w[band] = 0.0
    return lines


def line_row_at(line: LineParam, col: np.ndarray | float, img_dims: tuple[int, int]):
    """Row coordinate of a non-vertical line at the given column(s)."""
    h, w = img_dims
    th = math.radians(line.angle_deg)
    x = np.asarray(col, dtype=float) - (w - 1) / 2.0
    y = (line.offset_px - x * math.cos(th)) / math.sin(th)
    return y + (h - 1) / 2.0


def intersect(a: LineParam, b: LineParam, img_dims: tuple[int, int]) -> tuple[float, float] | None:
    """(column, row) where two lines meet, or None if parallel."""
    h, w = img_dims
    ta, tb = math.radians(a.angle_deg), math.radians(b.angle_deg)
    m = np.array([[math.cos(ta), math.sin(ta)], [math.cos(tb), math.sin(tb)]])
    det = np.linalg.det(m)
    if abs(det) < 1e-9:
        return None
    x, y = np.linalg.solve(m, [a.offset_px, b.offset_px])
    return float(x + (w - 1) / 2.0), float(y + (h - 1) / 2.0)


def _support(line: LineParam, weights: np.ndarray, c0: float, c1: float) -> float:
    """Mean intensity sampled along the line between two columns."""
    h, w = weights.shape
    lo, hi = max(int(math.ceil(min(c0, c1))), 0), min(int(math.floor(max(c0, c1))), w - 1)
    if hi < lo:
        return 0.0
    cols = np.arange(lo, hi + 1)
    rows = np.rint(line_row_at(line, cols, (h, w))).astype(int)
    ok = (rows >= 0) & (rows < h)
    if not ok.any():
        return 0.0
    return float(weights[rows[ok], cols[ok]].sum() / len(cols))


def find_breakpoints(lines: list[LineParam], img_dims: tuple[int, int], time_axis,
                     image=None, support_cols: int = 48, min_support: float = 0.4,
                     merge_s: float = 0.5) -> list[Breakpoint]:
    """Intersections of sloped with horizontal lines, mapped to slow time.

    With an image the side on which each line actually has intensity decides
    the breakpoint kind, and intersections where either line is absent are
    dropped.  Without one, the sloped line is assumed to come first.
    """
    h, w = img_dims
    time_axis = np.asarray(time_axis, dtype=float)
    weights = _as_weights(image) if image is not None else None
    found = []
    for i, a in enumerate(lines):
        for b in lines[i + 1:]:
            if a.is_horizontal == b.is_horizontal:
                continue
            p = intersect(a, b, img_dims)
            if p is None:
                continue
            col, row = p
            if not (0 <= col <= w - 1) or not (-0.5 <= row <= h - 0.5):
                continue
            sloped, flat = (a, b) if b.is_horizontal else (b, a)
            kind = TO_IN_PLACE
            if weights is not None:
                ref = weights.max() or 1.0
                # the sloped ridge may stop short of the junction (a fall
                # lurches before settling), so look two windows out on it
                near = [(col - support_cols, col), (col, col + support_cols)]
                far = [(col - 2 * support_cols, col - support_cols),
                       (col + support_cols, col + 2 * support_cols)]
                s_l, s_r = (_support(sloped, weights, *c) / ref for c in near)
                s_ll, s_rr = (_support(sloped, weights, *c) / ref for c in far)
                f_l, f_r = (_support(flat, weights, *c) / ref for c in near)
                if max(s_l, s_r, s_ll, s_rr) < min_support or max(f_l, f_r) < min_support:
                    continue
                if (s_l + s_ll - s_r - s_rr) / 2 + (f_r - f_l) < 0:
                    kind = TO_TRANSLATION
            t = float(np.interp(col, np.arange(len(time_axis)), time_axis))
            found.append(Breakpoint(t, kind, col, min(a.score, b.score),
                                    sloped.slope_rows_per_col < 0))
    found.sort(key=lambda bp: bp.slow_time_s)
    merged: list[Breakpoint] = []
    for bp in found:
        if merged and bp.kind == merged[-1].kind and bp.slow_time_s - merged[-1].slow_time_s < merge_s:
            if bp.score > merged[-1].score:
                merged[-1] = bp
            continue
        merged.append(bp)
    return merged


def line_speed_mps(line: LineParam, img: PreprocessedRangeImage) -> float:
    """Range rate implied by a line's slope (negative when approaching)."""
    t = img.time_axis_s
    col_dt = (t[-1] - t[0]) / (len(t) - 1)
    return line.slope_rows_per_col * img.row_res_m / col_dt


def band_rows(axis_hz: np.ndarray, band: tuple[float, float]) -> np.ndarray:
    lo, hi = band
    if lo < axis_hz[0] or hi > axis_hz[-1]:
        raise BandError(f"band {band} Hz outside Doppler axis [{axis_hz[0]}, {axis_hz[-1]}]")
    return np.nonzero((axis_hz >= lo) & (axis_hz <= hi))[0]


def compute_pbc(md: MicroDopplerImage, cfg: PbcConfig | None = None) -> np.ndarray:
    """Power burst curve: spectrogram energy in the two Doppler bands per frame."""
    cfg = cfg or PbcConfig()
    rows = np.concatenate([band_rows(md.doppler_axis_hz, cfg.pos_band_hz),
                           band_rows(md.doppler_axis_hz, cfg.neg_band_hz)])
    vals = md.data[rows]
    if cfg.square:
        vals = vals ** 2
    return vals.sum(axis=0)


def pbc_threshold(pc: np.ndarray, frac: float = 0.03) -> float:
    lo, hi = float(np.min(pc)), float(np.max(pc))
    return lo + frac * (hi - lo)


def detect_events(pc: np.ndarray, cfg: PbcConfig | None = None, frame_rate: float = 1.0,
                  t0: float = 0.0, min_len_s: float = 0.0) -> list[EventInterval]:
    """Runs of the smoothed curve above min + frac*(max - min).

    Runs separated by less than ``cfg.merge_gap_s`` are joined; runs shorter
    than ``min_len_s`` are dropped.  The offset is the end of the last frame
    above threshold.
    """
    cfg = cfg or PbcConfig()
    pc = np.asarray(pc, dtype=float)
    if len(pc) < cfg.smooth_len:
        raise ConfigError(f"curve of length {len(pc)} shorter than smoothing length {cfg.smooth_len}")
    smooth = uniform_filter1d(pc, cfg.smooth_len, mode="nearest")
    lo, hi = smooth.min(), smooth.max()
    if hi - lo <= 1e-12 * max(abs(hi), abs(lo)) or hi == lo:
        return []
    above = smooth > lo + cfg.threshold_frac * (hi - lo)
    edges = np.diff(np.concatenate([[0], above.astype(np.int8), [0]]))
    starts, ends = np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]
    runs: list[list[int]] = []
    for s, e in zip(starts, ends):
        if runs and (s - runs[-1][1]) / frame_rate < cfg.merge_gap_s:
            runs[-1][1] = e
        else:
            runs.append([s, e])
    out = []
    for s, e in runs:
        if (e - s) / frame_rate < min_len_s:
            continue
        out.append(EventInterval(float(t0 + s / frame_rate), float(t0 + e / frame_rate),
                                 float(smooth[s:e].max())))
    return out


@dataclass
class SegmentTimeline:
    """Everything segmentation knows about one recording."""

    duration_s: float
    lines: list[LineParam] = field(default_factory=list)
    breakpoints: list[Breakpoint] = field(default_factory=list)
    events: list[EventInterval] = field(default_factory=list)
    starts_translating: bool = True
    approaching: bool = True

    def segments(self) -> list[tuple[str, float, float]]:
        """(kind, start, end) pieces between breakpoints."""
        kind = "translation" if self.starts_translating else "in-place"
        t_prev, out = 0.0, []
        for bp in self.breakpoints:
            out.append((kind, t_prev, bp.slow_time_s))
            kind = "in-place" if bp.kind == TO_IN_PLACE else "translation"
            t_prev = bp.slow_time_s
        out.append((kind, t_prev, self.duration_s))
        return out


@dataclass(frozen=True)
class SegmentationConfig:
    rows: int = 128
    cols: int = 384
    floor_db: float = 40.0
    range_bins: int = 256
    angle_step_deg: float = 0.5
    max_lines: int = 4
    nms_radius: tuple[float, float] = (5.0, 9.0)
    min_rel_score: float = 0.2
    post_walk_guard_s: float = 0.5
    pre_walk_guard_s: float = 0.5
    min_event_s: float = 0.3
    # bursts must rise this far above the quietest frame of the recording
    min_event_db: float = 10.0


def _first_sloped_col(lines, img: PreprocessedRangeImage) -> tuple[float, LineParam] | None:
    """Earliest column where a sloped line has intensity."""
    best = None
    h, w = img.shape
    cols = np.arange(w)
    wts = img.weights
    ref = wts.max() or 1.0
    for ln in lines:
        if ln.is_horizontal:
            continue
        rows = np.rint(line_row_at(ln, cols, (h, w))).astype(int)
        ok = (rows >= 0) & (rows < h)
        hit = np.zeros(w, bool)
        hit[ok] = wts[rows[ok], cols[ok]] > 0.5 * ref
        if hit.any():
            c = float(np.argmax(hit))
            if best is None or c < best[0]:
                best = (c, ln)
    return best


def segment_recording(rm: RangeMap, md: MicroDopplerImage, pbc: PbcConfig | None = None,
                      cfg: SegmentationConfig | None = None) -> SegmentTimeline:
    """Radon lines and breakpoints on the range-map, PBC events inside in-place intervals."""
    cfg = cfg or SegmentationConfig()
    pbc = pbc or PbcConfig()
    img = preprocess_rangemap(rm, cfg.rows, cfg.cols, cfg.floor_db,
                              min(cfg.range_bins, rm.shape[0]))
    lines = find_lines(img, cfg.max_lines, default_angles(cfg.angle_step_deg), cfg.nms_radius,
                       cfg.min_rel_score)
    bps = find_breakpoints(lines, img.shape, img.time_axis_s, image=img)
    duration = rm.shape[1] * rm.pri_s
    first = _first_sloped_col(lines, img)
    if bps:
        starts_translating = bps[0].kind == TO_IN_PLACE
    else:
        starts_translating = first is not None and not lines[0].is_horizontal
    sloped = [ln for ln in lines if not ln.is_horizontal]
    approaching = True
    if sloped:
        approaching = line_speed_mps(max(sloped, key=lambda ln: ln.score), img) < 0
    tl = SegmentTimeline(duration, lines, bps, [], starts_translating, approaching)

    pc = compute_pbc(md, pbc)
    t_md = md.time_axis_s
    quiet = float(uniform_filter1d(pc, pbc.smooth_len, mode="nearest").min())
    min_peak = quiet * 10 ** (cfg.min_event_db / 10)
    for kind, t_a, t_b in tl.segments():
        if kind != "in-place":
            continue
        lo = t_a + (cfg.post_walk_guard_s if t_a > 0 else 0.0)
        hi = t_b - (cfg.pre_walk_guard_s if t_b < duration else 0.0)
        sel = np.nonzero((t_md >= lo) & (t_md <= hi))[0]
        if len(sel) < pbc.smooth_len:
            continue
        # frame j stands for the interval centred on its time stamp
        t_first = t_md[sel[0]] - 0.5 / md.frame_rate
        events = detect_events(pc[sel], pbc, md.frame_rate, t_first, cfg.min_event_s)
        tl.events.extend(e for e in events if e.peak >= min_peak)
    return tl
