"""Independent reference implementations used by the tests.

Everything here is deliberately naive (explicit loops, textbook formulas)
and shares no code with the package.
"""

from __future__ import annotations

import math

import numpy as np


def naive_dft_columns(s: np.ndarray) -> np.ndarray:
    """R(p, m) = (1/N) sum_n s(n, m) exp(-j 2 pi p n / N), evaluated as a plain sum."""
    n_rows, n_cols = s.shape
    n = np.arange(n_rows)
    out = np.zeros((n_rows, n_cols), dtype=complex)
    for p in range(n_rows):
        kernel = np.exp(-2j * np.pi * p * n / n_rows)
        out[p] = (kernel[:, None] * s).sum(axis=0) / n_rows
    return out


def hann(L: int) -> np.ndarray:
    """Symmetric Hanning window, 0.5 - 0.5 cos(2 pi m / (L - 1))."""
    m = np.arange(L)
    return 0.5 - 0.5 * np.cos(2 * np.pi * m / (L - 1))


def naive_stft_power(v: np.ndarray, L: int, D: int) -> np.ndarray:
    """|sum_m w(m) v(m + kD) exp(-j 2 pi n m / L)|^2 with rows ordered -L/2 .. L/2-1."""
    w = hann(L)
    frames = (len(v) - L) // D + 1
    m = np.arange(L)
    # one kernel row per Doppler bin, applied as an explicit weighted sum
    kernel = np.exp(-2j * np.pi * (np.arange(L) - L // 2)[:, None] * m[None, :] / L)
    out = np.zeros((L, frames))
    for k in range(frames):
        seg = v[k * D:k * D + L] * w
        out[:, k] = np.abs((kernel * seg[None, :]).sum(axis=1)) ** 2
    return out


def line_integral(img: np.ndarray, angle_deg: float, offset: float, step: float = 0.05) -> float:
    """Sum of bilinearly sampled intensity along x cos t + y sin t = offset (centred coords)."""
    h, w = img.shape
    t = math.radians(angle_deg)
    nx, ny = math.cos(t), math.sin(t)
    dx, dy = -ny, nx
    x0, y0 = offset * nx, offset * ny
    reach = math.hypot(h, w)
    total = 0.0
    for s in np.arange(-reach, reach, step):
        x, y = x0 + s * dx + (w - 1) / 2, y0 + s * dy + (h - 1) / 2
        if 0 <= x <= w - 1 and 0 <= y <= h - 1:
            c0, r0 = min(int(x), w - 2), min(int(y), h - 2)
            fx, fy = x - c0, y - r0
            v = (img[r0, c0] * (1 - fx) * (1 - fy) + img[r0, c0 + 1] * fx * (1 - fy)
                 + img[r0 + 1, c0] * (1 - fx) * fy + img[r0 + 1, c0 + 1] * fx * fy)
            total += v * step
    return total


def threshold_crossings(pc: np.ndarray, w: int, frac: float) -> list[tuple[int, int]]:
    """Scan a w-point moving average frame by frame; return [start, end) runs above threshold."""
    n = len(pc)
    half = w // 2
    smooth = []
    for i in range(n):
        acc = 0.0
        for j in range(i - half, i - half + w):
            acc += pc[min(max(j, 0), n - 1)]
        smooth.append(acc / w)
    lo, hi = min(smooth), max(smooth)
    thr = lo + frac * (hi - lo)
    runs, start = [], None
    for i, s in enumerate(smooth):
        if s > thr and start is None:
            start = i
        elif s <= thr and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, n))
    return runs


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi rotations on a symmetric matrix; eigenvalues descending."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                for k in range(n):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p], a[k, q] = c * akp - s * akq, s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k], a[q, k] = c * apk - s * aqk, s * apk + c * aqk
                for k in range(n):
                    vkp, vkq = v[k, p], v[k, q]
                    v[k, p], v[k, q] = c * vkp - s * vkq, s * vkp + c * vkq
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], v[:, order]


def power_iteration(a: np.ndarray, iters: int = 2000) -> tuple[float, np.ndarray]:
    x = np.ones(a.shape[0]) / math.sqrt(a.shape[0])
    for _ in range(iters):
        y = a @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0, x
        x = y / nrm
    return float(x @ a @ x), x


def scatter_by_loops(images) -> np.ndarray:
    """H = (1/I) sum_i (X_i - Xbar)^T (X_i - Xbar) with explicit loops."""
    imgs = [np.asarray(x, dtype=float) for x in images]
    rows, cols = imgs[0].shape
    mean = sum(imgs) / len(imgs)
    h = np.zeros((cols, cols))
    for x in imgs:
        c = x - mean
        for i in range(cols):
            for j in range(cols):
                h[i, j] += sum(c[r, i] * c[r, j] for r in range(rows))
    return h / len(imgs)


def matmul_loops(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def brute_knn(vectors, labels, x, k):
    """Labels of the k nearest exemplars by a full distance sort (ties by index)."""
    d = [(math.dist(v, x), i) for i, v in enumerate(vectors)]
    d.sort()
    return [labels[i] for _, i in d[:k]]


def bilinear_at(img: np.ndarray, r: float, c: float) -> float:
    h, w = img.shape
    r0 = min(int(math.floor(r)), h - 2) if h > 1 else 0
    c0 = min(int(math.floor(c)), w - 2) if w > 1 else 0
    fr = r - r0 if h > 1 else 0.0
    fc = c - c0 if w > 1 else 0.0
    r1 = r0 + 1 if h > 1 else r0
    c1 = c0 + 1 if w > 1 else c0
    return float(img[r0, c0] * (1 - fr) * (1 - fc) + img[r0, c1] * (1 - fr) * fc
                 + img[r1, c0] * fr * (1 - fc) + img[r1, c1] * fr * fc)
