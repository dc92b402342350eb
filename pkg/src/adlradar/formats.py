"""Binary and text persistence for every pipeline artifact.

All binary formats are little-endian and start with a four-byte magic:

RDCB  baseband: u32 version, N, M, then N*M (I, Q) float32 pairs, PRI-major
RDM1  range map: u32 rows, cols, channels (1 real, 2 complex I/Q), float32 row-major
RMD1  micro-Doppler: u32 rows, cols, then float64 Doppler axis, float64 time
      axis and float32 row-major power
PCA2  2-D PCA basis: u32 rows, cols, d, then float64 mean image, eigenvalues, Phi
KNN1  k-NN model: u32 header length, UTF-8 JSON header, float64 exemplar matrix
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .classify import KnnModel
from .errors import IoError
from .features import FusionScaler, PcaBasis
from .rangedoppler import MicroDopplerImage, RangeMap
from .segmentation import SegmentTimeline
from .sigsim import ComplexBaseband, RadarConfig
from .states import ActionClass

RDCB_VERSION = 1


def _write(path, blob: bytes) -> None:
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None


def _check_magic(blob: bytes, magic: bytes, path) -> None:
    if blob[:4] != magic:
        raise IoError(f"{path}: expected magic {magic!r}, found {blob[:4]!r}")


def _u32s(blob: bytes, offset: int, n: int, path) -> tuple[int, ...]:
    end = offset + 4 * n
    if len(blob) < end:
        raise IoError(f"{path}: truncated header")
    return struct.unpack(f"<{n}I", blob[offset:end])


def _floats(blob: bytes, offset: int, count: int, dtype: str, path) -> tuple[np.ndarray, int]:
    size = np.dtype(dtype).itemsize * count
    if len(blob) < offset + size:
        raise IoError(f"{path}: truncated payload")
    return np.frombuffer(blob, dtype=dtype, count=count, offset=offset), offset + size


# baseband --------------------------------------------------------------

def baseband_bytes(bb: ComplexBaseband) -> bytes:
    n, m = bb.data.shape
    iq = np.empty((m, n, 2), dtype="<f4")
    iq[..., 0] = bb.data.real.T
    iq[..., 1] = bb.data.imag.T
    return b"RDCB" + struct.pack("<3I", RDCB_VERSION, n, m) + iq.tobytes()


def save_baseband(path, bb: ComplexBaseband) -> None:
    _write(path, baseband_bytes(bb))


def load_baseband(path, cfg: RadarConfig | None = None) -> ComplexBaseband:
    blob = _read(path)
    _check_magic(blob, b"RDCB", path)
    version, n, m = _u32s(blob, 4, 3, path)
    if version != RDCB_VERSION:
        raise IoError(f"{path}: unsupported RDCB version {version}")
    flat, end = _floats(blob, 16, 2 * n * m, "<f4", path)
    if end != len(blob):
        raise IoError(f"{path}: {len(blob) - end} trailing bytes")
    iq = flat.reshape(m, n, 2).astype(np.float64)
    data = (iq[..., 0] + 1j * iq[..., 1]).T
    cfg = cfg or RadarConfig()
    cfg = RadarConfig(cfg.center_frequency_hz, cfg.bandwidth_hz, cfg.pri_s, n, m, cfg.tx_amplitude)
    return ComplexBaseband(np.ascontiguousarray(data), cfg)


def quantize_complex(x: np.ndarray) -> np.ndarray:
    """What a float32 I/Q round trip leaves of ``x``."""
    return x.real.astype(np.float32).astype(np.float64) + 1j * x.imag.astype(np.float32).astype(np.float64)


# range map / sinogram ----------------------------------------------------

def matrix_bytes(data: np.ndarray) -> bytes:
    data = np.asarray(data)
    if data.ndim != 2:
        raise IoError("RDM1 holds 2-D matrices only")
    rows, cols = data.shape
    if np.iscomplexobj(data):
        body = np.empty((rows, cols, 2), dtype="<f4")
        body[..., 0], body[..., 1] = data.real, data.imag
        ch = 2
    else:
        body, ch = data.astype("<f4"), 1
    return b"RDM1" + struct.pack("<3I", rows, cols, ch) + body.tobytes()


def load_matrix(path) -> np.ndarray:
    blob = _read(path)
    _check_magic(blob, b"RDM1", path)
    rows, cols, ch = _u32s(blob, 4, 3, path)
    if ch not in (1, 2):
        raise IoError(f"{path}: channel count {ch} is neither 1 nor 2")
    flat, _ = _floats(blob, 16, rows * cols * ch, "<f4", path)
    if ch == 1:
        return flat.reshape(rows, cols).astype(np.float64)
    body = flat.reshape(rows, cols, 2).astype(np.float64)
    return body[..., 0] + 1j * body[..., 1]


def save_rangemap(path, rm: RangeMap) -> None:
    _write(path, matrix_bytes(rm.complex_data))


def load_rangemap(path, bin_resolution_m: float, pri_s: float = 1e-3) -> RangeMap:
    data = load_matrix(path)
    if not np.iscomplexobj(data):
        raise IoError(f"{path}: range map must be stored as complex")
    return RangeMap(data, bin_resolution_m, pri_s)


def md_bytes(md: MicroDopplerImage) -> bytes:
    rows, cols = md.data.shape
    return (b"RMD1" + struct.pack("<2I", rows, cols)
            + np.asarray(md.doppler_axis_hz, "<f8").tobytes()
            + np.asarray(md.time_axis_s, "<f8").tobytes()
            + md.data.astype("<f4").tobytes())


def save_md(path, md: MicroDopplerImage) -> None:
    _write(path, md_bytes(md))


def load_md(path) -> MicroDopplerImage:
    blob = _read(path)
    _check_magic(blob, b"RMD1", path)
    rows, cols = _u32s(blob, 4, 2, path)
    axis, off = _floats(blob, 12, rows, "<f8", path)
    times, off = _floats(blob, off, cols, "<f8", path)
    data, _ = _floats(blob, off, rows * cols, "<f4", path)
    return MicroDopplerImage(data.reshape(rows, cols).astype(np.float64), axis.copy(), times.copy())


def quantize_real(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).astype(np.float32).astype(np.float64)


def matrix_csv(data: np.ndarray) -> str:
    """Lossless text dump: float32 values printed with 9 significant digits."""
    buf = io.StringIO()
    np.savetxt(buf, np.asarray(data, dtype=np.float32), fmt="%.9g", delimiter=",")
    return buf.getvalue()


# PCA basis ----------------------------------------------------------------

def basis_bytes(b: PcaBasis) -> bytes:
    rows, cols = b.mean_image.shape
    return (b"PCA2" + struct.pack("<3I", rows, cols, b.d)
            + np.asarray(b.mean_image, "<f8").tobytes()
            + np.asarray(b.eigenvalues, "<f8").tobytes()
            + np.asarray(b.eigenvectors, "<f8").tobytes())


def save_basis(path, b: PcaBasis) -> None:
    _write(path, basis_bytes(b))


def basis_from_bytes(blob: bytes, path="<bytes>") -> PcaBasis:
    _check_magic(blob, b"PCA2", path)
    rows, cols, d = _u32s(blob, 4, 3, path)
    mean, off = _floats(blob, 16, rows * cols, "<f8", path)
    vals, off = _floats(blob, off, cols, "<f8", path)
    vecs, _ = _floats(blob, off, cols * d, "<f8", path)
    return PcaBasis(mean.reshape(rows, cols).copy(), vecs.reshape(cols, d).copy(), vals.copy(), d)


def load_basis(path) -> PcaBasis:
    return basis_from_bytes(_read(path), path)


def scaler_dict(s: FusionScaler) -> dict:
    return {"md_mean": s.md_mean, "md_std": s.md_std, "rm_mean": s.rm_mean, "rm_std": s.rm_std}


# k-NN model ---------------------------------------------------------------

def model_bytes(m: KnnModel) -> bytes:
    header = json.dumps({
        "k": m.k,
        "n": int(m.vectors.shape[0]),
        "dim": int(m.vectors.shape[1]),
        "labels": [c.label for c in m.labels],
        "class_accuracy": m.class_accuracy,
    }, sort_keys=True).encode()
    return b"KNN1" + struct.pack("<I", len(header)) + header + np.asarray(m.vectors, "<f8").tobytes()


def model_from_bytes(blob: bytes, path="<bytes>") -> KnnModel:
    _check_magic(blob, b"KNN1", path)
    (hlen,) = _u32s(blob, 4, 1, path)
    try:
        header = json.loads(blob[8:8 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IoError(f"{path}: corrupt model header ({exc})") from None
    vecs, _ = _floats(blob, 8 + hlen, header["n"] * header["dim"], "<f8", path)
    labels = tuple(ActionClass.parse(s) for s in header["labels"])
    return KnnModel(vecs.reshape(header["n"], header["dim"]).copy(), labels, header["k"],
                    dict(header.get("class_accuracy", {})))


def save_model(path, m: KnnModel) -> None:
    _write(path, model_bytes(m))


def load_model(path) -> KnnModel:
    return model_from_bytes(_read(path), path)


# segment annotations --------------------------------------------------------

SEGMENT_FIELDS = ["kind", "start_s", "end_s", "angle_deg", "score"]


def segments_csv(tl: SegmentTimeline) -> str:
    """Translation/in-place pieces, then detected lines and burst events, one row each."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SEGMENT_FIELDS)
    for kind, a, b in tl.segments():
        w.writerow([kind, f"{a:.6f}", f"{b:.6f}", "", ""])
    for bp in tl.breakpoints:
        w.writerow([f"breakpoint:{bp.kind}", f"{bp.slow_time_s:.6f}", f"{bp.slow_time_s:.6f}",
                    "", f"{bp.score:.6g}"])
    for ln in tl.lines:
        kind = "line:horizontal" if ln.is_horizontal else "line:sloped"
        w.writerow([kind, "0.000000", f"{tl.duration_s:.6f}", f"{ln.angle_deg:.6f}", f"{ln.score:.6g}"])
    for ev in tl.events:
        w.writerow(["event", f"{ev.onset_s:.6f}", f"{ev.offset_s:.6f}", "", f"{ev.peak:.6g}"])
    return buf.getvalue()


def read_segments_csv(path) -> list[dict]:
    try:
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from None
