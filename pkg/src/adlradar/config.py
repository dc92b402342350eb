"""Run configuration: a TOML file with one section per stage.

Unknown keys are rejected so that typos fail loudly instead of silently
falling back to defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigError, SequenceError
from .features import D_MD, D_RM, IMAGE_COLS, IMAGE_ROWS
from .rangedoppler import DEFAULT_R1, DEFAULT_R2, StftConfig
from .segmentation import PbcConfig, SegmentationConfig
from .sigsim import MotionScenario, RadarConfig, Segment
from .states import Action, Group
from .twoway import DecisionConfig


@dataclass(frozen=True)
class RadarSection:
    radar: RadarConfig = RadarConfig()
    noise_power: float = 1e-3


@dataclass(frozen=True)
class PcaSection:
    d_md: int = D_MD
    d_rm: int = D_RM
    rows: int = IMAGE_ROWS
    cols: int = IMAGE_COLS
    dyn_db: float = 40.0
    normalize: bool = True


@dataclass(frozen=True)
class KnnSection:
    k: int = 5
    train_frac: float = 0.7


@dataclass(frozen=True)
class CorpusSection:
    trials_per_class: int = 50
    classes: tuple[str, ...] = tuple(a.value for a in Action)
    groups: tuple[str, ...] = ("T",)
    speed_mps: tuple[float, float] = (0.7, 1.3)
    jitter: float = 0.15


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    radar: RadarSection = RadarSection()
    stft: StftConfig = StftConfig()
    range_bins: tuple[int, int] = (DEFAULT_R1, DEFAULT_R2)
    pbc: PbcConfig = PbcConfig()
    segmentation: SegmentationConfig = SegmentationConfig()
    pca: PcaSection = PcaSection()
    knn: KnnSection = KnnSection()
    decision: DecisionConfig = DecisionConfig()
    corpus: CorpusSection = CorpusSection()
    scenarios: tuple[MotionScenario, ...] = ()
    output_dir: str = "run"
    source: dict = field(default_factory=dict, compare=False)

    def echo(self) -> str:
        """Canonical JSON of the raw configuration (what the report stores)."""
        return json.dumps(self.source, sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()

    def with_seed(self, seed: int) -> "PipelineConfig":
        src = dict(self.source)
        src["seed"] = seed
        return dataclasses.replace(self, seed=seed, source=src)


def _build(cls, section: dict | None, name: str, **fixed):
    section = dict(section or {})
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
    kwargs = {}
    for key, val in section.items():
        kwargs[key] = tuple(val) if isinstance(val, list) else val
    kwargs.update(fixed)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def _scenario(raw: dict, idx: int) -> MotionScenario:
    known = {"name", "group", "start_range_m", "seed", "segments"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"scenario {idx}: unknown keys {sorted(unknown)}")
    segs = []
    for s in raw.get("segments", []):
        if isinstance(s, str):
            segs.append(Segment(s))
        else:
            segs.append(_build(Segment, s, f"scenario {idx} segment"))
    try:
        group = Group(raw.get("group", "T"))
    except ValueError:
        raise ConfigError(f"scenario {idx}: group must be 'T' or 'A'") from None
    try:
        return MotionScenario(tuple(segs), group, float(raw.get("start_range_m", 8.0)),
                              int(raw.get("seed", idx)), str(raw.get("name", f"scenario{idx}")))
    except SequenceError as exc:
        raise SequenceError(f"scenario {idx}: {exc}") from None


def config_from_dict(raw: dict) -> PipelineConfig:
    known = {"seed", "output_dir", "radar", "stft", "pbc", "segmentation", "pca", "knn",
             "decision", "corpus", "scenario"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "seed" not in raw:
        raise ConfigError("a seed is required")
    seed = raw["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    radar_raw = dict(raw.get("radar", {}))
    noise = float(radar_raw.pop("noise_power", 1e-3))
    if noise < 0:
        raise ConfigError("noise_power must be nonnegative")
    stft_raw = dict(raw.get("stft", {}))
    r1 = int(stft_raw.pop("r1", DEFAULT_R1))
    r2 = int(stft_raw.pop("r2", DEFAULT_R2))
    corpus = _build(CorpusSection, raw.get("corpus"), "corpus")
    for c in corpus.classes:
        try:
            Action(c)
        except ValueError:
            raise ConfigError(f"[corpus] unknown class {c!r}") from None
    cfg = PipelineConfig(
        seed=seed,
        radar=RadarSection(_build(RadarConfig, radar_raw, "radar"), noise),
        stft=_build(StftConfig, stft_raw, "stft"),
        range_bins=(r1, r2),
        pbc=_build(PbcConfig, raw.get("pbc"), "pbc"),
        segmentation=_build(SegmentationConfig, raw.get("segmentation"), "segmentation"),
        pca=_build(PcaSection, raw.get("pca"), "pca"),
        knn=_build(KnnSection, raw.get("knn"), "knn"),
        decision=_build(DecisionConfig, raw.get("decision"), "decision"),
        corpus=corpus,
        scenarios=tuple(_scenario(s, i) for i, s in enumerate(raw.get("scenario", []))),
        output_dir=str(raw.get("output_dir", "run")),
        source=raw,
    )
    if not 0 < cfg.knn.train_frac < 1:
        raise ConfigError("[knn] train_frac must lie in (0, 1)")
    if cfg.knn.k < 1:
        raise ConfigError("[knn] k must be >= 1")
    if cfg.corpus.trials_per_class < 0:
        raise ConfigError("[corpus] trials_per_class must be >= 0")
    return cfg


def load_config(path) -> PipelineConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(raw)


def default_config_path() -> Path:
    return Path(__file__).with_name("data") / "default.toml"
