"""Stage functions and the end-to-end run: corpus, training, evaluation, timelines.

Every stage returns exactly what its file format would store (float32
payloads), so running the stages one by one through files reproduces the
in-memory pipeline bit for bit.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .classify import (ConfusionMatrix, KnnModel, confusion_matrix, knn_predict, knn_train,
                       stratified_split)
from .config import CorpusSection, PipelineConfig
from .errors import AdlError, ConfigError, InternalError
from .features import FeatureExtractor, FeatureVector, md_window, rm_window
from .formats import quantize_complex, quantize_real
from .rangedoppler import (MicroDopplerImage, RangeMap, compute_rangemap, spectrogram,
                           sum_range_bins)
from .segmentation import SegmentTimeline, segment_recording
from .sigsim import (TEMPLATES, ComplexBaseband, MotionScenario, ScenarioTruth, Segment,
                     scenario_truth, simulate)
from .states import (EDGES, Action, ActionClass, Group, State, in_place_candidates,
                     post_walk_candidates, pre_walk_candidates, protocol_candidates,
                     reverse_candidates)
from .twoway import DecisionConfig, StateTimeline, two_way_decide

DWELL_OF = {State.WS: "walk", State.STS: "stand", State.SIS: "sit", State.LS: "lay"}


class StageError(AdlError):
    """Wraps a failure with the name of the stage it came from."""

    def __init__(self, stage: str, exc: AdlError):
        super().__init__(f"[{stage}] {exc}")
        self.exit_code = exc.exit_code
        self.stage = stage


def _stage(name: str, fn: Callable, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except AdlError as exc:
        raise StageError(name, exc) from exc


# single-recording stages ---------------------------------------------------

def noise_seed(sc: MotionScenario, run_seed: int) -> int:
    """Noise seed of one scenario, mixed from the run seed and the scenario's own."""
    return int(np.random.SeedSequence([run_seed, sc.seed]).generate_state(1)[0])


def stage_simulate(sc: MotionScenario, cfg: PipelineConfig) -> ComplexBaseband:
    sc = dataclasses.replace(sc, seed=noise_seed(sc, cfg.seed))
    bb = simulate(sc, cfg.radar.radar, cfg.radar.noise_power)
    return ComplexBaseband(quantize_complex(bb.data), bb.config)


def stage_rangemap(bb: ComplexBaseband) -> RangeMap:
    rm = compute_rangemap(bb)
    return RangeMap(quantize_complex(rm.complex_data), rm.bin_resolution_m, rm.pri_s)


def stage_spectrogram(rm: RangeMap, cfg: PipelineConfig) -> MicroDopplerImage:
    v = sum_range_bins(rm, *cfg.range_bins)
    md = spectrogram(v, cfg.stft, rm.pri_s)
    return MicroDopplerImage(quantize_real(md.data), md.doppler_axis_hz, md.time_axis_s)


def stage_segment(rm: RangeMap, md: MicroDopplerImage, cfg: PipelineConfig) -> SegmentTimeline:
    return segment_recording(rm, md, cfg.pbc, cfg.segmentation)


@dataclass(frozen=True, eq=False)
class Recording:
    scenario: MotionScenario
    truth: ScenarioTruth
    rm: RangeMap
    md: MicroDopplerImage


def record(sc: MotionScenario, cfg: PipelineConfig) -> Recording:
    bb = _stage("simulate", stage_simulate, sc, cfg)
    rm = _stage("rangemap", stage_rangemap, bb)
    md = _stage("spectrogram", stage_spectrogram, rm, cfg)
    return Recording(sc, scenario_truth(sc, bb.config), rm, md)


def window_images(rm: RangeMap, md: MicroDopplerImage, window: tuple[float, float],
                  cfg: PipelineConfig) -> tuple[np.ndarray, np.ndarray]:
    t0, dur = window
    p = cfg.pca
    return (md_window(md, t0, dur, p.rows, p.cols, p.dyn_db),
            rm_window(rm, t0, dur, cfg.segmentation.range_bins, p.rows, p.cols, p.dyn_db))


# corpus ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Sample:
    label: ActionClass
    trial: int
    fwd: tuple[np.ndarray, np.ndarray]  # (micro-Doppler, range-map) images
    rev: tuple[np.ndarray, np.ndarray]


def corpus_scenario(a: ActionClass, trial: int, seed: int, cc: CorpusSection) -> MotionScenario:
    """A short clip around one action, with randomised kinematics and context."""
    rng = np.random.default_rng([seed, list(Action).index(a.action), trial,
                                 0 if a.group is Group.TOWARD else 1])
    src, dst = EDGES[a.action]
    j = cc.jitter

    def jit(x):
        return float(x * rng.uniform(1 - j, 1 + j))

    speed = float(rng.uniform(*cc.speed_mps))
    t = TEMPLATES[a.action.value]
    action = Segment(a.action.value, jit(t.duration_s), None, jit(t.drop_m),
                     jit(t.limb_amp_m), jit(t.limb_freq_hz))
    if src == State.WS:
        before = Segment("walk", float(rng.uniform(2.5, 3.5)), speed)
    else:
        before = Segment(DWELL_OF[src], float(rng.uniform(1.5, 2.5)))
    if dst == State.WS:
        after = Segment("walk", float(rng.uniform(3.2, 4.0)), speed)
    else:
        after = Segment(DWELL_OF[dst], float(rng.uniform(1.5, 2.5)))
    toward = a.group is Group.TOWARD
    if src == State.WS or dst == State.WS:
        r0 = float(rng.uniform(7.5, 8.5)) if toward else float(rng.uniform(1.5, 2.0))
    else:
        r0 = float(rng.uniform(3.0, 7.0))
    return MotionScenario((before, action, after), a.group, r0,
                          seed=int(rng.integers(2 ** 31)), name=f"{a.label}-{trial}")


def training_windows(a: ActionClass, truth: ScenarioTruth, dc: DecisionConfig
                     ) -> tuple[tuple[float, float], tuple[float, float]]:
    """(forward, reverse) windows placed at the ground-truth anchors of ``a``."""
    _, t_on, t_off = next(x for x in truth.actions if x[0] == a)
    src, dst = EDGES[a.action]
    bps = truth.breakpoints
    if src == State.WS and dst != State.WS:
        w = dc.post_walk_window(bps[0].time_s if bps else t_on)
        return w, w
    if dst == State.WS and src != State.WS:
        w = dc.pre_walk_window(bps[0].time_s if bps else t_on)
        return w, w
    return dc.onset_window(t_on), dc.offset_window(t_off)


def make_sample(a: ActionClass, trial: int, cfg: PipelineConfig) -> Sample:
    sc = corpus_scenario(a, trial, cfg.seed, cfg.corpus)
    rec = record(sc, cfg)
    fw, rw = training_windows(a, rec.truth, cfg.decision)
    return Sample(a, trial, window_images(rec.rm, rec.md, fw, cfg),
                  window_images(rec.rm, rec.md, rw, cfg))


def _make_sample_args(args):
    return make_sample(*args)


def corpus_classes(cc: CorpusSection) -> list[ActionClass]:
    return sorted(ActionClass(Action(c), Group(g)) for g in cc.groups for c in cc.classes)


def build_corpus(cfg: PipelineConfig, jobs: int = 1) -> list[Sample]:
    tasks = [(a, i, cfg) for a in corpus_classes(cfg.corpus)
             for i in range(cfg.corpus.trials_per_class)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_make_sample_args, tasks, chunksize=4))
    return [make_sample(*t) for t in tasks]


# training and evaluation ------------------------------------------------------

MODALITIES = ("md", "rm", "fused")


def _pick(fv: FeatureVector, modality: str) -> np.ndarray:
    if modality == "md":
        return fv.md_part
    if modality == "rm":
        return fv.rm_part
    return fv.fused


@dataclass(frozen=True, eq=False)
class TrainedModels:
    extractor: FeatureExtractor
    fwd: KnnModel
    rev: KnnModel


def loo_class_accuracy(vectors: np.ndarray, labels: Sequence[ActionClass], k: int) -> dict[str, float]:
    """Leave-one-out accuracy per class, each sample judged among its protocol candidates."""
    hits: dict[ActionClass, list[int]] = {}
    n = len(labels)
    for i in range(n):
        keep = np.arange(n) != i
        m = KnnModel(vectors[keep], tuple(lab for j, lab in enumerate(labels) if j != i),
                     min(k, n - 1))
        pred, _ = knn_predict(m, vectors[i], protocol_candidates(labels[i]))
        hits.setdefault(labels[i], []).append(int(pred == labels[i]))
    return {c.label: float(np.mean(v)) for c, v in sorted(hits.items())}


def train_models(samples: Sequence[Sample], cfg: PipelineConfig) -> TrainedModels:
    if len(samples) < 2:
        raise ConfigError("training needs at least two samples")
    p = cfg.pca
    md_imgs = [s.fwd[0] for s in samples] + [s.rev[0] for s in samples]
    rm_imgs = [s.fwd[1] for s in samples] + [s.rev[1] for s in samples]
    ex = FeatureExtractor.fit(md_imgs, rm_imgs, p.d_md, p.d_rm, p.normalize)
    labels = [s.label for s in samples]
    k = min(cfg.knn.k, len(samples))
    models = []
    for which in ("fwd", "rev"):
        vecs = np.vstack([ex.transform(*getattr(s, which)).fused for s in samples])
        m = knn_train(list(zip(vecs, labels)), k)
        models.append(m.with_accuracy(loo_class_accuracy(vecs, labels, k)))
    return TrainedModels(ex, *models)


@dataclass
class Evaluation:
    tables: dict[str, ConfusionMatrix] = field(default_factory=dict)
    fall_miss: dict[str, float] = field(default_factory=dict)
    accuracy: dict[str, dict[str, float]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)


def _fall_miss(preds, truths) -> float:
    pairs = [(p, t) for p, t in zip(preds, truths) if t.is_fall]
    if not pairs:
        return float("nan")
    return float(np.mean([p != t for p, t in pairs]))


def _table(preds, truths, keep: Callable[[ActionClass], bool], classes) -> ConfusionMatrix | None:
    sel = [(p, t) for p, t in zip(preds, truths) if keep(t)]
    if not sel:
        return None
    return confusion_matrix([p for p, _ in sel], [t for _, t in sel], classes)


def evaluate(train: Sequence[Sample], test: Sequence[Sample], cfg: PipelineConfig,
             models: TrainedModels) -> Evaluation:
    ev = Evaluation()
    ex = models.extractor
    k = models.fwd.k
    truths = [s.label for s in test]
    classes = sorted(set(s.label for s in train))
    fwd_test = [ex.transform(*s.fwd) for s in test]
    fwd_train = [ex.transform(*s.fwd) for s in train]
    preds: dict[str, dict[str, list[ActionClass]]] = {}
    for mod in MODALITIES:
        m = knn_train([(_pick(f, mod), s.label) for f, s in zip(fwd_train, train)], k)
        restricted = [knn_predict(m, _pick(f, mod), protocol_candidates(t))[0]
                      for f, t in zip(fwd_test, truths)]
        unrestricted = [knn_predict(m, _pick(f, mod))[0] for f in fwd_test]
        preds[mod] = {"restricted": restricted, "all": unrestricted}
        ev.accuracy[mod] = {
            "restricted": float(np.mean([p == t for p, t in zip(restricted, truths)])),
            "all_class": float(np.mean([p == t for p, t in zip(unrestricted, truths)])),
        }
    rp, ap = preds["fused"]["restricted"], preds["fused"]["all"]
    ev.fall_miss = {"restricted": _fall_miss(rp, truths), "all_class": _fall_miss(ap, truths)}

    groups = sorted({c.group for c in classes})
    for g in groups:
        pw = post_walk_candidates(g)
        ip = in_place_candidates(a.to_state for a in pw)
        sis = in_place_candidates([ActionClass(Action.SIT_DOWN, g).to_state])
        pre = pre_walk_candidates(g)
        tag = g.value
        for name, cset in ((f"{tag}-post-walk", pw), (f"{tag}-in-place", ip),
                           (f"{tag}-in-place-sitting", sis), (f"{tag}-pre-walk", pre)):
            cset = [c for c in cset if c in classes]
            if cset:
                t = _table(rp, truths, lambda c, cs=cset: c in cs, cset)
                if t is not None:
                    ev.tables[name] = t
        # reverse view: in-place actions ending in standing, judged by the reverse model
        rev_set = [c for c in reverse_candidates(ActionClass(Action.WALK_STOP, g).to_state)
                   if c in classes]
        sel = [s for s in test if s.label in rev_set]
        if sel:
            rpreds = [knn_predict(models.rev, ex.transform(*s.rev).fused, rev_set)[0] for s in sel]
            ev.tables[f"{tag}-reverse-into-standing"] = confusion_matrix(
                rpreds, [s.label for s in sel], rev_set)
    ev.tables["all-class"] = confusion_matrix(ap, truths, classes)
    ev.tables["restricted-all"] = confusion_matrix(rp, truths, classes)
    ev.counts = {"train": len(train), "test": len(test), "classes": len(classes)}
    return ev


def split_samples(samples: Sequence[Sample], cfg: PipelineConfig) -> tuple[list[Sample], list[Sample]]:
    tr, te = stratified_split([s.label for s in samples], cfg.knn.train_frac, cfg.seed)
    return [samples[i] for i in tr], [samples[i] for i in te]


# scenario timelines -----------------------------------------------------------

def decide_recording(rec: Recording, models: TrainedModels, cfg: PipelineConfig
                     ) -> tuple[SegmentTimeline, StateTimeline]:
    seg = _stage("segment", stage_segment, rec.rm, rec.md, cfg)
    return seg, decide(seg, rec.rm, rec.md, models, cfg)


def decide(seg: SegmentTimeline, rm: RangeMap, md: MicroDopplerImage, models: TrainedModels,
           cfg: PipelineConfig) -> StateTimeline:
    def feats(t0: float, dur: float) -> FeatureVector:
        return models.extractor.transform(*window_images(rm, md, (t0, dur), cfg))
    return _stage("decide", two_way_decide, seg, models.fwd, models.rev, feats, cfg.decision)


# whole run -------------------------------------------------------------------

@dataclass
class RunResult:
    report: dict
    timings: dict
    models: TrainedModels | None
    evaluation: Evaluation | None
    timelines: dict


def run_pipeline(cfg: PipelineConfig, jobs: int = 1) -> RunResult:
    timings: dict[str, float] = {}

    def timed(name, fn, *a):
        t = time.perf_counter()
        out = fn(*a)
        timings[name] = round(time.perf_counter() - t, 3)
        return out

    samples = timed("corpus", _stage, "corpus", build_corpus, cfg, jobs)
    models = ev = None
    report: dict = {
        "tool": "adlradar",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.source,
        "config_sha256": cfg.sha256,
    }
    if samples:
        train, test = split_samples(samples, cfg)
        if not train or not test:
            raise ConfigError("corpus too small for a train/test split")
        models = timed("train", _stage, "train", train_models, train, cfg)
        ev = timed("evaluate", _stage, "evaluate", evaluate, train, test, cfg, models)
        report["tables"] = {k: v.to_dict() for k, v in ev.tables.items()}
        report["fall_miss"] = ev.fall_miss
        report["modality_accuracy"] = ev.accuracy
        report["class_accuracy"] = {"forward": models.fwd.class_accuracy,
                                    "reverse": models.rev.class_accuracy}
        report["counts"] = ev.counts
    timelines = {}
    if cfg.scenarios:
        if models is None:
            raise ConfigError("scenario timelines need a trained model (corpus is empty)")
        t = time.perf_counter()
        out = []
        for sc in cfg.scenarios:
            rec = record(sc, cfg)
            seg, tl = decide_recording(rec, models, cfg)
            timelines[sc.name] = tl
            out.append({
                "name": sc.name,
                "truth_states": [s.state.value for _, s in rec.truth.states],
                "truth_actions": [a.label for a, _, _ in rec.truth.actions],
                "breakpoints": [{"t": round(b.slow_time_s, 6), "kind": b.kind} for b in seg.breakpoints],
                "events": [{"onset": round(e.onset_s, 6), "offset": round(e.offset_s, 6)}
                           for e in seg.events],
                "states": [s.value for s in tl.compressed_states()],
                "timeline": tl.to_json(),
            })
        timings["timelines"] = round(time.perf_counter() - t, 3)
        report["scenarios"] = out
    if not isinstance(report.get("seed"), int):
        raise InternalError("report lost its seed")
    return RunResult(report, timings, models, ev, timelines)
