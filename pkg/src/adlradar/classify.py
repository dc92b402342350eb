"""k-nearest-neighbour classification with class restriction, and confusion matrices."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, EmptyClassSetError, LabelError, ShapeError
from .features import FeatureVector
from .states import ActionClass, all_classes

DEFAULT_K = 5


def _as_vector(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.fused
    return np.asarray(x, dtype=float).ravel()


@dataclass(frozen=True, eq=False)
class KnnModel:
    vectors: np.ndarray  # n x dim
    labels: tuple[ActionClass, ...]
    k: int = DEFAULT_K
    # validation accuracy per class, used to arbitrate between models
    class_accuracy: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.vectors.ndim != 2 or len(self.labels) != self.vectors.shape[0]:
            raise ShapeError("exemplar matrix and label list disagree")
        if not 1 <= self.k <= len(self.labels):
            raise ConfigError(f"k={self.k} must lie in 1..{len(self.labels)}")

    @property
    def exemplars(self) -> list[tuple[np.ndarray, ActionClass]]:
        return list(zip(self.vectors, self.labels))

    @property
    def classes(self) -> list[ActionClass]:
        return sorted(set(self.labels))

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def with_accuracy(self, acc: dict) -> "KnnModel":
        return KnnModel(self.vectors, self.labels, self.k, dict(acc))

    def mean_accuracy(self, classes: Iterable[ActionClass]) -> float:
        vals = [self.class_accuracy.get(c.label, 0.0) for c in classes]
        return float(np.mean(vals)) if vals else 0.0


def knn_train(samples: Sequence[tuple[object, ActionClass]], k: int = DEFAULT_K) -> KnnModel:
    """Store exemplars verbatim."""
    if len(samples) == 0:
        raise ConfigError("training set is empty")
    if k < 1 or k > len(samples):
        raise ConfigError(f"k={k} must lie in 1..{len(samples)}")
    vecs = [_as_vector(x) for x, _ in samples]
    if len({v.size for v in vecs}) != 1:
        raise ShapeError("feature vectors differ in length")
    return KnnModel(np.vstack(vecs), tuple(lab for _, lab in samples), k)


def knn_predict(model: KnnModel, x, allowed: Iterable[ActionClass] | None = None
                ) -> tuple[ActionClass, dict[ActionClass, int]]:
    """Majority vote among the k nearest exemplars whose class is allowed.

    Exemplars of other classes are removed before the search, so all k
    neighbours are legal.  Ties on the vote go to the class with the smaller
    mean neighbour distance, then to the earlier class in canonical order.
    Neighbours at equal distance are ranked by class order, which keeps the
    result independent of exemplar order.
    """
    v = _as_vector(x)
    if v.size != model.dim:
        raise ShapeError(f"feature length {v.size} does not match model dimension {model.dim}")
    labels = np.array(model.labels, dtype=object)
    if allowed is None:
        keep = np.ones(len(labels), dtype=bool)
    else:
        allowed = frozenset(allowed)
        if not allowed:
            raise EmptyClassSetError("allowed class set is empty")
        keep = np.array([lab in allowed for lab in model.labels])
    if not keep.any():
        raise EmptyClassSetError("no exemplar belongs to an allowed class")
    cand = model.vectors[keep]
    cand_labels = labels[keep]
    dist = np.sqrt(((cand - v) ** 2).sum(axis=1))
    rank = np.array([c._key() for c in cand_labels])
    order = np.lexsort((rank[:, 1], rank[:, 0], dist))
    k = min(model.k, len(order))
    nn = order[:k]
    votes = Counter(cand_labels[nn])
    dsum: dict[ActionClass, float] = {}
    for i in nn:
        dsum[cand_labels[i]] = dsum.get(cand_labels[i], 0.0) + dist[i]
    best = min(votes, key=lambda c: (-votes[c], dsum[c] / votes[c], c))
    return best, dict(votes)


def predict_many(model: KnnModel, xs: Sequence, allowed=None) -> list[ActionClass]:
    return [knn_predict(model, x, allowed)[0] for x in xs]


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    class_set: tuple[ActionClass, ...]
    counts: np.ndarray

    @property
    def rates(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True).astype(float)
        out = np.zeros(self.counts.shape)
        nz = totals[:, 0] > 0
        out[nz] = self.counts[nz] / totals[nz]
        return out

    def index(self, c: ActionClass) -> int:
        try:
            return self.class_set.index(c)
        except ValueError:
            raise LabelError(f"{c} is not in the class set") from None

    def miss(self, c: ActionClass) -> float:
        i = self.index(c)
        if self.counts[i].sum() == 0:
            return float("nan")
        return 1.0 - self.rates[i, i]

    def false_alarm(self, c: ActionClass) -> float:
        """Fraction of samples from other classes that were labelled ``c``."""
        j = self.index(c)
        others = self.counts.sum() - self.counts[j].sum()
        if others == 0:
            return float("nan")
        return float((self.counts[:, j].sum() - self.counts[j, j]) / others)

    @property
    def accuracy(self) -> float:
        total = self.counts.sum()
        return float(np.trace(self.counts) / total) if total else float("nan")

    def to_dict(self) -> dict:
        return {
            "classes": [c.label for c in self.class_set],
            "counts": self.counts.astype(int).tolist(),
            "rates": self.rates.tolist(),
            "miss": {c.label: _json_num(self.miss(c)) for c in self.class_set},
            "false_alarm": {c.label: _json_num(self.false_alarm(c)) for c in self.class_set},
            "accuracy": _json_num(self.accuracy),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def render(self, title: str = "") -> str:
        """Aligned text table of row rates in percent, truth down, prediction across."""
        names = [c.label for c in self.class_set]
        w = max([len(n) for n in names] + [7])
        lines = [title] if title else []
        lines.append(" " * w + " | " + " ".join(f"{n:>{w}}" for n in names))
        lines.append("-" * (w + 3 + (w + 1) * len(names)))
        r = self.rates
        for i, n in enumerate(names):
            cells = " ".join(f"{100 * r[i, j]:>{w - 1}.1f}%" for j in range(len(names)))
            lines.append(f"{n:>{w}} | {cells}")
        return "\n".join(lines)


def _json_num(x: float):
    return None if x != x else float(x)


def confusion_matrix(preds: Sequence[ActionClass], truths: Sequence[ActionClass],
                     class_set: Iterable[ActionClass] | None = None) -> ConfusionMatrix:
    if len(preds) != len(truths):
        raise ShapeError(f"{len(preds)} predictions for {len(truths)} truths")
    classes = tuple(sorted(set(class_set))) if class_set is not None else tuple(all_classes())
    pos = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for p, t in zip(preds, truths):
        if p not in pos or t not in pos:
            raise LabelError(f"label {p if p not in pos else t} outside the class set")
        counts[pos[t], pos[p]] += 1
    return ConfusionMatrix(classes, counts)


def confusion_from_dict(d: dict) -> ConfusionMatrix:
    classes = tuple(ActionClass.parse(c) for c in d["classes"])
    return ConfusionMatrix(classes, np.asarray(d["counts"], dtype=np.int64))


def per_class_accuracy(cm: ConfusionMatrix) -> dict[str, float]:
    r = cm.rates
    return {c.label: float(r[i, i]) for i, c in enumerate(cm.class_set) if cm.counts[i].sum() > 0}


def stratified_split(labels: Sequence[ActionClass], train_frac: float = 0.7,
                     seed: int = 0) -> tuple[list[int], list[int]]:
    """Seeded per-class shuffle, ``train_frac`` of each class to training."""
    if not 0 < train_frac < 1:
        raise ConfigError("train fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in sorted(set(labels)):
        idx = np.array([i for i, lab in enumerate(labels) if lab == c])
        rng.shuffle(idx)
        n_train = int(round(train_frac * len(idx)))
        if len(idx) > 1:
            n_train = min(max(n_train, 1), len(idx) - 1)
        train += idx[:n_train].tolist()
        test += idx[n_train:].tolist()
    return sorted(train), sorted(test)
