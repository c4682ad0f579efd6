"""Per-geoclass scoring for query features.

A nearest-centroid softmax baseline stands in for learned per-set
classifiers, and externally computed score files can be loaded in the same
shape, so either source feeds the fusion stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import Dataset
from .partition import GeoclassSet


@dataclass(frozen=True)
class ScoreVector:
    """Nonnegative per-class scores from one classifier over one set."""

    set_id: str
    scores: np.ndarray

    def __post_init__(self) -> None:
        scores = np.asarray(self.scores, dtype=np.float64)
        if scores.ndim != 1 or scores.shape[0] == 0:
            raise ValueError(f"scores for set {self.set_id!r} must be a nonempty 1-D vector")
        if not np.all(np.isfinite(scores)):
            raise ValueError(f"scores for set {self.set_id!r} contain non-finite values")
        if np.any(scores < 0.0):
            raise ValueError(f"scores for set {self.set_id!r} contain negative values")
        if not np.any(scores > 0.0):
            raise ValueError(f"scores for set {self.set_id!r} are all zero")
        scores = scores.copy()
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)


@dataclass
class CentroidClassifier:
    """Softmax over negative distance to per-class mean features.

    Classes that had no training records are flagged in ``empty_classes``
    and always score exactly 0.
    """

    set_id: str
    centroids: np.ndarray  # (classes, feature dim); rows of empty classes are zeros
    empty_classes: frozenset[int]
    temperature: float = 1.0

    def __post_init__(self) -> None:
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2:
            raise ValueError("centroids must be a (classes, dim) matrix")
        if not self.temperature > 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        self.empty_classes = frozenset(int(i) for i in self.empty_classes)
        if len(self.empty_classes) >= self.centroids.shape[0]:
            raise ValueError("a classifier needs at least one non-empty class")

    @property
    def class_count(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.centroids.shape[1])


def train_centroid_classifier(
    dataset: Dataset, geoclass_set: GeoclassSet, temperature: float = 1.0
) -> CentroidClassifier:
    """Fit per-class centroids as the mean feature of each class's records."""
    if dataset.level != geoclass_set.level:
        raise ValueError(
            f"dataset level {dataset.level} does not match geoclass set level {geoclass_set.level}"
        )
    if dataset.feature_dim is None:
        raise ValueError("cannot train on a dataset with no records")
    n_classes = geoclass_set.class_count
    sums = np.zeros((n_classes, dataset.feature_dim))
    counts = np.zeros(n_classes, dtype=np.int64)
    for record in dataset.records:
        cls = geoclass_set.cell_to_class[dataset.record_cells[record.id]]
        sums[cls] += record.feature
        counts[cls] += 1
    empty = counts == 0
    if empty.all():
        raise ValueError(f"every class of set {geoclass_set.set_id!r} is empty of training records")
    centroids = np.zeros_like(sums)
    nonempty = ~empty
    centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
    return CentroidClassifier(
        set_id=geoclass_set.set_id,
        centroids=centroids,
        empty_classes=frozenset(np.nonzero(empty)[0].tolist()),
        temperature=float(temperature),
    )


def predict_scores_batch(classifier: CentroidClassifier, features: np.ndarray) -> np.ndarray:
    """Score a batch of features; rows sum to 1 over non-empty classes."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != classifier.feature_dim:
        raise ValueError(
            f"features must have shape (n, {classifier.feature_dim}), got {features.shape}"
        )
    live = np.array([i for i in range(classifier.class_count) if i not in classifier.empty_classes])
    cents = classifier.centroids[live]
    # Squared distances via the expansion trick; clip negatives from rounding.
    d2 = (
        np.sum(features**2, axis=1)[:, None]
        + np.sum(cents**2, axis=1)[None, :]
        - 2.0 * features @ cents.T
    )
    dist = np.sqrt(np.maximum(d2, 0.0))
    logits = -dist / classifier.temperature
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    probs = weights / weights.sum(axis=1, keepdims=True)
    out = np.zeros((features.shape[0], classifier.class_count))
    out[:, live] = probs
    return out


def predict_scores(classifier: CentroidClassifier, feature: np.ndarray) -> ScoreVector:
    """Score one feature vector against the classifier's set."""
    feature = np.asarray(feature, dtype=np.float64)
    if feature.ndim != 1:
        raise ValueError("feature must be a 1-D vector")
    row = predict_scores_batch(classifier, feature[None, :])[0]
    return ScoreVector(set_id=classifier.set_id, scores=row)


def dump_scores(target, scores: Mapping[str, Sequence[ScoreVector]]) -> None:
    """Write a query -> score vectors mapping as JSON Lines."""

    def lines():
        for query_id, vectors in scores.items():
            for vec in vectors:
                yield json.dumps(
                    {"query_id": query_id, "set_id": vec.set_id, "scores": [float(x) for x in vec.scores]},
                    sort_keys=True,
                    separators=(",", ":"),
                )

    if hasattr(target, "write"):
        for line in lines():
            target.write(line + "\n")
    else:
        Path(target).write_text("".join(line + "\n" for line in lines()), encoding="utf-8")


def load_scores(
    source: str | Path | Iterable[str], expected_sets: Sequence[GeoclassSet]
) -> dict[str, list[ScoreVector]]:
    """Load externally computed scores and validate them against the sets.

    Every query must be covered once for every expected set, each vector's
    length must match that set's class count, and scores must be valid per
    ScoreVector. Returns vectors per query in expected-set order.
    """
    if not expected_sets:
        raise ValueError("expected_sets must not be empty")
    positions: dict[str, int] = {}
    for idx, gset in enumerate(expected_sets):
        if gset.set_id in positions:
            raise ValueError(f"duplicate set id {gset.set_id!r} in expected sets")
        positions[gset.set_id] = idx

    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = list(source)

    rows: dict[str, list[ScoreVector | None]] = {}
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"score line {lineno}: bad JSON: {exc}") from None
        if not isinstance(obj, dict) or not {"query_id", "set_id", "scores"} <= obj.keys():
            raise ValueError(f"score line {lineno}: need query_id, set_id and scores fields")
        set_id = obj["set_id"]
        if set_id not in positions:
            raise ValueError(f"score line {lineno}: unknown set id {set_id!r}")
        idx = positions[set_id]
        expected_len = expected_sets[idx].class_count
        raw_scores = obj["scores"]
        if not isinstance(raw_scores, list) or len(raw_scores) != expected_len:
            raise ValueError(
                f"score line {lineno}: set {set_id!r} expects {expected_len} scores, "
                f"got {len(raw_scores) if isinstance(raw_scores, list) else 'non-list'}"
            )
        try:
            vector = ScoreVector(set_id=set_id, scores=np.asarray(raw_scores, dtype=np.float64))
        except ValueError as exc:
            raise ValueError(f"score line {lineno}: {exc}") from None
        query_id = obj["query_id"]
        if not isinstance(query_id, str):
            raise ValueError(f"score line {lineno}: query_id must be a string")
        slots = rows.setdefault(query_id, [None] * len(expected_sets))
        if slots[idx] is not None:
            raise ValueError(f"score line {lineno}: duplicate scores for query {query_id!r}, set {set_id!r}")
        slots[idx] = vector

    if not rows:
        raise ValueError("score input contains no rows")
    for query_id, slots in rows.items():
        missing = [expected_sets[i].set_id for i, slot in enumerate(slots) if slot is None]
        if missing:
            raise ValueError(f"query {query_id!r} lacks scores for sets: {', '.join(missing)}")
    return {query_id: list(slots) for query_id, slots in rows.items()}  # type: ignore[arg-type]
