"""Fine-grained partitions from multiple geoclass sets, score fusion onto
cells, and location prediction from the top-scoring cells.

Intersecting several coarse partitionings of the grid yields fine
partitions: each cell is labeled by the tuple of its class indices, one per
set, and only tuples actually realized by some cell exist. Classifier
scores are spread over the cells of their classes and summed across sets;
in ``normalized`` mode each classifier's total cell mass is first scaled to
exactly 1 so coarse and fine classifiers contribute equally. Scores are
accumulated once per fine partition and broadcast to cells, which both
accelerates fusion and keeps the argmax independent of cell enumeration
order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import cells as cells_mod
from .cells import CellId
from .classify import ScoreVector
from .dataset import Dataset
from .geo import GeoPoint, from_cartesian
from .partition import GeoclassSet
from .serialize import load_json_artifact, write_json_artifact

# Cells within this absolute tolerance of the maximum count as argmax ties.
ARGMAX_TOL = 1e-12

FUSION_MODES = ("normalized", "simple")


class FinePartitionIndex:
    """The nonempty intersections of several geoclass sets over one grid.

    ``tuples[p]`` is the class-index tuple naming fine partition ``p`` and
    ``cells_by_partition[p]`` its cells; partitions are ordered by tuple.
    Immutable once built and shareable across queries and threads.
    """

    def __init__(self, sets: Sequence[GeoclassSet]):
        if not sets:
            raise ValueError("need at least one geoclass set")
        levels = {gset.level for gset in sets}
        if len(levels) != 1:
            raise ValueError(f"geoclass sets are at different levels: {sorted(levels)}")
        self.sets = list(sets)
        self.level = levels.pop()

        grouped: dict[tuple[int, ...], list[CellId]] = {}
        for cell in cells_mod.all_cells(self.level):
            key = tuple(gset.cell_to_class[cell] for gset in self.sets)
            grouped.setdefault(key, []).append(cell)
        self.tuples: list[tuple[int, ...]] = sorted(grouped)
        self.cells_by_partition: list[tuple[CellId, ...]] = [tuple(grouped[t]) for t in self.tuples]
        self.cell_to_partition: dict[CellId, int] = {}
        for pid, members in enumerate(self.cells_by_partition):
            for cell in members:
                self.cell_to_partition[cell] = pid

        self.partition_cell_counts = np.array([len(m) for m in self.cells_by_partition], dtype=np.int64)
        self.class_cell_counts: list[np.ndarray] = [gset.class_cell_counts() for gset in self.sets]
        # Per set: the class index of each fine partition, for vectorized fusion.
        self._tuple_cols: list[np.ndarray] = [
            np.array([t[i] for t in self.tuples], dtype=np.intp) for i in range(len(self.sets))
        ]
        self.set_hashes: list[str] = [gset.content_hash() for gset in self.sets]

    @property
    def partition_count(self) -> int:
        return len(self.tuples)

    def partitions_of_class(self, set_index: int, class_index: int) -> list[int]:
        """Fine partitions overlapping one class of one set."""
        if not 0 <= set_index < len(self.sets):
            raise ValueError(f"set index {set_index} out of range")
        column = self._tuple_cols[set_index]
        return np.nonzero(column == class_index)[0].tolist()

    def to_json_dict(self) -> dict:
        return {
            "kind": "fine-partition-index",
            "level": self.level,
            "set_ids": [gset.set_id for gset in self.sets],
            "set_hashes": list(self.set_hashes),
            "partitions": [
                {"classes": list(t), "cells": [c.token for c in members]}
                for t, members in zip(self.tuples, self.cells_by_partition)
            ],
        }


def build_fine_index(sets: Sequence[GeoclassSet]) -> FinePartitionIndex:
    """Intersect geoclass sets into the fine partition index.

    The partition count always lies between the largest single-set class
    count and the product of all class counts.
    """
    return FinePartitionIndex(sets)


def save_index(index: FinePartitionIndex, path: str | Path) -> str:
    return write_json_artifact(path, index.to_json_dict())


def load_index(path: str | Path, sets: Sequence[GeoclassSet], verify: bool = True) -> FinePartitionIndex:
    """Load a cached index and check it matches the given sets by content hash.

    The partition table is taken from the file (no recomputation); per-class
    cell counts still come from the sets themselves.
    """
    payload = load_json_artifact(path, expected_kind="fine-partition-index", verify=verify)
    fresh_hashes = [gset.content_hash() for gset in sets]
    if payload["set_hashes"] != fresh_hashes or payload["set_ids"] != [g.set_id for g in sets]:
        raise ValueError(f"{path}: cached index was built from different geoclass sets")
    index = FinePartitionIndex.__new__(FinePartitionIndex)
    index.sets = list(sets)
    index.level = payload["level"]
    index.tuples = [tuple(entry["classes"]) for entry in payload["partitions"]]
    index.cells_by_partition = [
        tuple(CellId.from_token(t) for t in entry["cells"]) for entry in payload["partitions"]
    ]
    index.cell_to_partition = {
        cell: pid for pid, members in enumerate(index.cells_by_partition) for cell in members
    }
    index.partition_cell_counts = np.array([len(m) for m in index.cells_by_partition], dtype=np.int64)
    index.class_cell_counts = [gset.class_cell_counts() for gset in sets]
    index._tuple_cols = [
        np.array([t[i] for t in index.tuples], dtype=np.intp) for i in range(len(sets))
    ]
    index.set_hashes = fresh_hashes
    return index


@dataclass
class CellScoreField:
    """Fused scores over the grid, constant within each fine partition."""

    index: FinePartitionIndex
    partition_scores: np.ndarray
    mode: str

    def score(self, cell: CellId) -> float:
        return float(self.partition_scores[self.index.cell_to_partition[cell]])

    def max_score(self) -> float:
        return float(self.partition_scores.max())

    def total(self) -> float:
        """Sum of the field over all cells."""
        return float(self.partition_scores @ self.index.partition_cell_counts)

    def argmax_cells(self, tol: float = ARGMAX_TOL) -> list[CellId]:
        """All cells within ``tol`` of the maximum score, sorted."""
        top = self.partition_scores.max()
        winners = np.nonzero(self.partition_scores >= top - tol)[0]
        out: list[CellId] = []
        for pid in winners:
            out.extend(self.index.cells_by_partition[pid])
        return sorted(out)

    def per_cell(self) -> dict[CellId, float]:
        """Materialize the field cell by cell (mainly for inspection/tests)."""
        return {
            cell: float(self.partition_scores[pid])
            for pid, members in enumerate(self.index.cells_by_partition)
            for cell in members
        }


def fuse_scores(
    vectors: Sequence[ScoreVector], index: FinePartitionIndex, mode: str = "normalized"
) -> CellScoreField:
    """Fuse one score vector per set into a field over the grid.

    In ``normalized`` mode each classifier's scores are divided by its total
    cell mass (sum over cells of the cell's class score), so every
    classifier contributes exactly mass 1 to the field and the field sums to
    the number of sets; scaling any one vector by a positive constant leaves
    the field unchanged. ``simple`` mode adds raw class scores instead,
    favoring classifiers whose classes cover many cells.
    """
    if mode not in FUSION_MODES:
        raise ValueError(f"mode must be one of {FUSION_MODES}, got {mode!r}")
    if len(vectors) != len(index.sets):
        raise ValueError(f"need {len(index.sets)} score vectors (one per set), got {len(vectors)}")
    parts = np.zeros(index.partition_count)
    for i, (gset, vector) in enumerate(zip(index.sets, vectors)):
        if vector.set_id != gset.set_id:
            raise ValueError(
                f"score vector {i} is for set {vector.set_id!r}, expected {gset.set_id!r}"
            )
        if vector.scores.shape[0] != gset.class_count:
            raise ValueError(
                f"set {gset.set_id!r} has {gset.class_count} classes, "
                f"scores have length {vector.scores.shape[0]}"
            )
        contribution = vector.scores[index._tuple_cols[i]]
        if mode == "normalized":
            denominator = float(vector.scores @ index.class_cell_counts[i])
            if denominator <= 0.0:
                raise ValueError(f"set {gset.set_id!r}: all-zero scores cannot be normalized")
            contribution = contribution / denominator
        parts += contribution
    return CellScoreField(index=index, partition_scores=parts, mode=mode)


@dataclass(frozen=True)
class PredictionDiagnostics:
    """What stood behind one predicted location."""

    argmax_cells: tuple[CellId, ...]
    score_max: float
    argmax_image_count: int  # training images inside the argmax cells
    used_image_count: int    # training images behind the returned location
    expanded: bool           # argmax cells held no images; lower-scored cells were pulled in


def predict_location(field: CellScoreField, dataset: Dataset) -> tuple[GeoPoint, PredictionDiagnostics]:
    """Predict a location from the argmax cells of a fused field.

    The prediction is the spherical centroid of all training images inside
    the argmax cells, computed from the per-cell Cartesian location sums.
    If those cells hold no images, cells are added in descending score order
    (ties: cell order) until some do; the expansion is flagged.
    """
    if dataset.level != field.index.level:
        raise ValueError(f"dataset level {dataset.level} does not match field level {field.index.level}")
    argmax = field.argmax_cells()
    aggregates = dataset.aggregates
    argmax_images = sum(aggregates[c].image_count for c in argmax)

    used = list(argmax)
    used_images = argmax_images
    expanded = False
    if used_images == 0:
        expanded = True
        in_argmax = set(argmax)
        ranked: list[tuple[float, CellId]] = []
        for pid, members in enumerate(field.index.cells_by_partition):
            score = float(field.partition_scores[pid])
            for cell in members:
                if cell not in in_argmax:
                    ranked.append((-score, cell))
        ranked.sort(key=lambda item: (item[0], item[1]))
        for _, cell in ranked:
            used.append(cell)
            used_images += aggregates[cell].image_count
            if used_images > 0:
                break
        if used_images == 0:
            raise ValueError("dataset holds no training images; cannot predict a location")

    location_sum = np.zeros(3)
    for cell in used:
        location_sum += aggregates[cell].location_sum
    prediction = from_cartesian(location_sum)
    diagnostics = PredictionDiagnostics(
        argmax_cells=tuple(argmax),
        score_max=field.max_score(),
        argmax_image_count=argmax_images,
        used_image_count=used_images,
        expanded=expanded,
    )
    return prediction, diagnostics
