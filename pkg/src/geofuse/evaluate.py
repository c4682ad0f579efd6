"""Accuracy-at-radius evaluation and the class-count sweep experiment."""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .classify import ScoreVector, predict_scores_batch, train_centroid_classifier
from .dataset import Dataset, GeoRecord
from .fusion import build_fine_index, fuse_scores, predict_location
from .geo import GeoPoint, geodesic_km
from .partition import GenParams, RegionGraph, generate_geoclass_set

DEFAULT_RADII_KM: tuple[float, ...] = (1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 200.0, 750.0, 2500.0)


def _check_radii(radii: Sequence[float]) -> tuple[float, ...]:
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise ValueError("need at least one radius")
    if radii[0] <= 0.0 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must be positive and strictly increasing, got {radii}")
    return radii


@dataclass
class EvalReport:
    """Accuracy at each radius plus the per-query distances behind it.

    A query counts toward radius ``r`` iff its distance is strictly below
    ``r``, so accuracies are non-decreasing in the radius and exactly
    recomputable from the stored distances.
    """

    radii_km: tuple[float, ...]
    accuracy: dict[float, float]
    query_count: int
    distances_km: dict[str, float]

    def accuracy_row(self) -> list[float]:
        return [self.accuracy[r] for r in self.radii_km]

    def to_json_dict(self) -> dict:
        return {
            "kind": "eval-report",
            "radii_km": list(self.radii_km),
            "accuracy": {str(r): self.accuracy[r] for r in self.radii_km},
            "query_count": self.query_count,
            "distances_km": dict(sorted(self.distances_km.items())),
        }


def accuracy_at(
    predictions: Mapping[str, GeoPoint],
    truth: Mapping[str, GeoPoint],
    radii: Sequence[float] = DEFAULT_RADII_KM,
) -> EvalReport:
    """Fraction of queries whose prediction is strictly within each radius."""
    radii = _check_radii(radii)
    pred_keys = set(predictions)
    truth_keys = set(truth)
    if pred_keys != truth_keys:
        missing = sorted(truth_keys - pred_keys)[:5]
        extra = sorted(pred_keys - truth_keys)[:5]
        raise ValueError(f"prediction/truth key mismatch (missing {missing}, extra {extra})")
    if not predictions:
        raise ValueError("cannot evaluate an empty query set")
    distances = {qid: geodesic_km(predictions[qid], truth[qid]) for qid in predictions}
    count = len(distances)
    values = list(distances.values())
    accuracy = {r: sum(1 for d in values if d < r) / count for r in radii}
    return EvalReport(radii_km=radii, accuracy=accuracy, query_count=count, distances_km=distances)


def write_reports_csv(rows: Sequence[tuple[str, EvalReport]], path: str | Path) -> None:
    """One labeled row per report, one accuracy column per radius."""
    if not rows:
        raise ValueError("no reports to write")
    radii = rows[0][1].radii_km
    for _, report in rows:
        if report.radii_km != radii:
            raise ValueError("all reports in one CSV must share the same radii")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["label"] + [f"acc@{r:g}km" for r in radii])
        for label, report in rows:
            writer.writerow([label] + [repr(a) for a in report.accuracy_row()])


@dataclass
class SweepRow:
    class_count: int
    report: EvalReport


def sweep_class_count(
    dataset: Dataset,
    graph: RegionGraph,
    base_params: GenParams,
    counts: Sequence[int],
    test_records: Sequence[GeoRecord],
    radii: Sequence[float] = DEFAULT_RADII_KM,
    temperature: float = 1.0,
    set_id_prefix: str = "sweep",
    workers: int = 1,
) -> list[SweepRow]:
    """Accuracy of a single-set classifier as its class count varies.

    For each count, one geoclass set is generated from the shared graph with
    the base parameters, a centroid classifier is trained on the dataset,
    and the held-out records are predicted and scored at each radius.
    Counts run sequentially by default; ``workers > 1`` runs them on a
    thread pool (all shared state is read-only), with identical results.
    """
    radii = _check_radii(radii)
    if not counts:
        raise ValueError("need at least one class count")
    if not test_records:
        raise ValueError("need at least one test record")
    features = np.stack([record.feature for record in test_records])
    truth = {record.id: record.location for record in test_records}

    def run_one(count: int) -> SweepRow:
        params = dataclasses.replace(base_params, target_classes=int(count))
        gset = generate_geoclass_set(graph, params, set_id=f"{set_id_prefix}-{count}")
        classifier = train_centroid_classifier(dataset, gset, temperature=temperature)
        index = build_fine_index([gset])
        score_matrix = predict_scores_batch(classifier, features)
        predictions = {}
        for record, scores in zip(test_records, score_matrix):
            field = fuse_scores([ScoreVector(set_id=gset.set_id, scores=scores)], index)
            predictions[record.id], _ = predict_location(field, dataset)
        return SweepRow(class_count=int(count), report=accuracy_at(predictions, truth, radii))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_one, counts))
    return [run_one(count) for count in counts]


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    """Class-count by radius accuracy matrix."""
    if not rows:
        raise ValueError("no sweep rows to write")
    radii = rows[0].report.radii_km
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["num_classes"] + [f"acc@{r:g}km" for r in radii])
        for row in rows:
            writer.writerow([row.class_count] + [repr(a) for a in row.report.accuracy_row()])


def sweep_json_dict(rows: Sequence[SweepRow]) -> dict:
    return {
        "kind": "sweep-report",
        "rows": [
            {"num_classes": row.class_count, "report": row.report.to_json_dict()} for row in rows
        ],
    }
