"""Geotagged feature datasets: ingestion, per-cell aggregation, persistence,
and construction of the initial region graph.

Records arrive as JSON Lines (one object per line with ``id``, ``lat``,
``lng`` and a fixed-dimension ``feat`` array) or as CSV with an
``id,lat,lng,f0..fD-1`` header. Each record is binned into the grid cell
containing its location; per-cell aggregates keep the image count, a
streaming mean feature, and the Cartesian sum of record locations.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import cells as cells_mod
from .cells import CellId
from .geo import GeoPoint, to_cartesian
from .partition import RegionGraph, RegionNode
from .serialize import file_sha256, load_json_artifact, write_json_artifact


@dataclass(frozen=True)
class GeoRecord:
    """One geotagged item: an opaque id, a location, and a feature vector."""

    id: str
    location: GeoPoint
    feature: np.ndarray

    def __post_init__(self) -> None:
        feat = np.asarray(self.feature, dtype=np.float64)
        if feat.ndim != 1:
            raise ValueError(f"record {self.id!r}: feature must be a 1-D vector")
        if not np.all(np.isfinite(feat)):
            raise ValueError(f"record {self.id!r}: feature contains non-finite values")
        feat = feat.copy()
        feat.setflags(write=False)
        object.__setattr__(self, "feature", feat)


@dataclass
class CellAggregate:
    """Running totals for one cell.

    ``mean_feature`` is maintained as a streaming mean so large cells cannot
    overflow a raw sum; it is None while the cell is empty. ``location_sum``
    is the sum of the unit vectors of member locations, so its norm never
    exceeds the image count.
    """

    cell: CellId
    image_count: int = 0
    mean_feature: np.ndarray | None = None
    location_sum: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def add(self, record: GeoRecord) -> None:
        self.image_count += 1
        v = to_cartesian(record.location)
        self.location_sum += (v.x, v.y, v.z)
        if self.mean_feature is None:
            self.mean_feature = record.feature.astype(np.float64)
        else:
            self.mean_feature = self.mean_feature + (record.feature - self.mean_feature) / self.image_count


class Dataset:
    """Records binned into cells at one grid level.

    ``aggregates`` covers every cell at the level, empty cells included, so
    graph construction and prediction can see the whole grid.
    """

    def __init__(self, level: int, records: Iterable[GeoRecord]):
        cells_mod.check_level(level)
        self.level = level
        self.records: list[GeoRecord] = list(records)
        dims = {r.feature.shape[0] for r in self.records}
        if len(dims) > 1:
            raise ValueError(f"inconsistent feature dimensions in dataset: {sorted(dims)}")
        self.feature_dim: int | None = dims.pop() if dims else None
        self.aggregates: dict[CellId, CellAggregate] = {
            cell: CellAggregate(cell) for cell in cells_mod.all_cells(level)
        }
        self.record_cells: dict[str, CellId] = {}
        for record in self.records:
            if record.id in self.record_cells:
                raise ValueError(f"duplicate record id {record.id!r}")
            cell = cells_mod.cell_at(record.location, level)
            self.aggregates[cell].add(record)
            self.record_cells[record.id] = cell

    @property
    def record_count(self) -> int:
        return len(self.records)

    def nonempty_cells(self) -> list[CellId]:
        return sorted(c for c, agg in self.aggregates.items() if agg.image_count > 0)


@dataclass
class IngestReport:
    """Outcome of an ingest run: accepted count plus per-line rejections."""

    accepted: int = 0
    rejected: int = 0
    failures: list[tuple[int, str]] = field(default_factory=list)

    def reject(self, lineno: int, reason: str) -> None:
        self.rejected += 1
        self.failures.append((lineno, reason))


def _record_from_obj(obj) -> GeoRecord:
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    missing = [key for key in ("id", "lat", "lng", "feat") if key not in obj]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    rid = obj["id"]
    if not isinstance(rid, str) or not rid:
        raise ValueError(f"id must be a nonempty string, got {rid!r}")
    lat, lng = obj["lat"], obj["lng"]
    if not isinstance(lat, (int, float)) or not isinstance(lng, (int, float)):
        raise ValueError("lat/lng must be numbers")
    feat = obj["feat"]
    if not isinstance(feat, list) or not feat:
        raise ValueError("feat must be a nonempty array")
    return GeoRecord(id=rid, location=GeoPoint(lat, lng), feature=np.asarray(feat, dtype=np.float64))


def _collect(parsed_lines: Iterable[tuple[int, GeoRecord | str]], level: int, strict: bool) -> tuple[Dataset, IngestReport]:
    report = IngestReport()
    records: list[GeoRecord] = []
    seen: set[str] = set()
    feature_dim: int | None = None
    for lineno, item in parsed_lines:
        if isinstance(item, str):  # rejection reason
            if strict:
                raise ValueError(f"line {lineno}: {item}")
            report.reject(lineno, item)
            continue
        dim = item.feature.shape[0]
        if feature_dim is None:
            feature_dim = dim
        elif dim != feature_dim:
            raise ValueError(
                f"line {lineno}: feature dimension {dim} does not match established dimension {feature_dim}"
            )
        if item.id in seen:
            if strict:
                raise ValueError(f"line {lineno}: duplicate record id {item.id!r}")
            report.reject(lineno, f"duplicate record id {item.id!r}")
            continue
        seen.add(item.id)
        records.append(item)
        report.accepted += 1
    return Dataset(level, records), report


def ingest(lines: Iterable[str], level: int, strict: bool = False) -> tuple[Dataset, IngestReport]:
    """Read JSON Lines records into a dataset.

    Malformed lines (bad JSON, missing fields, invalid coordinates,
    non-finite features, duplicate ids) are counted and reported rather than
    fatal, unless ``strict``. A feature dimension mismatch is always fatal.
    """

    def parse():
        for lineno, raw in enumerate(lines, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                yield lineno, _record_from_obj(json.loads(text))
            except ValueError as exc:
                yield lineno, str(exc)

    return _collect(parse(), level, strict)


def ingest_csv(lines: Iterable[str], level: int, strict: bool = False) -> tuple[Dataset, IngestReport]:
    """Read CSV records with an ``id,lat,lng,f0..fD-1`` header."""
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("CSV input is empty") from None
    expected_dim = len(header) - 3
    if header[:3] != ["id", "lat", "lng"] or expected_dim < 1 or header[3:] != [f"f{i}" for i in range(expected_dim)]:
        raise ValueError(f"bad CSV header: {header!r} (want id,lat,lng,f0..fD-1)")

    def parse():
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                yield lineno, f"expected {len(header)} columns, got {len(row)}"
                continue
            try:
                feat = [float(x) for x in row[3:]]
                yield lineno, _record_from_obj(
                    {"id": row[0], "lat": float(row[1]), "lng": float(row[2]), "feat": feat}
                )
            except ValueError as exc:
                yield lineno, str(exc)

    return _collect(parse(), level, strict)


MANIFEST_NAME = "manifest.json"
RECORDS_NAME = "records.json"
AGGREGATES_NAME = "aggregates.json"


def save_dataset(dataset: Dataset, directory: str | Path, seed: int | None = None) -> dict:
    """Persist a dataset as a directory of manifest + records + aggregates.

    Record order is preserved (streaming means depend on it), files are
    canonical JSON, and the manifest carries their hashes. Returns the
    manifest payload.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    records_payload = {
        "kind": "dataset-records",
        "records": [
            {
                "id": r.id,
                "lat": r.location.lat,
                "lng": r.location.lng,
                "feat": [float(x) for x in r.feature],
            }
            for r in dataset.records
        ],
    }
    write_json_artifact(directory / RECORDS_NAME, records_payload)

    aggregates_payload = {
        "kind": "dataset-aggregates",
        "level": dataset.level,
        "cells": [
            {
                "cell": cell.token,
                "image_count": agg.image_count,
                "mean_feature": [float(x) for x in agg.mean_feature],
                "location_sum": [float(x) for x in agg.location_sum],
            }
            for cell, agg in sorted(dataset.aggregates.items())
            if agg.image_count > 0
        ],
    }
    write_json_artifact(directory / AGGREGATES_NAME, aggregates_payload)

    manifest = {
        "kind": "dataset",
        "level": dataset.level,
        "feature_dim": dataset.feature_dim,
        "record_count": dataset.record_count,
        "seed": seed,
        "files": {
            RECORDS_NAME: file_sha256(directory / RECORDS_NAME),
            AGGREGATES_NAME: file_sha256(directory / AGGREGATES_NAME),
        },
    }
    write_json_artifact(directory / MANIFEST_NAME, manifest)
    return manifest


def load_dataset(directory: str | Path, verify: bool = True) -> Dataset:
    """Load a persisted dataset, verifying manifest and file hashes."""
    directory = Path(directory)
    manifest = load_json_artifact(directory / MANIFEST_NAME, expected_kind="dataset", verify=verify)
    if verify:
        for name, expected in manifest["files"].items():
            actual = file_sha256(directory / name)
            if actual != expected:
                raise ValueError(f"{directory / name}: file hash mismatch (manifest {expected}, actual {actual})")
    records_payload = load_json_artifact(directory / RECORDS_NAME, expected_kind="dataset-records", verify=verify)
    records = [
        GeoRecord(id=entry["id"], location=GeoPoint(entry["lat"], entry["lng"]), feature=np.asarray(entry["feat"]))
        for entry in records_payload["records"]
    ]
    dataset = Dataset(manifest["level"], records)
    if dataset.record_count != manifest["record_count"]:
        raise ValueError(
            f"{directory}: manifest declares {manifest['record_count']} records, found {dataset.record_count}"
        )
    return dataset


def build_base_graph(dataset: Dataset, seed: int) -> RegionGraph:
    """Build the initial region graph: one node per non-empty cell, with every
    empty cell randomly absorbed into a node it can reach.

    Absorption runs in rounds. Each round, every still-unassigned cell that
    touches a cell assigned at the start of the round joins the node of one
    such neighbor, chosen uniformly by the seeded generator; rounds repeat
    until the grid is covered. The result partitions all cells into
    edge-connected node regions and is reproducible for a given seed.
    """
    if dataset.record_count == 0:
        raise ValueError("cannot build a region graph from a dataset with no records")
    level = dataset.level
    rng = random.Random(seed)

    nonempty = dataset.nonempty_cells()
    owner: dict[CellId, int] = {cell: idx for idx, cell in enumerate(nonempty)}
    members: dict[int, set[CellId]] = {idx: {cell} for idx, cell in enumerate(nonempty)}

    neighbor_memo: dict[CellId, list[CellId]] = {}

    def neighbors_of(cell: CellId) -> list[CellId]:
        got = neighbor_memo.get(cell)
        if got is None:
            got = sorted(cells_mod.neighbors(cell))
            neighbor_memo[cell] = got
        return got

    unassigned = sorted(set(cells_mod.all_cells(level)) - set(nonempty))
    while unassigned:
        pending: list[tuple[CellId, int]] = []
        for cell in unassigned:
            candidates = [nbr for nbr in neighbors_of(cell) if nbr in owner]
            if candidates:
                pending.append((cell, owner[rng.choice(candidates)]))
        if not pending:
            raise RuntimeError("empty-cell absorption stalled; grid adjacency should be connected")
        assigned_now = set()
        for cell, node_id in pending:
            owner[cell] = node_id
            members[node_id].add(cell)
            assigned_now.add(cell)
        unassigned = [cell for cell in unassigned if cell not in assigned_now]

    nodes = []
    for node_id, cell_set in members.items():
        image_count = 0
        nonempty_count = 0
        location_sum = np.zeros(3)
        feature = None
        for cell in cell_set:
            agg = dataset.aggregates[cell]
            if agg.image_count == 0:
                continue
            nonempty_count += 1
            location_sum += agg.location_sum
            if feature is None:
                feature = agg.image_count * agg.mean_feature
            else:
                feature = feature + agg.image_count * agg.mean_feature
            image_count += agg.image_count
        nodes.append(
            RegionNode(
                id=node_id,
                cells=cell_set,
                image_count=image_count,
                nonempty_cell_count=nonempty_count,
                cell_count=len(cell_set),
                feature=None if feature is None else feature / image_count,
                location_sum=location_sum,
            )
        )

    edges = set()
    for cell, node_id in owner.items():
        for nbr in neighbors_of(cell):
            other = owner[nbr]
            if other != node_id:
                edges.add((min(node_id, other), max(node_id, other)))

    return RegionGraph(level, nodes, edges)
