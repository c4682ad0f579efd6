"""Geoclass set generation by greedy hierarchical merging of a region graph.

A region graph has one node per region (a set of grid cells) and an edge
between nodes owning adjacent cells. Nodes are scored by a weighted count
of their images and cells; edges are weighted by a normalized mix of
visual and geographic distance. Merging repeatedly absorbs the
lowest-scored node into its nearest neighbor until the desired number of
classes remains; the surviving nodes become the geoclasses.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import cells as cells_mod
from .cells import CellId
from .geo import HALF_CIRCUMFERENCE_KM, GeoPoint, from_cartesian, geodesic_km, to_cartesian
from .serialize import content_hash_of, load_json_artifact, write_json_artifact


@dataclass
class RegionNode:
    """One region: its cells plus the aggregates merging needs.

    ``feature`` is the mean feature of the region's images (None when it has
    none); ``location_sum`` is the sum of the unit vectors of its image
    locations.
    """

    id: int
    cells: set[CellId]
    image_count: int
    nonempty_cell_count: int
    cell_count: int
    feature: np.ndarray | None
    location_sum: np.ndarray

    def center(self) -> GeoPoint:
        """Image centroid when the node has images, cell centroid otherwise."""
        if self.image_count > 0:
            return from_cartesian(self.location_sum)
        acc = np.zeros(3)
        for cell in self.cells:
            acc += tuple(to_cartesian(cells_mod.cell_center(cell)))
        return from_cartesian(acc)

    def copy(self) -> "RegionNode":
        return RegionNode(
            id=self.id,
            cells=set(self.cells),
            image_count=self.image_count,
            nonempty_cell_count=self.nonempty_cell_count,
            cell_count=self.cell_count,
            feature=None if self.feature is None else self.feature.copy(),
            location_sum=self.location_sum.copy(),
        )


class RegionGraph:
    """Nodes owning disjoint cell sets, edges between nodes with adjacent cells."""

    def __init__(self, level: int, nodes: Iterable[RegionNode], edges: Iterable[tuple[int, int]]):
        cells_mod.check_level(level)
        self.level = level
        self.nodes: dict[int, RegionNode] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise ValueError(f"duplicate node id {node.id}")
            self.nodes[node.id] = node
        self.adj: dict[int, set[int]] = {nid: set() for nid in self.nodes}
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if u not in self.nodes or v not in self.nodes:
                raise ValueError(f"edge ({u}, {v}) references an unknown node")
            self.adj[u].add(v)
            self.adj[v].add(u)

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted({(min(u, v), max(u, v)) for u, nbrs in self.adj.items() for v in nbrs})

    def component_count(self) -> int:
        seen: set[int] = set()
        count = 0
        for start in self.nodes:
            if start in seen:
                continue
            count += 1
            stack = [start]
            seen.add(start)
            while stack:
                for nbr in self.adj[stack.pop()]:
                    if nbr not in seen:
                        seen.add(nbr)
                        stack.append(nbr)
        return count

    def to_json_dict(self) -> dict:
        nodes = []
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            nodes.append(
                {
                    "id": nid,
                    "cells": [c.token for c in sorted(node.cells)],
                    "image_count": node.image_count,
                    "nonempty_cell_count": node.nonempty_cell_count,
                    "cell_count": node.cell_count,
                    "feature": None if node.feature is None else [float(x) for x in node.feature],
                    "location_sum": [float(x) for x in node.location_sum],
                }
            )
        return {
            "kind": "region-graph",
            "level": self.level,
            "nodes": nodes,
            "edges": [list(e) for e in self.edge_list()],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "RegionGraph":
        nodes = [
            RegionNode(
                id=entry["id"],
                cells={CellId.from_token(t) for t in entry["cells"]},
                image_count=entry["image_count"],
                nonempty_cell_count=entry["nonempty_cell_count"],
                cell_count=entry["cell_count"],
                feature=None if entry["feature"] is None else np.asarray(entry["feature"], dtype=np.float64),
                location_sum=np.asarray(entry["location_sum"], dtype=np.float64),
            )
            for entry in payload["nodes"]
        ]
        return cls(payload["level"], nodes, [tuple(e) for e in payload["edges"]])


@dataclass(frozen=True)
class GenParams:
    """Knobs for one geoclass-set generation run.

    ``alpha`` weights the node score terms (image count, non-empty cell
    count, total cell count); ``beta`` weights the edge terms (visual
    distance, geographic distance). ``feature_dims`` restricts visual
    distance to an axis-aligned feature subspace; None means the full
    feature space.
    """

    target_classes: int
    alpha: tuple[float, float, float]
    beta: tuple[float, float]
    feature_dims: tuple[int, ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.target_classes < 1:
            raise ValueError(f"target_classes must be >= 1, got {self.target_classes}")
        alpha = tuple(float(a) for a in self.alpha)
        beta = tuple(float(b) for b in self.beta)
        if len(alpha) != 3 or any(not 0.0 <= a <= 1.0 for a in alpha):
            raise ValueError(f"alpha must be three weights in [0, 1], got {self.alpha!r}")
        if len(beta) != 2 or any(not 0.0 <= b <= 1.0 for b in beta):
            raise ValueError(f"beta must be two weights in [0, 1], got {self.beta!r}")
        if not any(a > 0.0 for a in alpha):
            raise ValueError("at least one alpha weight must be positive")
        if not any(b > 0.0 for b in beta):
            raise ValueError("at least one beta weight must be positive")
        dims = self.feature_dims
        if dims is not None:
            dims = tuple(int(d) for d in dims)
            if any(d < 0 for d in dims) or len(set(dims)) != len(dims):
                raise ValueError(f"feature_dims must be distinct nonnegative indices, got {self.feature_dims!r}")
            dims = tuple(sorted(dims))
            if not dims and beta[0] > 0.0:
                raise ValueError("an empty feature subspace cannot carry a positive visual weight")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "feature_dims", dims)
        object.__setattr__(self, "seed", int(self.seed))

    def to_json_dict(self) -> dict:
        return {
            "target_classes": self.target_classes,
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "feature_dims": None if self.feature_dims is None else list(self.feature_dims),
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "GenParams":
        return cls(
            target_classes=payload["target_classes"],
            alpha=tuple(payload["alpha"]),
            beta=tuple(payload["beta"]),
            feature_dims=None if payload["feature_dims"] is None else tuple(payload["feature_dims"]),
            seed=payload["seed"],
        )


def draw_feature_dims(count: int, total_dims: int, seed: int) -> tuple[int, ...]:
    """Pick a random axis-aligned feature subspace of the given size."""
    if not 0 <= count <= total_dims:
        raise ValueError(f"subspace size {count} outside [0, {total_dims}]")
    if count == total_dims:
        return tuple(range(total_dims))
    rng = random.Random(seed)
    return tuple(sorted(rng.sample(range(total_dims), count)))


def node_score(node: RegionNode, alpha: Sequence[float]) -> float:
    """Merge priority of a node: alpha-weighted sum of its three counts."""
    a1, a2, a3 = alpha
    return a1 * node.image_count + a2 * node.nonempty_cell_count + a3 * node.cell_count


def _exact_node_score(node: RegionNode, alpha: Sequence[float]) -> Fraction:
    # Exact dyadic arithmetic so summed scores conserve exactly across merges.
    a1, a2, a3 = (Fraction(float(a)) for a in alpha)
    return a1 * node.image_count + a2 * node.nonempty_cell_count + a3 * node.cell_count


def _visual_distance(u: RegionNode, v: RegionNode, feature_dims: Sequence[int] | None) -> float:
    """Cosine dissimilarity of node features mapped into [0, 1].

    Nodes without a usable feature (no images, or a zero vector in the
    chosen subspace) are maximally dissimilar.
    """
    if u.feature is None or v.feature is None:
        return 1.0
    fu, fv = u.feature, v.feature
    if feature_dims is not None:
        idx = np.asarray(feature_dims, dtype=np.intp)
        fu, fv = fu[idx], fv[idx]
    nu = float(np.linalg.norm(fu))
    nv = float(np.linalg.norm(fv))
    if nu == 0.0 or nv == 0.0:
        return 1.0
    if np.array_equal(fu, fv):
        return 0.0  # identical vectors: cosine is exactly 1, no rounding residue
    cos = float(np.dot(fu, fv)) / (nu * nv)
    cos = max(-1.0, min(1.0, cos))
    return (1.0 - cos) / 2.0


def edge_weight(
    u: RegionNode,
    v: RegionNode,
    beta: Sequence[float],
    feature_dims: Sequence[int] | None = None,
) -> float:
    """Dissimilarity of two adjacent regions, in [0, beta1 + beta2].

    A weighted sum of the visual distance (cosine dissimilarity of node
    features, halved into [0, 1]) and the geographic distance (great-circle
    distance between node centers as a fraction of half the circumference).
    Symmetric in its node arguments.
    """
    b1, b2 = (float(b) for b in beta)
    vis = _visual_distance(u, v, feature_dims) if b1 != 0.0 else 0.0
    geo = geodesic_km(u.center(), v.center()) / HALF_CIRCUMFERENCE_KM if b2 != 0.0 else 0.0
    return b1 * vis + b2 * geo


@dataclass
class GeoclassSet:
    """One complete labeling of every cell at a level into classes.

    ``classes[i]`` is the sorted tuple of cells with class index ``i``;
    classes are ordered by their smallest cell, so equal partitionings have
    equal serializations regardless of construction order.
    """

    set_id: str
    level: int
    classes: list[tuple[CellId, ...]]
    params: GenParams | None = None
    cell_to_class: dict[CellId, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        cells_mod.check_level(self.level)
        if not self.classes:
            raise ValueError("a geoclass set needs at least one class")
        canonical = []
        for cls in self.classes:
            members = tuple(sorted(cls))
            if not members:
                raise ValueError("classes must be nonempty")
            canonical.append(members)
        canonical.sort(key=lambda members: members[0])
        mapping: dict[CellId, int] = {}
        for index, members in enumerate(canonical):
            for cell in members:
                if cell.level != self.level:
                    raise ValueError(f"cell {cell.token} is not at level {self.level}")
                if cell in mapping:
                    raise ValueError(f"cell {cell.token} appears in more than one class")
                mapping[cell] = index
        expected = cells_mod.cell_count(self.level)
        if len(mapping) != expected:
            raise ValueError(
                f"classes cover {len(mapping)} cells but level {self.level} has {expected}"
            )
        if self.params is not None and len(canonical) != self.params.target_classes:
            raise ValueError(
                f"set has {len(canonical)} classes but its params target {self.params.target_classes}"
            )
        self.classes = canonical
        self.cell_to_class = mapping

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def class_cell_counts(self) -> np.ndarray:
        """Total cells per class (empty cells included)."""
        return np.array([len(members) for members in self.classes], dtype=np.int64)

    def to_json_dict(self) -> dict:
        return {
            "kind": "geoclass-set",
            "set_id": self.set_id,
            "level": self.level,
            "params": None if self.params is None else self.params.to_json_dict(),
            "classes": [[cell.token for cell in members] for members in self.classes],
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "GeoclassSet":
        return cls(
            set_id=payload["set_id"],
            level=payload["level"],
            classes=[tuple(CellId.from_token(t) for t in members) for members in payload["classes"]],
            params=None if payload.get("params") is None else GenParams.from_json_dict(payload["params"]),
        )

    def content_hash(self) -> str:
        return content_hash_of(self.to_json_dict())

    def save(self, path: str | Path) -> str:
        return write_json_artifact(path, self.to_json_dict())

    @classmethod
    def load(cls, path: str | Path, verify: bool = True) -> "GeoclassSet":
        return cls.from_json_dict(load_json_artifact(path, expected_kind="geoclass-set", verify=verify))


class GreedyMerger:
    """Greedy hierarchical merging of a region graph down to a target count.

    Each step takes the lowest-scored node (ties: smallest id) and merges it
    into its nearest neighbor by edge weight (ties: smallest id). The merged
    node gets the union of cells and edges, summed counts and location sums,
    the image-count-weighted mean feature, and the exact sum of the two
    scores. Edge weights around the merged node are implicitly recomputed
    from its new aggregates, because weights are always evaluated fresh from
    node state.

    Node scores are exact rationals, so the total score is conserved exactly
    over any number of merges. A node whose component has shrunk to itself
    simply keeps its class; the run fails upfront if the graph has more
    connected components than the target allows.
    """

    def __init__(self, graph: RegionGraph, params: GenParams):
        if params.target_classes > graph.node_count:
            raise ValueError(
                f"target_classes {params.target_classes} exceeds node count {graph.node_count}"
            )
        components = graph.component_count()
        if components > params.target_classes:
            raise ValueError(
                f"graph has {components} connected components, more than the "
                f"{params.target_classes} requested classes; merging cannot bridge components"
            )
        if params.feature_dims:
            dims = max(params.feature_dims)
            for node in graph.nodes.values():
                if node.feature is not None and dims >= node.feature.shape[0]:
                    raise ValueError(
                        f"feature_dims index {dims} out of range for {node.feature.shape[0]}-d features"
                    )
        self.level = graph.level
        self.params = params
        self.nodes: dict[int, RegionNode] = {nid: node.copy() for nid, node in graph.nodes.items()}
        self.adj: dict[int, set[int]] = {nid: set(nbrs) for nid, nbrs in graph.adj.items()}
        self.scores: dict[int, Fraction] = {
            nid: _exact_node_score(node, params.alpha) for nid, node in self.nodes.items()
        }
        self._heap: list[tuple[Fraction, int]] = [(score, nid) for nid, score in self.scores.items()]
        heapq.heapify(self._heap)
        self._frozen: set[int] = set()
        self._next_id = max(self.nodes) + 1 if self.nodes else 0

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def total_score(self) -> Fraction:
        return sum(self.scores.values(), Fraction(0))

    def done(self) -> bool:
        return self.node_count <= self.params.target_classes

    def step(self) -> tuple[int, int, int]:
        """Perform one merge; returns (lowest node, partner, new node id)."""
        if self.done():
            raise RuntimeError("merging already reached the target class count")
        while True:
            if not self._heap:
                raise RuntimeError("exhausted mergeable nodes before reaching the target")
            score, nid = heapq.heappop(self._heap)
            if self.scores.get(nid) != score or nid in self._frozen:
                continue  # stale entry or permanently unmergeable node
            if not self.adj[nid]:
                self._frozen.add(nid)  # singleton component keeps its class
                continue
            break
        dims = self.params.feature_dims
        beta = self.params.beta
        low = self.nodes[nid]
        partner = min(
            self.adj[nid],
            key=lambda m: (edge_weight(low, self.nodes[m], beta, dims), m),
        )
        other = self.nodes[partner]

        new_id = self._next_id
        self._next_id += 1
        merged_images = low.image_count + other.image_count
        if low.feature is None:
            feature = None if other.feature is None else other.feature.copy()
        elif other.feature is None:
            feature = low.feature.copy()
        else:
            feature = (low.image_count * low.feature + other.image_count * other.feature) / merged_images
        merged = RegionNode(
            id=new_id,
            cells=low.cells | other.cells,
            image_count=merged_images,
            nonempty_cell_count=low.nonempty_cell_count + other.nonempty_cell_count,
            cell_count=low.cell_count + other.cell_count,
            feature=feature,
            location_sum=low.location_sum + other.location_sum,
        )
        new_nbrs = (self.adj[nid] | self.adj[partner]) - {nid, partner}
        for m in new_nbrs:
            self.adj[m].discard(nid)
            self.adj[m].discard(partner)
            self.adj[m].add(new_id)
        self.nodes[new_id] = merged
        self.adj[new_id] = new_nbrs
        self.scores[new_id] = self.scores[nid] + self.scores[partner]
        for old in (nid, partner):
            del self.nodes[old]
            del self.adj[old]
            del self.scores[old]
        heapq.heappush(self._heap, (self.scores[new_id], new_id))
        return nid, partner, new_id

    def run(self) -> int:
        """Merge until the target count is reached; returns the merge count."""
        merges = 0
        while not self.done():
            self.step()
            merges += 1
        return merges

    def to_geoclass_set(self, set_id: str) -> GeoclassSet:
        if not self.done():
            raise RuntimeError("merging has not reached the target class count yet")
        classes = [tuple(sorted(node.cells)) for node in self.nodes.values()]
        return GeoclassSet(set_id=set_id, level=self.level, classes=classes, params=self.params)


def generate_geoclass_set(graph: RegionGraph, params: GenParams, set_id: str = "geoclasses") -> GeoclassSet:
    """Generate one geoclass set from a region graph by greedy merging.

    Deterministic given the graph and params: exactly
    ``node_count - target_classes`` merges are performed and every output
    class is edge-connected under cell adjacency.
    """
    merger = GreedyMerger(graph, params)
    merger.run()
    return merger.to_geoclass_set(set_id)


def merge_trace(graph: RegionGraph, params: GenParams) -> Iterator[tuple[int, int, int, Fraction]]:
    """Yield (low, partner, new_id, total score) after each merge step.

    The trace exposes the conservation invariant step by step without
    changing how generation itself runs.
    """
    merger = GreedyMerger(graph, params)
    while not merger.done():
        low, partner, new_id = merger.step()
        yield low, partner, new_id, merger.total_score()
