"""Brute-force fusion oracles and random grid partitions, shared by the
fusion unit tests and the acceptance suite.

The oracles work over an abstract universe of hashable cells with per-set
class maps and never touch the index machinery they are used to check.
"""

import numpy as np

from geofuse import GeoclassSet, all_cells, neighbors


def oracle_fine_partitions(universe, class_maps):
    """Tuple-intersection enumeration: tuple -> sorted member cells."""
    grouped = {}
    for cell in universe:
        key = tuple(class_map[cell] for class_map in class_maps)
        grouped.setdefault(key, []).append(cell)
    return {key: sorted(cells) for key, cells in grouped.items()}


def oracle_fused_field(universe, class_maps, score_rows, normalized=True):
    """Per-cell evaluation of the fused score, one classifier at a time."""
    field = {cell: 0.0 for cell in universe}
    for class_map, scores in zip(class_maps, score_rows):
        denominator = sum(scores[class_map[cell]] for cell in universe) if normalized else 1.0
        for cell in universe:
            field[cell] += scores[class_map[cell]] / denominator
    return field


def random_partition(level, n_classes, rng):
    """Grow connected classes from random seed cells until the grid is covered."""
    cells = sorted(all_cells(level))
    seeds = rng.sample(cells, n_classes)
    assignment = {cell: i for i, cell in enumerate(seeds)}
    # multi-source growth: each round every class tries to claim one
    # unassigned neighbor, so all classes stay edge-connected
    boundary = {i: {seed} for i, seed in enumerate(seeds)}
    unassigned = set(cells) - set(seeds)
    while unassigned:
        order = list(range(n_classes))
        rng.shuffle(order)
        progressed = False
        for cls in order:
            options = []
            for cell in boundary[cls]:
                options.extend(n for n in neighbors(cell) if n in unassigned)
            if not options:
                continue
            pick = rng.choice(sorted(options))
            assignment[pick] = cls
            boundary[cls].add(pick)
            unassigned.discard(pick)
            progressed = True
        if not progressed:
            raise RuntimeError("partition growth stalled")
    classes = [[] for _ in range(n_classes)]
    for cell, cls in assignment.items():
        classes[cls].append(cell)
    return [tuple(sorted(members)) for members in classes]


def make_random_sets(level, n_sets, rng, max_classes=6):
    sets = []
    for i in range(n_sets):
        n_classes = rng.randint(1, max_classes)
        sets.append(
            GeoclassSet(set_id=f"rs{i}", level=level, classes=random_partition(level, n_classes, rng))
        )
    return sets


def positive_scores(rng, n):
    return np.array([rng.uniform(0.01, 1.0) for _ in range(n)])


def split_class_connected(members):
    """Split one class into two pieces, both edge-connected, or None."""
    cell_set = set(members)
    for first in members:
        rest = cell_set - {first}
        if not rest:
            return None
        start = next(iter(rest))
        seen = {start}
        stack = [start]
        while stack:
            for nbr in neighbors(stack.pop()):
                if nbr in rest and nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        if seen == rest:
            return [(first,), tuple(sorted(rest))]
    return None


def refine_partition(classes):
    """A strict refinement of a partition: split every splittable class."""
    refined = []
    for members in classes:
        pieces = split_class_connected(members) if len(members) > 1 else None
        if pieces is not None:
            refined.extend(pieces)
        else:
            refined.append(members)
    return refined
