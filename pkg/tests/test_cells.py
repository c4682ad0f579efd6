"""Grid cell unit tests: point location, adjacency, hierarchy, tiling."""

import random

import numpy as np
import pytest

from geofuse import (
    CellId,
    GeoPoint,
    all_cells,
    bounds,
    cell_at,
    cell_center,
    cell_count,
    children,
    neighbors,
    parent,
)
from geofuse.cells import cols_at, rows_at


def random_cell(rng: random.Random, level: int) -> CellId:
    return CellId(level, rng.randrange(rows_at(level)), rng.randrange(cols_at(level)))


class TestCellId:
    def test_bounds_validation(self):
        with pytest.raises(ValueError):
            CellId(1, 2, 0)  # row out of range
        with pytest.raises(ValueError):
            CellId(1, 0, 4)  # col out of range
        with pytest.raises(ValueError):
            CellId(25, 0, 0)  # level out of range
        with pytest.raises(ValueError):
            CellId(-1, 0, 0)

    def test_token_round_trip(self):
        c = CellId(6, 33, 101)
        assert c.token == "L6/33/101"
        assert CellId.from_token(c.token) == c

    @pytest.mark.parametrize("bad", ["", "6/3/1", "L6/3", "L6/3/1/2", "La/b/c", "L6/3/999999"])
    def test_bad_tokens(self, bad):
        with pytest.raises(ValueError):
            CellId.from_token(bad)

    def test_count_formula(self):
        for level in range(0, 25):
            assert cell_count(level) == rows_at(level) * cols_at(level) == 2 ** (2 * level + 1)


class TestPointLocation:
    def test_origin_level1(self):
        assert cell_at(GeoPoint(0, 0), 1) == CellId(1, 1, 2)

    def test_north_pole_clamps_to_top_row(self):
        assert cell_at(GeoPoint(90, 0), 3) == CellId(3, 7, 8)

    def test_southwest_corner(self):
        assert cell_at(GeoPoint(-90, -180), 0) == CellId(0, 0, 0)

    def test_level_out_of_range(self):
        with pytest.raises(ValueError):
            cell_at(GeoPoint(0, 0), 25)
        with pytest.raises(ValueError):
            cell_at(GeoPoint(0, 0), -1)

    @pytest.mark.parametrize("level", [0, 3, 6])
    def test_tiling_exactly_one_cell_contains_each_point(self, level):
        rng = np.random.default_rng(99)
        lats = np.degrees(np.arcsin(rng.uniform(-1, 1, size=10_000)))
        lngs = rng.uniform(-180.0, 180.0, size=10_000)
        cell_list = list(all_cells(level))
        boxes = np.array(
            [(b.lat_min, b.lat_max, b.lng_min, b.lng_max) for b in map(bounds, cell_list)]
        )
        for lat, lng in zip(lats, lngs):
            p = GeoPoint(lat, lng)
            inside_lat = (boxes[:, 0] <= p.lat) & ((p.lat < boxes[:, 1]) | (boxes[:, 1] == 90.0) & (p.lat == 90.0))
            inside = inside_lat & (boxes[:, 2] <= p.lng) & (p.lng < boxes[:, 3])
            assert inside.sum() == 1
            assert cell_list[int(np.nonzero(inside)[0][0])] == cell_at(p, level)


class TestNeighbors:
    def test_level1_corner(self):
        got = neighbors(CellId(1, 0, 0))
        assert got == {CellId(1, 0, 1), CellId(1, 0, 3), CellId(1, 1, 0)}

    def test_interior_has_four(self):
        rng = random.Random(5)
        for _ in range(200):
            level = rng.randint(2, 10)
            c = CellId(level, rng.randrange(1, rows_at(level) - 1), rng.randrange(cols_at(level)))
            assert len(neighbors(c)) == 4

    def test_top_and_bottom_rows_have_three(self):
        for level in (2, 4):
            assert len(neighbors(CellId(level, 0, 1))) == 3
            assert len(neighbors(CellId(level, rows_at(level) - 1, 1))) == 3

    def test_level0_wraps_to_single_neighbor(self):
        assert neighbors(CellId(0, 0, 0)) == {CellId(0, 0, 1)}
        assert neighbors(CellId(0, 0, 1)) == {CellId(0, 0, 0)}

    def test_symmetry_on_random_cells(self):
        rng = random.Random(6)
        for _ in range(1000):
            c = random_cell(rng, rng.randint(0, 10))
            for nbr in neighbors(c):
                assert c in neighbors(nbr)


class TestHierarchy:
    def test_children_of_root_cell(self):
        assert set(children(CellId(0, 0, 0))) == {
            CellId(1, 0, 0),
            CellId(1, 0, 1),
            CellId(1, 1, 0),
            CellId(1, 1, 1),
        }

    def test_parent_example(self):
        assert parent(CellId(1, 1, 1)) == CellId(0, 0, 0)

    def test_parent_child_round_trip(self):
        rng = random.Random(7)
        for _ in range(300):
            c = random_cell(rng, rng.randint(0, 10))
            for child in children(c):
                assert parent(child) == c

    def test_children_tile_parent_bounds(self):
        rng = random.Random(8)
        for _ in range(200):
            c = random_cell(rng, rng.randint(0, 9))
            pb = bounds(c)
            kids = children(c)
            kb = [bounds(k) for k in kids]
            assert min(b.lat_min for b in kb) == pb.lat_min
            assert max(b.lat_max for b in kb) == pb.lat_max
            assert min(b.lng_min for b in kb) == pb.lng_min
            assert max(b.lng_max for b in kb) == pb.lng_max
            # pairwise disjoint interiors: equal areas summing to the parent
            areas = [(b.lat_max - b.lat_min) * (b.lng_max - b.lng_min) for b in kb]
            assert sum(areas) == pytest.approx(
                (pb.lat_max - pb.lat_min) * (pb.lng_max - pb.lng_min), rel=1e-12
            )
            for i in range(4):
                for j in range(i + 1, 4):
                    bi, bj = kb[i], kb[j]
                    overlap_lat = min(bi.lat_max, bj.lat_max) - max(bi.lat_min, bj.lat_min)
                    overlap_lng = min(bi.lng_max, bj.lng_max) - max(bi.lng_min, bj.lng_min)
                    assert overlap_lat <= 0 or overlap_lng <= 0

    def test_level_limits(self):
        with pytest.raises(ValueError):
            parent(CellId(0, 0, 0))
        with pytest.raises(ValueError):
            children(CellId(24, 0, 0))


class TestCenters:
    def test_root_band_center(self):
        assert cell_center(CellId(0, 0, 0)) == GeoPoint(0, -90)
        assert cell_center(CellId(0, 0, 1)) == GeoPoint(0, 90)

    def test_level1_center_by_formula(self):
        # row 1 of level 1 spans [0, 90), col 2 spans [0, 90): center (45, 45)
        assert cell_center(CellId(1, 1, 2)) == GeoPoint(45.0, 45.0)

    def test_center_strictly_inside_bounds(self):
        rng = random.Random(9)
        for _ in range(500):
            c = random_cell(rng, rng.randint(0, 12))
            b, p = bounds(c), cell_center(c)
            assert b.lat_min < p.lat < b.lat_max
            assert b.lng_min < p.lng < b.lng_max

    def test_center_locates_back_to_cell_exhaustive_to_level5(self):
        for level in range(6):
            for c in all_cells(level):
                assert cell_at(cell_center(c), level) == c

    def test_center_locates_back_to_cell_sampled_to_level10(self):
        rng = random.Random(10)
        for _ in range(2000):
            c = random_cell(rng, rng.randint(6, 10))
            assert cell_at(cell_center(c), c.level) == c
