"""GeoJSON (RFC 7946) views of geoclass sets and prediction files.

Class regions are dissolved from their member cells into rectilinear
multipolygons; predictions become point features, optionally linked to
their ground truth by a line. Coordinates are [longitude, latitude].
"""

from __future__ import annotations

from typing import Iterable, Mapping

from shapely.geometry import MultiPolygon, box, mapping
from shapely.ops import unary_union

from . import cells as cells_mod
from .cells import CellId
from .geo import GeoPoint, geodesic_km
from .partition import GeoclassSet


def dissolve_cells(cells: Iterable[CellId]) -> MultiPolygon:
    """Union member cell rectangles into one multipolygon."""
    boxes = []
    for cell in cells:
        b = cells_mod.bounds(cell)
        boxes.append(box(b.lng_min, b.lat_min, b.lng_max, b.lat_max))
    if not boxes:
        raise ValueError("cannot dissolve an empty cell collection")
    merged = unary_union(boxes)
    if merged.geom_type == "Polygon":
        merged = MultiPolygon([merged])
    return merged


def geoclass_set_collection(gset: GeoclassSet) -> dict:
    """One MultiPolygon feature per class of a geoclass set."""
    features = []
    for index, members in enumerate(gset.classes):
        geometry = dissolve_cells(members)
        features.append(
            {
                "type": "Feature",
                "geometry": mapping(geometry),
                "properties": {
                    "set_id": gset.set_id,
                    "class_index": index,
                    "cell_count": len(members),
                },
            }
        )
    return {"type": "FeatureCollection", "features": features}


def predictions_collection(
    rows: Iterable[Mapping], truth: Mapping[str, GeoPoint] | None = None
) -> dict:
    """Point features for prediction rows, plus truth-link lines when known.

    Rows are prediction JSONL objects (query_id, lat, lng, ...).
    """
    features = []
    for row in rows:
        query_id = row["query_id"]
        pred = GeoPoint(row["lat"], row["lng"])
        properties = {"query_id": query_id}
        if "score_max" in row:
            properties["score_max"] = row["score_max"]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [pred.lng, pred.lat]},
                "properties": properties,
            }
        )
        if truth is not None and query_id in truth:
            gt = truth[query_id]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "LineString",
                        "coordinates": [[pred.lng, pred.lat], [gt.lng, gt.lat]],
                    },
                    "properties": {
                        "query_id": query_id,
                        "distance_km": geodesic_km(pred, gt),
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}
