"""Tour of the geometry layer: geodesic distances, spherical centroids, and
the hierarchical lat/lng cell grid.

Run: python3 demos/01_grid_and_geodesy.py
"""

from geofuse import (
    GeoPoint,
    bounds,
    cell_at,
    cell_center,
    cell_count,
    children,
    geodesic_km,
    neighbors,
    parent,
    weighted_centroid,
)

print("== geodesic distances ==")
sf = GeoPoint(37.7749, -122.4194)
nyc = GeoPoint(40.7128, -74.0060)
print(f"SF -> NYC           {geodesic_km(sf, nyc):9.1f} km")
print(f"equator antipodes   {geodesic_km(GeoPoint(0, 0), GeoPoint(0, 180)):9.1f} km (half circumference)")

print("\n== centroids live on the sphere, not on raw lat/lng ==")
either_side = [(GeoPoint(0, 179), 1.0), (GeoPoint(0, -179), 1.0)]
c = weighted_centroid(either_side)
print(f"centroid of (0,179) and (0,-179) -> ({c.lat:.1f}, {c.lng:.1f})  [naive lat/lng average would say (0, 0)]")
c = weighted_centroid([(GeoPoint(0, 0), 3.0), (GeoPoint(0, 90), 1.0)])
print(f"3:1 mix of (0,0) and (0,90)      -> ({c.lat:.3f}, {c.lng:.3f})")

print("\n== the cell grid ==")
for level in (0, 1, 6, 14):
    print(f"level {level:>2}: {cell_count(level):>12,} cells")

cell = cell_at(sf, 6)
b = bounds(cell)
print(f"\nSan Francisco at level 6 -> {cell.token}")
print(f"  bounds lat [{b.lat_min:.3f}, {b.lat_max:.3f}) lng [{b.lng_min:.3f}, {b.lng_max:.3f})")
print(f"  center {cell_center(cell).lat:.4f}, {cell_center(cell).lng:.4f}")
print(f"  neighbors: {sorted(n.token for n in neighbors(cell))}")
print(f"  parent: {parent(cell).token}")
print(f"  children: {[k.token for k in children(cell)]}")

print("\nwrap-around: the west neighbor of a column-0 cell sits at the antimeridian")
west_edge = cell_at(GeoPoint(0, -179.9), 4)
print(f"  {west_edge.token} -> {sorted(n.token for n in neighbors(west_edge))}")
