"""Small synthetic worlds for the demo scripts.

Sites are tight geographic hotspots; several sites share each visual
feature cluster, so coarse classifiers are ambiguous and fusion has
something to disambiguate.
"""

import numpy as np

from geofuse import Dataset, GeoPoint, GeoRecord

KM_PER_DEG_LAT = 111.19492664455873


def offset_km(center: GeoPoint, north_km: float, east_km: float) -> GeoPoint:
    lat = min(90.0, max(-90.0, center.lat + north_km / KM_PER_DEG_LAT))
    cos_lat = max(np.cos(np.radians(lat)), 0.05)
    return GeoPoint(lat, center.lng + east_km / (KM_PER_DEG_LAT * cos_lat))


def random_points(rng, count, max_abs_lat=75.0):
    points = []
    while len(points) < count:
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        lat = float(np.degrees(np.arcsin(np.clip(v[2], -1, 1))))
        if abs(lat) <= max_abs_lat:
            points.append(GeoPoint(lat, float(np.degrees(np.arctan2(v[1], v[0])))))
    return points


def sites_world(
    n_train=6000,
    n_test=600,
    n_feature_clusters=25,
    n_sites=120,
    feature_dim=12,
    level=5,
    seed=7,
    site_sigma_km=(0.3, 2.0),
    feat_sigma=0.35,
):
    """Returns (train records, test records, Dataset)."""
    rng = np.random.default_rng(seed)
    points = random_points(rng, n_sites)
    site_cluster = rng.integers(n_feature_clusters, size=n_sites)
    cluster_means = rng.normal(size=(n_feature_clusters, feature_dim))
    lo, hi = site_sigma_km
    sigma = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n_sites))
    weights = rng.uniform(0.5, 1.5, size=n_sites)
    weights /= weights.sum()

    def draw(count, prefix):
        picks = rng.choice(n_sites, size=count, p=weights)
        offsets = rng.normal(size=(count, 2)) * sigma[picks][:, None]
        noise = rng.normal(scale=feat_sigma, size=(count, feature_dim))
        return [
            GeoRecord(
                id=f"{prefix}{i:05d}",
                location=offset_km(points[picks[i]], offsets[i, 0], offsets[i, 1]),
                feature=cluster_means[site_cluster[picks[i]]] + noise[i],
            )
            for i in range(count)
        ]

    train = draw(n_train, "train-")
    test = draw(n_test, "test-")
    return train, test, Dataset(level, train)
