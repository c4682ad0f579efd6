"""Shared fixtures: seeded synthetic worlds of geotagged feature records."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from geofuse import Dataset, GeoPoint, GeoRecord, build_base_graph

KM_PER_DEG_LAT = 111.19492664455873  # mean-radius sphere: R * pi / 180


@dataclass
class SynthWorld:
    """A clustered world: train/test records drawn from the same clusters."""

    level: int
    train: list[GeoRecord]
    test: list[GeoRecord]
    cluster_centers: list[GeoPoint]
    dataset: Dataset

    @property
    def feature_dim(self) -> int:
        return self.train[0].feature.shape[0]


def _random_centers(rng: np.random.Generator, count: int, max_abs_lat: float) -> list[GeoPoint]:
    centers = []
    while len(centers) < count:
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        lat = float(np.degrees(np.arcsin(np.clip(v[2], -1, 1))))
        if abs(lat) > max_abs_lat:
            continue
        lng = float(np.degrees(np.arctan2(v[1], v[0])))
        centers.append(GeoPoint(lat, lng))
    return centers


def _offset(center: GeoPoint, north_km: float, east_km: float) -> GeoPoint:
    lat = center.lat + north_km / KM_PER_DEG_LAT
    lat = min(90.0, max(-90.0, lat))
    cos_lat = max(np.cos(np.radians(lat)), 0.05)
    lng = center.lng + east_km / (KM_PER_DEG_LAT * cos_lat)
    return GeoPoint(lat, lng)


def make_world(
    n_train: int,
    n_test: int,
    n_clusters: int,
    feature_dim: int,
    level: int,
    seed: int,
    geo_sigma_km: float | tuple[float, float] = 1.0,
    feat_sigma: float = 0.5,
    cluster_spread: float = 1.0,
    tight_weight_power: float = 0.6,
    max_abs_lat: float = 75.0,
) -> SynthWorld:
    """Build a seeded world of Gaussian clusters of geotagged features.

    ``geo_sigma_km`` is either one sigma for all clusters or a (lo, hi)
    range sampled log-uniformly per cluster; tighter clusters get more
    records (weight ~ sigma**-power), like landmarks versus regions.
    """
    rng = np.random.default_rng(seed)
    centers = _random_centers(rng, n_clusters, max_abs_lat)
    feature_means = rng.normal(scale=cluster_spread, size=(n_clusters, feature_dim))
    if isinstance(geo_sigma_km, tuple):
        lo, hi = geo_sigma_km
        sigmas = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n_clusters))
    else:
        sigmas = np.full(n_clusters, float(geo_sigma_km))
    weights = sigmas**-tight_weight_power
    weights /= weights.sum()

    def draw(count: int, prefix: str) -> list[GeoRecord]:
        assignments = rng.choice(n_clusters, size=count, p=weights)
        offsets = rng.normal(size=(count, 2)) * sigmas[assignments][:, None]
        noise = rng.normal(scale=feat_sigma, size=(count, feature_dim))
        records = []
        for i in range(count):
            c = assignments[i]
            records.append(
                GeoRecord(
                    id=f"{prefix}{i:06d}",
                    location=_offset(centers[c], offsets[i, 0], offsets[i, 1]),
                    feature=feature_means[c] + noise[i],
                )
            )
        return records

    train = draw(n_train, "train-")
    test = draw(n_test, "test-")
    return SynthWorld(
        level=level,
        train=train,
        test=test,
        cluster_centers=centers,
        dataset=Dataset(level, train),
    )


@dataclass
class SitesWorld:
    """Records from many tight geographic sites sharing few feature clusters.

    Features form exactly ``n_feature_clusters`` Gaussian clusters; each
    site draws its features from one cluster, so several distant sites are
    visual twins and single coarse classifiers cannot separate them.
    """

    level: int
    train: list[GeoRecord]
    test: list[GeoRecord]
    site_points: list[GeoPoint]
    dataset: Dataset


def make_sites_world(
    n_train: int,
    n_test: int,
    n_feature_clusters: int,
    n_sites: int,
    feature_dim: int,
    level: int,
    seed: int,
    site_sigma_km: tuple[float, float] = (0.3, 2.0),
    feat_sigma: float = 0.35,
    cluster_spread: float = 1.0,
    max_abs_lat: float = 75.0,
) -> SitesWorld:
    rng = np.random.default_rng(seed)
    site_points = _random_centers(rng, n_sites, max_abs_lat)
    site_cluster = rng.integers(n_feature_clusters, size=n_sites)
    cluster_means = rng.normal(scale=cluster_spread, size=(n_feature_clusters, feature_dim))
    lo, hi = site_sigma_km
    site_sigma = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n_sites))
    weights = rng.uniform(0.5, 1.5, size=n_sites)
    weights /= weights.sum()

    def draw(count: int, prefix: str) -> list[GeoRecord]:
        picks = rng.choice(n_sites, size=count, p=weights)
        offsets = rng.normal(size=(count, 2)) * site_sigma[picks][:, None]
        noise = rng.normal(scale=feat_sigma, size=(count, feature_dim))
        records = []
        for i in range(count):
            s = picks[i]
            records.append(
                GeoRecord(
                    id=f"{prefix}{i:06d}",
                    location=_offset(site_points[s], offsets[i, 0], offsets[i, 1]),
                    feature=cluster_means[site_cluster[s]] + noise[i],
                )
            )
        return records

    train = draw(n_train, "train-")
    test = draw(n_test, "test-")
    return SitesWorld(
        level=level,
        train=train,
        test=test,
        site_points=site_points,
        dataset=Dataset(level, train),
    )


@pytest.fixture(scope="session")
def small_world() -> SynthWorld:
    """A quick world for unit tests: level 4, a few hundred records."""
    return make_world(
        n_train=600,
        n_test=80,
        n_clusters=12,
        feature_dim=8,
        level=4,
        seed=20240617,
        geo_sigma_km=(0.5, 300.0),
        feat_sigma=0.4,
    )


@pytest.fixture(scope="session")
def small_graph(small_world):
    return build_base_graph(small_world.dataset, seed=7)
