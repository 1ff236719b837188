"""Spatial indexing of grid points and assembly of regression feature tables.

Feature tables come in three fixed layouts ("predictor sets"):

* set1: values at the four nearest grid points of the first product, the
  four distances to them, station elevation (9 columns)
* set2: same layout using the second product (9 columns)
* set3: values of both products, distances of both products, elevation
  (17 columns)

Distances are haversine great-circle distances in meters and the column
order is frozen so downstream column indices stay stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import MISSING_VALUE, GaugeStation, GeoPoint, GridProduct, YearMonth, validate_lat_lon
from .errors import DataError

EARTH_RADIUS_M = 6_371_000.0

SET1 = "set1"
SET2 = "set2"
SET3 = "set3"
PREDICTOR_SETS = (SET1, SET2, SET3)
SET_WIDTHS = {SET1: 9, SET2: 9, SET3: 17}

NEIGHBOR_COUNT = 4


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters between points in degrees.

    Accepts scalars or numpy arrays (broadcasting applies).
    """
    p1 = np.deg2rad(np.asarray(lat1, dtype=np.float64))
    l1 = np.deg2rad(np.asarray(lon1, dtype=np.float64))
    p2 = np.deg2rad(np.asarray(lat2, dtype=np.float64))
    l2 = np.deg2rad(np.asarray(lon2, dtype=np.float64))
    a = np.sin((p2 - p1) / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin((l2 - l1) / 2.0) ** 2
    a = np.clip(a, 0.0, 1.0)
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(a))


@dataclass(frozen=True)
class NeighborSet:
    """Four nearest grid points as (grid index, distance in meters) pairs.

    Ascending distance; ties broken by lower grid index.
    """

    indices: tuple[int, int, int, int]
    distances: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.indices) != NEIGHBOR_COUNT or len(self.distances) != NEIGHBOR_COUNT:
            raise DataError("a neighbor set holds exactly 4 entries")
        d = self.distances
        if any(not np.isfinite(x) or x < 0 for x in d):
            raise DataError("neighbor distances must be finite and non-negative")
        if any(d[i] > d[i + 1] for i in range(3)):
            raise DataError("neighbor distances must be ascending")


class SpatialIndex:
    """Immutable k-nearest index over grid-point locations.

    Stores the coordinates in radians once; queries do a vectorized
    haversine scan, which matches a brute-force search exactly (including
    the lower-index tie rule) and is safe for concurrent use.
    """

    def __init__(self, lats: np.ndarray, lons: np.ndarray):
        lats = np.asarray(lats, dtype=np.float64)
        lons = np.asarray(lons, dtype=np.float64)
        if lats.ndim != 1 or lats.shape != lons.shape:
            raise DataError("grid coordinates must be 1-D arrays of equal length")
        if lats.size == 0:
            raise DataError("cannot index an empty grid")
        for lat, lon in zip(lats, lons):
            validate_lat_lon(float(lat), float(lon))
        self._lat_rad = np.deg2rad(lats)
        self._lon_rad = np.deg2rad(lons)
        self._cos_lat = np.cos(self._lat_rad)
        self._size = int(lats.size)

    def __len__(self) -> int:
        return self._size

    def query(self, point: GeoPoint, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k nearest grid points: (indices, distances_m), ascending distance.

        Equidistant points are ordered by grid index.
        """
        if k < 1 or k > self._size:
            raise DataError(f"k={k} outside [1, {self._size}]")
        p = np.deg2rad(point.lat)
        l = np.deg2rad(point.lon)
        a = (
            np.sin((self._lat_rad - p) / 2.0) ** 2
            + np.cos(p) * self._cos_lat * np.sin((self._lon_rad - l) / 2.0) ** 2
        )
        dist = 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
        # lexsort: distance first, grid index breaks ties
        order = np.lexsort((np.arange(self._size), dist))[:k]
        return order, dist[order]


def build_grid_index(grid_points: list[GeoPoint]) -> SpatialIndex:
    """Index a list of grid-point locations for k-nearest queries."""
    if not grid_points:
        raise DataError("cannot index an empty grid")
    lats = np.array([g.lat for g in grid_points], dtype=np.float64)
    lons = np.array([g.lon for g in grid_points], dtype=np.float64)
    return SpatialIndex(lats, lons)


def nearest_four(index: SpatialIndex, station: GeoPoint) -> NeighborSet:
    """The four closest grid points to a station, ascending distance."""
    if len(index) < NEIGHBOR_COUNT:
        raise DataError(f"index holds {len(index)} points; 4 required")
    idx, dist = index.query(station, NEIGHBOR_COUNT)
    return NeighborSet(
        indices=tuple(int(i) for i in idx),
        distances=tuple(float(d) for d in dist),
    )


@dataclass
class FeatureTable:
    """Assembled regression rows for one predictor set.

    Rows are sorted by (station_id, year_month). ``X`` columns follow the
    frozen ordering documented in the module docstring; ``y`` holds the
    gauge monthly totals in mm/month.
    """

    set_id: str
    station_ids: list[str]
    year_months: list[YearMonth]
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    drop_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("feature matrix and target lengths differ")
        if self.X.shape[1] != SET_WIDTHS[self.set_id]:
            raise DataError(
                f"{self.set_id} rows must have {SET_WIDTHS[self.set_id]} features, got {self.X.shape[1]}"
            )
        if len(self.feature_names) != self.X.shape[1]:
            raise DataError("feature_names length must match feature count")

    @property
    def n_rows(self) -> int:
        return int(self.X.shape[0])

    def row_keys(self) -> list[tuple[str, YearMonth]]:
        return list(zip(self.station_ids, self.year_months))


def _products_for_set(set_id: str, products: list[GridProduct]) -> list[GridProduct]:
    if set_id not in PREDICTOR_SETS:
        raise DataError(f"unknown predictor set {set_id!r}")
    if not products or len(products) > 2:
        raise DataError("one or two grid products required")
    if set_id == SET1:
        return [products[0]]
    if set_id == SET2:
        # the second product when two are given, else the single one supplied
        return [products[-1]]
    if len(products) != 2:
        raise DataError("set3 needs two grid products (values and distances of both)")
    return list(products)


def assemble_features(
    stations: list[GaugeStation],
    observations: dict[tuple[str, YearMonth], float],
    products: list[GridProduct],
    set_id: str,
) -> FeatureTable:
    """Build one feature row per (station, month) with complete data.

    A row is kept only when the gauge observation is present (not the
    -9999 sentinel) and every product used by the set has values at all
    four neighbors for that month. Dropped rows are counted per reason.
    """
    used = _products_for_set(set_id, products)
    station_by_id = {s.station_id: s for s in stations}
    if len(station_by_id) != len(stations):
        raise DataError("duplicate station_id among stations")
    for sid, _ in observations:
        if sid not in station_by_id:
            raise DataError(f"observation references unknown station {sid!r}")

    # neighbor sets are month-independent: one per (station, product grid)
    neighbor_map: dict[str, list[NeighborSet]] = {}
    for prod in used:
        index = SpatialIndex(prod.lats, prod.lons)
        for st in stations:
            neighbor_map.setdefault(st.station_id, []).append(nearest_four(index, st.point))

    feature_names = _feature_names(set_id, used)
    width = SET_WIDTHS[set_id]

    rows: list[tuple[str, YearMonth, list[float], float]] = []
    drops = {"missing_observation": 0, "missing_product_value": 0}
    for sid, ym in sorted(observations):
        target = observations[(sid, ym)]
        if target == MISSING_VALUE or not np.isfinite(target):
            drops["missing_observation"] += 1
            continue
        station = station_by_id[sid]
        feats: list[float] = []
        complete = True
        neighbor_sets = neighbor_map[sid]
        for prod, nbrs in zip(used, neighbor_sets):
            vals = [prod.value_at(g, ym) for g in nbrs.indices]
            if any(not np.isfinite(v) for v in vals):
                complete = False
                break
            feats.extend(vals)
        if not complete:
            drops["missing_product_value"] += 1
            continue
        for nbrs in neighbor_sets:
            feats.extend(nbrs.distances)
        feats.append(station.elevation_m)
        assert len(feats) == width
        rows.append((sid, ym, feats, float(target)))

    X = np.array([r[2] for r in rows], dtype=np.float64).reshape(len(rows), width)
    y = np.array([r[3] for r in rows], dtype=np.float64)
    return FeatureTable(
        set_id=set_id,
        station_ids=[r[0] for r in rows],
        year_months=[r[1] for r in rows],
        X=X,
        y=y,
        feature_names=feature_names,
        drop_counts=drops,
    )


def _feature_names(set_id: str, used: list[GridProduct]) -> tuple[str, ...]:
    names: list[str] = []
    for prod in used:
        names.extend(f"{prod.name}_value_{i}" for i in range(1, 5))
    for prod in used:
        names.extend(f"{prod.name}_distance_{i}" for i in range(1, 5))
    names.append("elevation")
    assert len(names) == SET_WIDTHS[set_id]
    return tuple(names)
