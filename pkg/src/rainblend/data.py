"""Core data containers: gauge stations, observations and gridded products."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

#: Sentinel used in input files for a missing monthly total.
MISSING_VALUE = -9999.0

YearMonth = tuple[int, int]


def validate_lat_lon(lat: float, lon: float) -> None:
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise DataError(f"latitude {lat!r} outside [-90, 90]")
    if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
        raise DataError(f"longitude {lon!r} outside [-180, 180]")


@dataclass(frozen=True)
class GeoPoint:
    """A lat/lon location in degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        validate_lat_lon(self.lat, self.lon)


@dataclass(frozen=True)
class GaugeStation:
    """A ground-based measurement site with its elevation in meters."""

    station_id: str
    lat: float
    lon: float
    elevation_m: float

    def __post_init__(self) -> None:
        validate_lat_lon(self.lat, self.lon)
        if not math.isfinite(self.elevation_m):
            raise DataError(f"station {self.station_id}: non-finite elevation")

    @property
    def point(self) -> GeoPoint:
        return GeoPoint(self.lat, self.lon)


@dataclass
class GridProduct:
    """A named gridded product: grid-point locations plus monthly values.

    ``values[g, m]`` holds the monthly total (mm/month) at grid point ``g``
    for ``months[m]``; missing entries are NaN.
    """

    name: str
    lats: np.ndarray
    lons: np.ndarray
    months: list[YearMonth]
    values: np.ndarray
    month_index: dict[YearMonth, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.lats = np.asarray(self.lats, dtype=np.float64)
        self.lons = np.asarray(self.lons, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.lats.shape != self.lons.shape or self.lats.ndim != 1:
            raise DataError(f"product {self.name}: grid coordinate arrays must be 1-D and equal length")
        if self.values.shape != (len(self.lats), len(self.months)):
            raise DataError(
                f"product {self.name}: values shape {self.values.shape} != "
                f"(n_grid={len(self.lats)}, n_months={len(self.months)})"
            )
        for lat, lon in zip(self.lats, self.lons):
            validate_lat_lon(float(lat), float(lon))
        self.month_index = {ym: i for i, ym in enumerate(self.months)}
        if len(self.month_index) != len(self.months):
            raise DataError(f"product {self.name}: duplicate months")

    @property
    def n_grid(self) -> int:
        return len(self.lats)

    def value_at(self, grid_index: int, ym: YearMonth) -> float:
        """Monthly value at one grid point; NaN when the month is absent."""
        m = self.month_index.get(ym)
        if m is None:
            return math.nan
        return float(self.values[grid_index, m])


def month_range(start_year: int, start_month: int, n_months: int) -> list[YearMonth]:
    """Consecutive (year, month) pairs starting at the given month."""
    out = []
    y, m = start_year, start_month
    for _ in range(n_months):
        out.append((y, m))
        m += 1
        if m > 12:
            y, m = y + 1, 1
    return out
