"""Spherical-earth geodesy: points, great-circle distances, bearings, displacement.

Everything works on a sphere of radius ``EARTH_RADIUS_KM``; distances are in
kilometers, angles in degrees, and courses are measured clockwise from true
north. The module offers scalar functions built on :class:`GeoPoint` plus
array variants (suffix ``_deg`` / ``_km``) that broadcast over numpy arrays
and are used by the heavier numeric code paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidCoordinate

EARTH_RADIUS_KM = 6371.0


def normalize_lon(lon_deg: float) -> float:
    """Fold a longitude into (-180, +180]."""
    lon = float(lon_deg) % 360.0
    if lon > 180.0:
        lon -= 360.0
    return lon


def normalize_lon_array(lon_deg: np.ndarray) -> np.ndarray:
    lon = np.asarray(lon_deg, dtype=float) % 360.0
    return np.where(lon > 180.0, lon - 360.0, lon)


@dataclass(frozen=True)
class GeoPoint:
    """A ground position. Latitude in [-90, +90], longitude folded into (-180, +180]."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        lat = float(self.lat_deg)
        lon = float(self.lon_deg)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise InvalidCoordinate(f"non-finite coordinate ({self.lat_deg}, {self.lon_deg})")
        if not -90.0 <= lat <= 90.0:
            raise InvalidCoordinate(f"latitude {lat} outside [-90, +90]")
        object.__setattr__(self, "lat_deg", lat)
        object.__setattr__(self, "lon_deg", normalize_lon(lon))

    def to_dict(self) -> dict:
        return {"lat_deg": self.lat_deg, "lon_deg": self.lon_deg}

    @classmethod
    def from_dict(cls, data: dict) -> "GeoPoint":
        return cls(data["lat_deg"], data["lon_deg"])


@dataclass(frozen=True)
class KmDistance:
    """Non-negative distance in kilometers."""

    km: float

    def __post_init__(self):
        km = float(self.km)
        if not math.isfinite(km) or km < 0.0:
            raise ValueError(f"distance must be finite and >= 0, got {self.km}")
        object.__setattr__(self, "km", km)


def _km(distance) -> float:
    return distance.km if isinstance(distance, KmDistance) else float(distance)


# ---------------------------------------------------------------------------
# array kernels

def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km; broadcasts over degree arrays."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(lon2) - np.radians(lon1)
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def bearing_deg(lat1, lon1, lat2, lon2):
    """Initial bearing from point 1 to point 2, degrees in [0, 360)."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dlam = np.radians(lon2) - np.radians(lon1)
    y = np.sin(dlam) * np.cos(phi2)
    x = np.cos(phi1) * np.sin(phi2) - np.sin(phi1) * np.cos(phi2) * np.cos(dlam)
    return np.degrees(np.arctan2(y, x)) % 360.0


def displace_deg(lat, lon, course_deg, d_km):
    """Destination along the initial-course great circle; broadcasts over arrays.

    Returns (lat2_deg, lon2_deg). A zero distance reproduces the input exactly.
    """
    phi = np.radians(lat)
    lam = np.radians(lon)
    theta = np.radians(course_deg)
    delta = np.asarray(d_km, dtype=float) / EARTH_RADIUS_KM
    sin_phi2 = np.sin(phi) * np.cos(delta) + np.cos(phi) * np.sin(delta) * np.cos(theta)
    phi2 = np.arcsin(np.clip(sin_phi2, -1.0, 1.0))
    lam2 = lam + np.arctan2(
        np.sin(theta) * np.sin(delta) * np.cos(phi),
        np.cos(delta) - np.sin(phi) * sin_phi2,
    )
    return np.degrees(phi2), normalize_lon_array(np.degrees(lam2))


def unit_vectors(lat, lon):
    """Unit ECEF-style direction vectors for degree arrays, shape (..., 3)."""
    phi = np.radians(lat)
    lam = np.radians(lon)
    cos_phi = np.cos(phi)
    return np.stack(
        [cos_phi * np.cos(lam), cos_phi * np.sin(lam), np.sin(phi)], axis=-1
    )


def interpolate_deg(lat1, lon1, lat2, lon2, fraction):
    """Geodesic (constant-speed great-circle) interpolation between two points.

    ``fraction`` 0 gives point 1, 1 gives point 2; broadcasts over arrays.
    """
    u = unit_vectors(lat1, lon1)
    v = unit_vectors(lat2, lon2)
    dot = np.clip(np.sum(u * v, axis=-1), -1.0, 1.0)
    omega = np.arccos(dot)
    f = np.asarray(fraction, dtype=float)
    sin_omega = np.sin(omega)
    # fall back to linear blend where the endpoints (anti)coincide
    safe = sin_omega > 1e-12
    w1 = np.where(safe, np.sin((1.0 - f) * omega) / np.where(safe, sin_omega, 1.0), 1.0 - f)
    w2 = np.where(safe, np.sin(f * omega) / np.where(safe, sin_omega, 1.0), f)
    w = u * w1[..., None] + v * w2[..., None]
    norm = np.linalg.norm(w, axis=-1)
    w = w / norm[..., None]
    lat = np.degrees(np.arcsin(np.clip(w[..., 2], -1.0, 1.0)))
    lon = np.degrees(np.arctan2(w[..., 1], w[..., 0]))
    return lat, normalize_lon_array(lon)


# ---------------------------------------------------------------------------
# scalar API

def great_circle_km(a: GeoPoint, b: GeoPoint) -> KmDistance:
    """Haversine distance between two points."""
    return KmDistance(float(haversine_km(a.lat_deg, a.lon_deg, b.lat_deg, b.lon_deg)))


def initial_bearing_deg(a: GeoPoint, b: GeoPoint) -> float:
    return float(bearing_deg(a.lat_deg, a.lon_deg, b.lat_deg, b.lon_deg))


def displace(p: GeoPoint, course_deg: float, distance) -> GeoPoint:
    """Move ``distance`` km from ``p`` along the great circle with the given initial course."""
    d = _km(distance)
    if d == 0.0:
        return p
    lat, lon = displace_deg(p.lat_deg, p.lon_deg, course_deg, d)
    return GeoPoint(float(lat), float(lon))


def enu_offset_km(origin: GeoPoint, point: GeoPoint) -> tuple[float, float]:
    """(east_km, north_km) of ``point`` relative to ``origin``.

    Uses range and initial bearing, so it is the exact inverse of
    :func:`offset_point` on the sphere.
    """
    d = float(haversine_km(origin.lat_deg, origin.lon_deg, point.lat_deg, point.lon_deg))
    if d == 0.0:
        return 0.0, 0.0
    theta = math.radians(initial_bearing_deg(origin, point))
    return d * math.sin(theta), d * math.cos(theta)


def offset_point(origin: GeoPoint, east_km: float, north_km: float) -> GeoPoint:
    """Point at a local (east, north) km offset from ``origin``."""
    d = math.hypot(east_km, north_km)
    if d == 0.0:
        return origin
    course = math.degrees(math.atan2(east_km, north_km))
    return displace(origin, course, d)


def interpolate(a: GeoPoint, b: GeoPoint, fraction: float) -> GeoPoint:
    lat, lon = interpolate_deg(a.lat_deg, a.lon_deg, b.lat_deg, b.lon_deg, float(fraction))
    return GeoPoint(float(lat), float(lon))
