"""Domain types shared by ingestion, analytics, simulation, and detection.

All types are immutable values with loss-free ``to_dict``/``from_dict``
round-trips, so they can be shared freely across threads and serialized to
JSON reports.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBeamId, InvalidSatId
from .geo import GeoPoint

MAX_BEAM_ID = 48

#: Seconds per unit of the raw sub-second counter. The log format carries a
#: 9-digit counter whose unit is not self-describing; microseconds is the
#: default interpretation and the CLI exposes the knob.
FRAC_UNITS_S = {"us": 1e-6, "tenus": 1e-5, "ns": 1e-9}
DEFAULT_FRAC_UNIT_S = FRAC_UNITS_S["us"]

_VALID_SAT_IDS = frozenset({
    2, 3, 4, 5, 6, 7, 8, 9, 13, 16, 17, 18, 22, 23, 24, 25, 26, 28, 29, 30,
    33, 36, 38, 39, 40, 42, 43, 44, 46, 48, 49, 50, 51, 57, 65, 67, 68, 69,
    71, 72, 73, 74, 77, 78, 79, 81, 82, 85, 87, 88, 89, 90, 92, 93, 94, 96,
    99, 103, 104, 107, 109, 110, 111, 112, 114, 115,
})


def valid_sat_ids() -> frozenset[int]:
    """The 66 satellite IDs ever observed on the ring-alert channel."""
    return _VALID_SAT_IDS


class Direction(enum.Enum):
    """Travel direction of a satellite pass (sign of the latitude trend)."""

    UPWARD = "upward"
    DOWNWARD = "downward"


@dataclass(frozen=True)
class IraRecord:
    """One decoded ring-alert message.

    ``beam_id`` 0 marks the sub-satellite point; 1..48 mark beam centers.
    ``frac`` is the raw sub-second counter; its unit is supplied where a
    timestamp is needed (see :data:`FRAC_UNITS_S`).
    """

    epoch_s: int
    frac: int
    sat_id: int
    beam_id: int
    ground: GeoPoint

    def __post_init__(self):
        object.__setattr__(self, "epoch_s", int(self.epoch_s))
        object.__setattr__(self, "frac", int(self.frac))
        object.__setattr__(self, "sat_id", int(self.sat_id))
        object.__setattr__(self, "beam_id", int(self.beam_id))
        if self.frac < 0:
            raise ValueError(f"sub-second counter must be >= 0, got {self.frac}")
        if self.sat_id not in _VALID_SAT_IDS:
            raise InvalidSatId(f"satellite id {self.sat_id} not in the known set")
        if not 0 <= self.beam_id <= MAX_BEAM_ID:
            raise InvalidBeamId(f"beam id {self.beam_id} outside [0, {MAX_BEAM_ID}]")

    @property
    def is_track(self) -> bool:
        return self.beam_id == 0

    def timestamp(self, frac_unit_s: float = DEFAULT_FRAC_UNIT_S) -> float:
        return self.epoch_s + self.frac * frac_unit_s

    def sort_key(self) -> tuple[int, int]:
        return (self.epoch_s, self.frac)

    def to_dict(self) -> dict:
        return {
            "epoch_s": self.epoch_s,
            "frac": self.frac,
            "sat_id": self.sat_id,
            "beam_id": self.beam_id,
            "ground": self.ground.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IraRecord":
        return cls(
            data["epoch_s"], data["frac"], data["sat_id"], data["beam_id"],
            GeoPoint.from_dict(data["ground"]),
        )


def record_times_s(records, frac_unit_s: float = DEFAULT_FRAC_UNIT_S,
                   origin: tuple[int, int] | None = None) -> np.ndarray:
    """Seconds of each record relative to ``origin`` (default: the first record).

    Working relative to the first record keeps full float precision even for
    epoch-scale timestamps.
    """
    if origin is None:
        origin = (records[0].epoch_s, records[0].frac)
    e0, f0 = origin
    return np.array(
        [(r.epoch_s - e0) + (r.frac - f0) * frac_unit_s for r in records], dtype=float
    )


@dataclass(frozen=True)
class Pass:
    """A contiguous sighting of one satellite."""

    sat_id: int
    records: tuple[IraRecord, ...]
    direction: Direction
    duration_min: float

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise ValueError("a pass needs at least one record")
        keys = [r.sort_key() for r in self.records]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            raise ValueError("pass records must have strictly increasing timestamps")
        if any(r.sat_id != self.sat_id for r in self.records):
            raise ValueError("pass records must share one satellite id")
        if self.duration_min < 0:
            raise ValueError("pass duration must be >= 0")

    def track_records(self) -> tuple[IraRecord, ...]:
        return tuple(r for r in self.records if r.is_track)

    def to_dict(self) -> dict:
        return {
            "sat_id": self.sat_id,
            "records": [r.to_dict() for r in self.records],
            "direction": self.direction.value,
            "duration_min": self.duration_min,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Pass":
        return cls(
            data["sat_id"],
            tuple(IraRecord.from_dict(r) for r in data["records"]),
            Direction(data["direction"]),
            data["duration_min"],
        )


@dataclass(frozen=True)
class BeamConstellation:
    """Per-beam centroid offsets from the sub-satellite point, plus ring radii.

    ``centroids`` maps beam id (1..48) to an (east_km, north_km) offset in the
    upward-travel frame; only observed beams are populated. ``ring_radii_km``
    are the three fitted ring radii, ascending.
    """

    centroids: dict[int, tuple[float, float]]
    ring_radii_km: tuple[float, float, float]

    def __post_init__(self):
        cleaned: dict[int, tuple[float, float]] = {}
        for beam_id, offset in sorted(self.centroids.items()):
            beam_id = int(beam_id)
            if not 1 <= beam_id <= MAX_BEAM_ID:
                raise InvalidBeamId(f"beam id {beam_id} outside [1, {MAX_BEAM_ID}]")
            east, north = float(offset[0]), float(offset[1])
            if not (math.isfinite(east) and math.isfinite(north)):
                raise ValueError(f"non-finite centroid for beam {beam_id}")
            cleaned[beam_id] = (east, north)
        object.__setattr__(self, "centroids", cleaned)
        radii = tuple(float(r) for r in self.ring_radii_km)
        if len(radii) != 3 or any(not math.isfinite(r) or r < 0 for r in radii):
            raise ValueError("ring_radii_km must be three finite non-negative radii")
        if list(radii) != sorted(radii):
            raise ValueError("ring_radii_km must be ascending")
        object.__setattr__(self, "ring_radii_km", radii)

    def to_dict(self) -> dict:
        return {
            "centroids": {str(k): list(v) for k, v in self.centroids.items()},
            "ring_radii_km": list(self.ring_radii_km),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BeamConstellation":
        return cls(
            {int(k): (v[0], v[1]) for k, v in data["centroids"].items()},
            tuple(data["ring_radii_km"]),
        )


@dataclass(frozen=True)
class EvdParams:
    """Location/scale of the left-skewed extreme-value density used for pass durations."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise ValueError("EVD parameters must be finite")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, data: dict) -> "EvdParams":
        return cls(data["mu"], data["sigma"])


@dataclass(frozen=True)
class PowerLawCoeffs:
    """Slope/intercept of a straight-line fit on a log10 scale."""

    m: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and math.isfinite(self.q)):
            raise ValueError("power-law coefficients must be finite")

    def to_dict(self) -> dict:
        return {"m": self.m, "q": self.q}

    @classmethod
    def from_dict(cls, data: dict) -> "PowerLawCoeffs":
        return cls(data["m"], data["q"])


@dataclass(frozen=True)
class MotionProfile:
    """Receiver motion: start point at t0, constant course and speed."""

    start: GeoPoint
    course_deg: float
    speed_kmh: float

    def __post_init__(self):
        if not math.isfinite(self.speed_kmh) or self.speed_kmh < 0:
            raise ValueError(f"speed must be finite and >= 0, got {self.speed_kmh}")

    def position_at(self, elapsed_s: float) -> GeoPoint:
        from .geo import displace  # local import to keep module load light

        return displace(self.start, self.course_deg, self.speed_kmh * elapsed_s / 3600.0)

    def to_dict(self) -> dict:
        return {
            "start": self.start.to_dict(),
            "course_deg": self.course_deg,
            "speed_kmh": self.speed_kmh,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MotionProfile":
        return cls(GeoPoint.from_dict(data["start"]), data["course_deg"], data["speed_kmh"])


@dataclass(frozen=True)
class DetectorConfig:
    """Alarm threshold, collection window size, and the channel's base message slot."""

    threshold_km: float
    window_n: int
    base_interarrival_s: float = 0.09

    def __post_init__(self):
        object.__setattr__(self, "window_n", int(self.window_n))
        if not math.isfinite(self.threshold_km) or self.threshold_km <= 0:
            raise ValueError(f"threshold_km must be > 0, got {self.threshold_km}")
        if self.window_n < 1:
            raise ValueError(f"window_n must be >= 1, got {self.window_n}")
        if self.base_interarrival_s <= 0:
            raise ValueError("base_interarrival_s must be > 0")

    def to_dict(self) -> dict:
        return {
            "threshold_km": self.threshold_km,
            "window_n": self.window_n,
            "base_interarrival_s": self.base_interarrival_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorConfig":
        return cls(data["threshold_km"], data["window_n"], data["base_interarrival_s"])
