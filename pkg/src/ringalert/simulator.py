"""Deterministic generator of synthetic ring-alert streams.

Satellites move along fixed great circles at a constant ground speed (the
simplest kinematic model that reproduces the measured ground statistics:
speed, coverage, pass durations, beam geometry, and slot timing). Each
satellite emits one message per 90 ms slot while in view of the receiver:
one sub-satellite record at every frame boundary, and its 48 beam-center
records cycling through the remaining slots. Losses are applied per emission,
either independently (default) or through a bursty outage channel.

All randomness flows from ``SimConfig.seed``: identical configurations
produce byte-identical streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    displace,
    displace_deg,
    haversine_km,
    unit_vectors,
)
from .model import MAX_BEAM_ID, IraRecord, MotionProfile, valid_sat_ids

DEFAULT_RING_RADII_KM = (3.36, 7.98, 14.35)
DEFAULT_RING_COUNTS = (8, 16, 24)


def default_beam_offsets(ring_radii_km=DEFAULT_RING_RADII_KM,
                         ring_counts=DEFAULT_RING_COUNTS) -> tuple[tuple[float, float], ...]:
    """Honeycomb layout: rings of 8/16/24 beams at the three ring radii.

    Beam 1..8 sit on the inner ring, 9..24 on the middle, 25..48 on the outer;
    each ring is evenly spaced starting due north. Offsets are (east, north)
    km in the upward-travel frame.
    """
    offsets = []
    for radius, count in zip(ring_radii_km, ring_counts):
        for i in range(count):
            theta = 2.0 * math.pi * i / count
            offsets.append((radius * math.sin(theta), radius * math.cos(theta)))
    return tuple(offsets)


@dataclass(frozen=True)
class ShipClassPreset:
    """A ship class and its cruising-speed envelope in km/h."""

    class_id: str
    description: str
    speed_min_kmh: float
    speed_max_kmh: float

    def motion(self, start: GeoPoint, course_deg: float,
               speed_kmh: float | None = None) -> MotionProfile:
        speed = self.speed_max_kmh if speed_kmh is None else float(speed_kmh)
        if not self.speed_min_kmh <= speed <= self.speed_max_kmh:
            raise ValueError(
                f"{self.class_id} speed {speed} outside "
                f"[{self.speed_min_kmh}, {self.speed_max_kmh}] km/h"
            )
        return MotionProfile(start, course_deg, speed)


SHIP_CLASSES: dict[str, ShipClassPreset] = {
    "S1": ShipClassPreset("S1", "Bulk carriers", 24.0, 28.0),
    "S2": ShipClassPreset("S2", "Container ships", 30.0, 44.0),
    "S3": ShipClassPreset("S3", "Oil and chemical tankers", 24.0, 31.0),
    "S4": ShipClassPreset("S4", "RORO vessels", 30.0, 41.0),
    "S5": ShipClassPreset("S5", "Cruise ships", 37.0, 46.0),
}


@dataclass(frozen=True)
class SpoofProfile:
    """An adversarial detour: the reported track diverges from truth after start_s."""

    start_s: float
    offset_course_deg: float
    offset_speed_kmh: float

    def __post_init__(self):
        if self.start_s < 0:
            raise ValueError("spoof start must be >= 0")
        if self.offset_speed_kmh < 0:
            raise ValueError("spoof offset speed must be >= 0")

    def to_dict(self) -> dict:
        return {
            "start_s": self.start_s,
            "offset_course_deg": self.offset_course_deg,
            "offset_speed_kmh": self.offset_speed_kmh,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpoofProfile":
        return cls(data["start_s"], data["offset_course_deg"], data["offset_speed_kmh"])


@dataclass(frozen=True)
class Scenario:
    """Receiver motion plus the (optionally spoofed) reported-position track."""

    receiver: MotionProfile
    spoof: SpoofProfile | None = None

    def truth_position(self, t_s: float) -> GeoPoint:
        return self.receiver.position_at(t_s)

    def reported_position(self, t_s: float) -> GeoPoint:
        truth = self.truth_position(t_s)
        if self.spoof is None or t_s <= self.spoof.start_s:
            return truth
        drift_km = self.spoof.offset_speed_kmh * (t_s - self.spoof.start_s) / 3600.0
        return displace(truth, self.spoof.offset_course_deg, drift_km)

    def to_dict(self) -> dict:
        return {
            "receiver": self.receiver.to_dict(),
            "spoof": None if self.spoof is None else self.spoof.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        spoof = data.get("spoof")
        return cls(
            MotionProfile.from_dict(data["receiver"]),
            None if spoof is None else SpoofProfile.from_dict(spoof),
        )


def apply_spoof(scenario: Scenario, t_s: float) -> GeoPoint:
    """Reported position at ``t_s``: truth before the spoof starts, diverging after."""
    return scenario.reported_position(t_s)


_DEFAULT_SCENARIO = Scenario(MotionProfile(GeoPoint(0.0, 0.0), 0.0, 0.0))


@dataclass(frozen=True)
class SimConfig:
    """Constellation, channel, and run parameters for stream generation.

    ``per`` is the per-emission loss probability; 1.0 is allowed only as the
    degenerate everything-lost case. ``plane_nodes_deg`` overrides the default
    evenly spaced ascending-node longitudes. The burst loss model replaces
    independent drops with outage periods whose mean preserves ``per``.
    """

    n_sats: int = 66
    ground_speed_kms: float = 6.89
    beam_period_s: float = 4.32
    n_beams: int = MAX_BEAM_ID
    per: float = 0.0
    coverage_radius_km: float = 1625.0
    altitude_km: float = 800.0  # descriptive only; the model works at ground level
    beam_offsets: tuple[tuple[float, float], ...] = field(default_factory=default_beam_offsets)
    seed: int = 0
    duration_s: float = 600.0
    start_epoch_s: int = 1_600_000_000
    planes: int = 6
    inclination_deg: float = 86.4
    plane_nodes_deg: tuple[float, ...] | None = None
    loss_model: str = "iid"
    burst_stages: int = 5

    def __post_init__(self):
        object.__setattr__(self, "beam_offsets", tuple(tuple(map(float, o)) for o in self.beam_offsets))
        if self.plane_nodes_deg is not None:
            object.__setattr__(self, "plane_nodes_deg", tuple(float(x) for x in self.plane_nodes_deg))
        if not 1 <= self.n_sats <= len(valid_sat_ids()):
            raise ValueError(f"n_sats must be in [1, {len(valid_sat_ids())}]")
        if self.planes < 1 or self.n_sats % self.planes != 0:
            raise ValueError("n_sats must divide evenly into planes")
        if self.plane_nodes_deg is not None and len(self.plane_nodes_deg) != self.planes:
            raise ValueError("plane_nodes_deg must list one node per plane")
        if not 0.0 < self.inclination_deg <= 90.0:
            raise ValueError("inclination_deg must be in (0, 90]")
        if not 0.0 <= self.per <= 1.0:
            raise ValueError("per must be in [0, 1]")
        if self.ground_speed_kms <= 0 or self.beam_period_s <= 0:
            raise ValueError("ground speed and beam period must be > 0")
        if self.n_beams < 1 or len(self.beam_offsets) != self.n_beams:
            raise ValueError("beam_offsets must provide one (east, north) pair per beam")
        if self.coverage_radius_km <= 0:
            raise ValueError("coverage_radius_km must be > 0")
        if self.duration_s < 0:
            raise ValueError("duration_s must be >= 0")
        if self.loss_model not in ("iid", "burst"):
            raise ValueError("loss_model must be 'iid' or 'burst'")
        if self.burst_stages < 1:
            raise ValueError("burst_stages must be >= 1")
        if self.slot_us < 1:
            raise ValueError("aggregate slot must be at least 1 microsecond")

    @property
    def slot_us(self) -> int:
        """Aggregate emission slot in whole microseconds (90 000 with defaults)."""
        return round(self.beam_period_s / self.n_beams * 1e6)

    @property
    def slot_s(self) -> float:
        return self.slot_us * 1e-6

    @property
    def sats_per_plane(self) -> int:
        return self.n_sats // self.planes

    @property
    def sat_ids(self) -> tuple[int, ...]:
        return tuple(sorted(valid_sat_ids())[: self.n_sats])

    def plane_nodes(self) -> tuple[float, ...]:
        if self.plane_nodes_deg is not None:
            return self.plane_nodes_deg
        return tuple(p * 180.0 / self.planes for p in range(self.planes))

    def to_dict(self) -> dict:
        return {
            "n_sats": self.n_sats,
            "ground_speed_kms": self.ground_speed_kms,
            "beam_period_s": self.beam_period_s,
            "n_beams": self.n_beams,
            "per": self.per,
            "coverage_radius_km": self.coverage_radius_km,
            "altitude_km": self.altitude_km,
            "beam_offsets": [list(o) for o in self.beam_offsets],
            "seed": self.seed,
            "duration_s": self.duration_s,
            "start_epoch_s": self.start_epoch_s,
            "planes": self.planes,
            "inclination_deg": self.inclination_deg,
            "plane_nodes_deg": None if self.plane_nodes_deg is None else list(self.plane_nodes_deg),
            "loss_model": self.loss_model,
            "burst_stages": self.burst_stages,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        kwargs = dict(data)
        if kwargs.get("beam_offsets") is not None:
            kwargs["beam_offsets"] = tuple(tuple(o) for o in kwargs["beam_offsets"])
        if kwargs.get("plane_nodes_deg") is not None:
            kwargs["plane_nodes_deg"] = tuple(kwargs["plane_nodes_deg"])
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# orbit kinematics

def _orbit_basis(config: SimConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-satellite (A, T, phase): position = A cos(w t + phase) + T sin(w t + phase).

    A is the ascending-node direction, T the unit tangent there. Satellites in
    a plane are evenly spaced; planes carry a small walking phase offset so
    they are not synchronized.
    """
    per_plane = config.sats_per_plane
    heading = math.radians(90.0 - config.inclination_deg)
    a_rows, t_rows, phases = [], [], []
    for p, node in enumerate(config.plane_nodes()):
        lam = math.radians(node)
        a_vec = np.array([math.cos(lam), math.sin(lam), 0.0])
        east = np.array([-math.sin(lam), math.cos(lam), 0.0])
        north = np.array([0.0, 0.0, 1.0])
        t_vec = north * math.cos(heading) + east * math.sin(heading)
        for k in range(per_plane):
            a_rows.append(a_vec)
            t_rows.append(t_vec)
            phases.append(2.0 * math.pi * (k + p / config.planes) / per_plane)
    return np.array(a_rows), np.array(t_rows), np.array(phases)


def _sat_positions(config: SimConfig, sat_index: int, t_s: np.ndarray):
    """(lat, lon, northbound) arrays for one satellite at the given times."""
    a_all, t_all, phases = _orbit_basis(config)
    omega = config.ground_speed_kms / EARTH_RADIUS_KM
    theta = omega * np.asarray(t_s, dtype=float) + phases[sat_index]
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    u = a_all[sat_index][None, :] * cos_t[:, None] + t_all[sat_index][None, :] * sin_t[:, None]
    lat = np.degrees(np.arcsin(np.clip(u[:, 2], -1.0, 1.0)))
    lon = np.degrees(np.arctan2(u[:, 1], u[:, 0]))
    # z-velocity sign: d(u_z)/dtheta = T_z cos(theta) - A_z sin(theta); A_z == 0 here
    northbound = t_all[sat_index][2] * cos_t - a_all[sat_index][2] * sin_t >= 0.0
    return lat, lon, northbound


def propagate(config: SimConfig, t_s: float) -> list[GeoPoint]:
    """Ground position of every satellite at time ``t_s`` (seconds into the run)."""
    points = []
    for j in range(config.n_sats):
        lat, lon, _ = _sat_positions(config, j, np.array([float(t_s)]))
        points.append(GeoPoint(float(lat[0]), float(lon[0])))
    return points


def orbital_period_s(config: SimConfig) -> float:
    return 2.0 * math.pi * EARTH_RADIUS_KM / config.ground_speed_kms


# ---------------------------------------------------------------------------
# in-view geometry

def _view_slot_ranges(config: SimConfig, receiver: GeoPoint, radius_km: float,
                      slot_lo: int, slot_hi: int) -> list[list[tuple[int, int]]]:
    """Per-satellite inclusive slot ranges whose emission can reach the receiver.

    Closed form: along the orbit, the dot product with the receiver direction
    is C cos(theta - psi), so each revolution contributes one contiguous
    in-view arc (or none, or the whole revolution).
    """
    a_all, t_all, phases = _orbit_basis(config)
    r_hat = unit_vectors(receiver.lat_deg, receiver.lon_deg)
    omega = config.ground_speed_kms / EARTH_RADIUS_KM
    slot_s = config.slot_s
    delta = min(radius_km / EARTH_RADIUS_KM, math.pi)
    cos_delta = math.cos(delta)
    two_pi = 2.0 * math.pi
    out: list[list[tuple[int, int]]] = []
    for j in range(config.n_sats):
        a_dot = float(a_all[j] @ r_hat)
        t_dot = float(t_all[j] @ r_hat)
        c = math.hypot(a_dot, t_dot)
        if c < 1e-15:
            # receiver on the orbit axis: constant quarter-circumference range
            if cos_delta <= 0.0 and slot_hi > slot_lo:
                out.append([(slot_lo, slot_hi - 1)])
            else:
                out.append([])
            continue
        if cos_delta / c >= 1.0:
            out.append([])
            continue
        if cos_delta / c <= -1.0:
            out.append([(slot_lo, slot_hi - 1)] if slot_hi > slot_lo else [])
            continue
        psi = math.atan2(t_dot, a_dot)
        alpha = math.acos(cos_delta / c)
        # theta in [psi - alpha + 2 pi m, psi + alpha + 2 pi m]
        t_center0 = (psi - phases[j]) / omega
        half_t = alpha / omega
        period = two_pi / omega
        m_lo = math.floor((slot_lo * slot_s - t_center0 - half_t) / period)
        m_hi = math.ceil((slot_hi * slot_s - t_center0 + half_t) / period)
        ranges = []
        for m in range(m_lo, m_hi + 1):
            t0 = t_center0 - half_t + m * period
            t1 = t_center0 + half_t + m * period
            k0 = max(slot_lo, math.ceil(t0 / slot_s))
            k1 = min(slot_hi - 1, math.floor(t1 / slot_s))
            if k0 <= k1:
                ranges.append((k0, k1))
        out.append(ranges)
    return out


# ---------------------------------------------------------------------------
# loss channels

def _kept_offsets_iid(length: int, keep_prob: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in [0, length) kept by an independent Bernoulli(keep_prob) channel.

    Uses geometric gap skipping so work scales with the kept count, not the
    slot count.
    """
    if keep_prob <= 0.0 or length <= 0:
        return np.empty(0, dtype=np.int64)
    if keep_prob >= 1.0:
        return np.arange(length, dtype=np.int64)
    kept = []
    pos = -1
    expected = int(length * keep_prob) + 1
    while pos < length - 1:
        batch = max(64, int(expected * 1.2) + 16)
        gaps = rng.geometric(keep_prob, size=batch)
        positions = pos + np.cumsum(gaps)
        take = positions[positions < length]
        kept.append(take)
        if take.size < positions.size:
            break
        pos = int(positions[-1])
        expected = int((length - pos) * keep_prob) + 1
    return np.concatenate(kept) if kept else np.empty(0, dtype=np.int64)


def _kept_slots_burst(slot_count: int, per: float, stages: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Kept slots under the bursty channel: single deliveries separated by outages.

    Outage lengths are Erlang-distributed (``stages`` stages) with mean
    per / (1 - per) slots, so the long-run delivery ratio still equals
    1 - per while gap durations peak near their mean instead of at one slot.
    """
    if per <= 0.0:
        return np.arange(slot_count, dtype=np.int64)
    if per >= 1.0 or slot_count <= 0:
        return np.empty(0, dtype=np.int64)
    mean_off = per / (1.0 - per)
    kept = []
    pos = -1
    while pos < slot_count - 1:
        remaining = slot_count - pos
        batch = max(64, int(remaining / (1.0 + mean_off) * 1.2) + 16)
        gaps = 1 + np.round(rng.gamma(stages, mean_off / stages, size=batch)).astype(np.int64)
        positions = pos + np.cumsum(gaps)
        take = positions[positions < slot_count]
        kept.append(take)
        if take.size < positions.size:
            break
        pos = int(positions[-1])
    return np.concatenate(kept) if kept else np.empty(0, dtype=np.int64)


def _intersect_ranges(slots: np.ndarray, ranges: list[tuple[int, int]]) -> np.ndarray:
    if not ranges or slots.size == 0:
        return np.empty(0, dtype=np.int64)
    mask = np.zeros(slots.shape, dtype=bool)
    for k0, k1 in ranges:
        lo = np.searchsorted(slots, k0, side="left")
        hi = np.searchsorted(slots, k1, side="right")
        mask[lo:hi] = True
    return slots[mask]


# ---------------------------------------------------------------------------
# emission

@dataclass(frozen=True)
class StreamArrays:
    """Columnar form of an emitted stream (sorted by slot, then satellite)."""

    slot: np.ndarray
    t_s: np.ndarray
    sat_id: np.ndarray
    beam_id: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    epoch_s: np.ndarray
    frac: np.ndarray

    def __len__(self) -> int:
        return int(self.slot.size)

    def to_records(self) -> list[IraRecord]:
        return [
            IraRecord(int(e), int(f), int(s), int(b), GeoPoint(float(la), float(lo)))
            for e, f, s, b, la, lo in zip(
                self.epoch_s, self.frac, self.sat_id, self.beam_id, self.lat, self.lon
            )
        ]


def _beam_ids_for_slots(config: SimConfig, slots: np.ndarray, sat_index: int) -> np.ndarray:
    """Deficit round-robin schedule: slot multiples of n_beams carry the
    sub-satellite record (beam 0); the beam cycle advances through the other
    slots, so every beam is emitted and the aggregate rate stays one message
    per slot. Satellites are de-phased by their index."""
    nb = config.n_beams
    j = slots + (sat_index % nb)
    frame, s = np.divmod(j, nb)
    beam = ((nb - 1) * frame + s - 1) % nb + 1
    return np.where(s == 0, 0, beam).astype(np.int64)


def _slot_count(config: SimConfig) -> int:
    duration_us = round(config.duration_s * 1e6)
    return int(-(-duration_us // config.slot_us)) if duration_us > 0 else 0


def emit_stream(config: SimConfig, scenario: Scenario | None = None,
                *, return_arrays: bool = False):
    """Generate the stream of ring-alert records seen by the scenario receiver.

    Returns a list of records (default) or :class:`StreamArrays`. Satellites
    emit on every slot while within ``coverage_radius_km`` of the receiver;
    each emission then passes the loss channel. Identical (config, scenario)
    pairs produce identical output.
    """
    if scenario is None:
        scenario = _DEFAULT_SCENARIO
    if scenario.spoof is not None and not 0.0 <= scenario.spoof.start_s <= config.duration_s:
        raise ValueError("spoof start must fall inside the simulated window")
    slot_count = _slot_count(config)
    rng = np.random.default_rng(config.seed)
    receiver = scenario.receiver
    margin_km = receiver.speed_kmh * config.duration_s / 3600.0
    ranges_per_sat = _view_slot_ranges(
        config, receiver.start, config.coverage_radius_km + margin_km, 0, slot_count
    )
    keep_prob = 1.0 - config.per
    parts = []
    for j in range(config.n_sats):
        ranges = ranges_per_sat[j]
        if config.loss_model == "burst":
            kept_all = _kept_slots_burst(slot_count, config.per, config.burst_stages, rng)
            kept = _intersect_ranges(kept_all, ranges)
        else:
            chunks = []
            for k0, k1 in ranges:
                offsets = _kept_offsets_iid(k1 - k0 + 1, keep_prob, rng)
                chunks.append(k0 + offsets)
            kept = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
        if kept.size == 0:
            continue
        t = (kept * config.slot_us).astype(float) * 1e-6
        lat, lon, northbound = _sat_positions(config, j, t)
        # exact in-view check against the (possibly moving) receiver
        if receiver.speed_kmh > 0:
            r_lat, r_lon = displace_deg(
                receiver.start.lat_deg, receiver.start.lon_deg,
                receiver.course_deg, receiver.speed_kmh * t / 3600.0,
            )
        else:
            r_lat, r_lon = receiver.start.lat_deg, receiver.start.lon_deg
        visible = haversine_km(lat, lon, r_lat, r_lon) <= config.coverage_radius_km
        kept, t, lat, lon, northbound = (
            kept[visible], t[visible], lat[visible], lon[visible], northbound[visible]
        )
        if kept.size == 0:
            continue
        beam_ids = _beam_ids_for_slots(config, kept, j)
        offsets = np.array(config.beam_offsets)
        is_beam = beam_ids > 0
        east = np.zeros(kept.size)
        north = np.zeros(kept.size)
        east[is_beam] = offsets[beam_ids[is_beam] - 1, 0]
        north[is_beam] = offsets[beam_ids[is_beam] - 1, 1]
        north = np.where(northbound, north, -north)
        dist = np.hypot(east, north)
        course = np.degrees(np.arctan2(east, north))
        out_lat, out_lon = displace_deg(lat, lon, course, dist)
        out_lat = np.where(is_beam, out_lat, lat)
        out_lon = np.where(is_beam, out_lon, lon)
        parts.append((kept, np.full(kept.size, j), beam_ids, out_lat, out_lon))
    if parts:
        slot = np.concatenate([p[0] for p in parts])
        sat_idx = np.concatenate([p[1] for p in parts])
        beam_id = np.concatenate([p[2] for p in parts])
        lat = np.concatenate([p[3] for p in parts])
        lon = np.concatenate([p[4] for p in parts])
        order = np.lexsort((sat_idx, slot))
        slot, sat_idx, beam_id, lat, lon = (
            slot[order], sat_idx[order], beam_id[order], lat[order], lon[order]
        )
    else:
        slot = np.empty(0, dtype=np.int64)
        sat_idx = np.empty(0, dtype=np.int64)
        beam_id = np.empty(0, dtype=np.int64)
        lat = np.empty(0)
        lon = np.empty(0)
    total_us = slot * config.slot_us
    epoch = config.start_epoch_s + total_us // 1_000_000
    frac = total_us % 1_000_000
    sat_ids = np.array(config.sat_ids, dtype=np.int64)
    arrays = StreamArrays(
        slot=slot,
        t_s=total_us.astype(float) * 1e-6,
        sat_id=sat_ids[sat_idx] if slot.size else np.empty(0, dtype=np.int64),
        beam_id=beam_id,
        lat=lat,
        lon=lon,
        epoch_s=epoch,
        frac=frac,
    )
    return arrays if return_arrays else arrays.to_records()


# ---------------------------------------------------------------------------
# stationary-receiver window sampling for Monte Carlo evaluation

@dataclass(frozen=True)
class WindowSample:
    """Beam-record positions and times for one collection window."""

    t_s: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    sat_id: np.ndarray
    beam_id: np.ndarray


def sample_windows(config: SimConfig, receiver: GeoPoint, *, window_messages: int,
                   n_windows: int, rng: np.random.Generator | None = None,
                   chunk_slots: int = 4_000_000,
                   max_chunks: int = 4096) -> list[WindowSample]:
    """Consecutive disjoint windows of ``window_messages`` beam records each.

    A fast path for Monte Carlo studies with a stationary receiver and the
    independent-loss channel: only in-view slots that survive the channel are
    ever materialized, so cost scales with the message count. The stream is
    continuous; windows are cut from it back to back.
    """
    if config.loss_model != "iid":
        raise ValueError("sample_windows supports the iid loss channel only")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    keep_prob = 1.0 - config.per
    windows: list[WindowSample] = []
    buf_t, buf_lat, buf_lon, buf_sat, buf_beam = [], [], [], [], []
    buffered = 0
    sat_ids = np.array(config.sat_ids, dtype=np.int64)
    offsets = np.array(config.beam_offsets)
    for chunk_index in range(max_chunks):
        lo = chunk_index * chunk_slots
        hi = lo + chunk_slots
        ranges_per_sat = _view_slot_ranges(config, receiver, config.coverage_radius_km, lo, hi)
        parts = []
        for j in range(config.n_sats):
            chunks = []
            for k0, k1 in ranges_per_sat[j]:
                kept = k0 + _kept_offsets_iid(k1 - k0 + 1, keep_prob, rng)
                if kept.size:
                    chunks.append(kept)
            if not chunks:
                continue
            kept = np.concatenate(chunks)
            beam_ids = _beam_ids_for_slots(config, kept, j)
            is_beam = beam_ids > 0
            kept, beam_ids = kept[is_beam], beam_ids[is_beam]
            if kept.size == 0:
                continue
            t = (kept * config.slot_us).astype(float) * 1e-6
            lat, lon, northbound = _sat_positions(config, j, t)
            east = offsets[beam_ids - 1, 0]
            north = np.where(northbound, offsets[beam_ids - 1, 1], -offsets[beam_ids - 1, 1])
            out_lat, out_lon = displace_deg(lat, lon, np.degrees(np.arctan2(east, north)),
                                            np.hypot(east, north))
            parts.append((kept, np.full(kept.size, j), beam_ids, t, out_lat, out_lon))
        if parts:
            slot = np.concatenate([p[0] for p in parts])
            sat_j = np.concatenate([p[1] for p in parts])
            beam = np.concatenate([p[2] for p in parts])
            t = np.concatenate([p[3] for p in parts])
            lat = np.concatenate([p[4] for p in parts])
            lon = np.concatenate([p[5] for p in parts])
            order = np.lexsort((sat_j, slot))
            buf_t.append(t[order])
            buf_lat.append(lat[order])
            buf_lon.append(lon[order])
            buf_sat.append(sat_ids[sat_j[order]])
            buf_beam.append(beam[order])
            buffered += slot.size
        while buffered >= window_messages and len(windows) < n_windows:
            t_all = np.concatenate(buf_t)
            lat_all = np.concatenate(buf_lat)
            lon_all = np.concatenate(buf_lon)
            sat_all = np.concatenate(buf_sat)
            beam_all = np.concatenate(buf_beam)
            windows.append(WindowSample(
                t_all[:window_messages].copy(), lat_all[:window_messages].copy(),
                lon_all[:window_messages].copy(), sat_all[:window_messages].copy(),
                beam_all[:window_messages].copy(),
            ))
            buf_t = [t_all[window_messages:]]
            buf_lat = [lat_all[window_messages:]]
            buf_lon = [lon_all[window_messages:]]
            buf_sat = [sat_all[window_messages:]]
            buf_beam = [beam_all[window_messages:]]
            buffered -= window_messages
        if len(windows) >= n_windows:
            return windows
    raise RuntimeError(
        f"collected only {len(windows)}/{n_windows} windows in {max_chunks} chunks; "
        "no satellite may be in view of this receiver"
    )
