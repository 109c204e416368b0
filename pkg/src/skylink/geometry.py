"""Satellite pass geometry over a spherical, non-rotating Earth.

Passes are parameterised by their peak elevation rather than propagated
from orbital elements.  A circular orbit of radius ``R = r_e + h`` is put in
the x-y plane and the station is tilted out of that plane by the cross-track
central angle that produces the requested peak elevation.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, InsufficientSamplesError, NoVisibilityError

EARTH_RADIUS_KM = 6371.0
MU_EARTH_KM3_S2 = 398600.4418
SIDEREAL_DAY_S = 86164.0905
SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class GroundStation:
    name: str
    latitude: float
    altitude_above_sea: float = 0.0
    min_elevation: float = 10.0

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise DomainError(f"latitude {self.latitude} outside [-90, 90]")
        if not 0.0 <= self.min_elevation < 90.0:
            raise DomainError(f"min_elevation {self.min_elevation} outside [0, 90)")


@dataclass(frozen=True)
class OrbitSpec:
    """Circular orbit.  ``altitude`` is in km above the mean Earth radius."""

    altitude: float
    inclination: float = 97.4
    earth_radius: float = EARTH_RADIUS_KM

    def __post_init__(self) -> None:
        if self.altitude <= 0:
            raise DomainError("orbit altitude must be positive")

    @property
    def radius(self) -> float:
        return self.earth_radius + self.altitude

    @property
    def period(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.radius**3 / MU_EARTH_KM3_S2)

    @property
    def speed(self) -> float:
        """Orbital speed in km/s."""
        return math.sqrt(MU_EARTH_KM3_S2 / self.radius)

    @property
    def mean_motion(self) -> float:
        return 2.0 * math.pi / self.period


@dataclass(frozen=True)
class PassSample:
    t: float
    elevation: float
    slant_range: float
    angular_rate: float
    angular_accel: float
    azimuth: float = 0.0


@dataclass(frozen=True)
class PassTrack:
    station: GroundStation
    samples: tuple[PassSample, ...]
    duration: float
    altitude: float = 500.0
    max_elevation: float = field(default=90.0)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_s", "elevation_deg", "range_km", "rate_mrad_s"])
            for s in self.samples:
                w.writerow([_g(s.t), _g(s.elevation), _g(s.slant_range), _g(s.angular_rate)])


def _g(x: float) -> str:
    return format(float(x), ".12g")


def slant_range(h: float, elevation: float, earth_radius: float = EARTH_RADIUS_KM) -> float:
    """Station-to-satellite distance in km for altitude ``h`` (km) and elevation (deg)."""
    if not 0.0 <= elevation <= 90.0:
        raise DomainError(f"elevation {elevation} outside [0, 90]")
    if h <= 0:
        raise DomainError("altitude must be positive")
    s = math.sin(math.radians(elevation))
    k = h / earth_radius
    return earth_radius * (math.sqrt(s * s + 2.0 * k + k * k) - s)


def elevation_at_range(h: float, z: float, earth_radius: float = EARTH_RADIUS_KM) -> float:
    """Inverse of :func:`slant_range`: elevation (deg) at which the range equals ``z``."""
    if z < h or z > slant_range(h, 0.0, earth_radius) * (1 + 1e-12):
        raise DomainError(f"range {z} km not reachable from altitude {h} km")
    R = earth_radius + h
    s = (R * R - earth_radius**2 - z * z) / (2.0 * earth_radius * z)
    return math.degrees(math.asin(min(1.0, max(0.0, s))))


def central_angle(h: float, elevation: float, earth_radius: float = EARTH_RADIUS_KM) -> float:
    """Earth-central angle (rad) between station and sub-satellite point."""
    e = math.radians(elevation)
    return math.acos(earth_radius * math.cos(e) / (earth_radius + h)) - e


def _los_geometry(orbit: OrbitSpec, beta: float, phi: np.ndarray):
    re = orbit.earth_radius
    R = orbit.radius
    station = np.array([math.cos(beta), 0.0, math.sin(beta)])
    sat = R * np.stack([np.cos(phi), np.sin(phi), np.zeros_like(phi)], axis=-1)
    los = sat - re * station
    rng = np.linalg.norm(los, axis=-1)
    u = los / rng[:, None]
    up = station
    north = np.array([-math.sin(beta), 0.0, math.cos(beta)])
    east = np.array([0.0, 1.0, 0.0])
    el = np.degrees(np.arcsin(np.clip(u @ up, -1.0, 1.0)))
    az = np.degrees(np.arctan2(u @ east, u @ north)) % 360.0
    vel = R * orbit.mean_motion * np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)
    v_perp = vel - np.sum(vel * u, axis=-1)[:, None] * u
    rate = np.linalg.norm(v_perp, axis=-1) / rng  # rad/s
    return el, az, rng, rate


def generate_pass(
    orbit: OrbitSpec,
    station: GroundStation,
    max_elevation: float,
    dt: float = 1.0,
) -> PassTrack:
    """Symmetric pass peaking at ``max_elevation``, sampled every ``dt`` seconds.

    The track starts when the satellite rises through ``station.min_elevation``
    and ends when it sets through it again.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if not 0.0 < max_elevation <= 90.0:
        raise DomainError(f"max_elevation {max_elevation} outside (0, 90]")
    if max_elevation < station.min_elevation:
        raise NoVisibilityError(
            f"peak elevation {max_elevation} deg below cutoff {station.min_elevation} deg"
        )
    h = orbit.altitude
    beta = central_angle(h, max_elevation, orbit.earth_radius)
    gamma_c = central_angle(h, station.min_elevation, orbit.earth_radius)
    phi_c = math.acos(min(1.0, math.cos(gamma_c) / math.cos(beta)))
    duration = 2.0 * phi_c / orbit.mean_motion
    t = np.arange(0.0, duration + 1e-9, dt)
    phi = -phi_c + orbit.mean_motion * t
    el, az, rng, rate = _los_geometry(orbit, beta, phi)
    el = np.clip(el, station.min_elevation, 90.0)
    # re-derive range from elevation so stored samples satisfy slant_range() exactly
    rng = np.array([slant_range(h, e, orbit.earth_radius) for e in el])
    accel = np.gradient(rate, t) if len(t) > 1 else np.zeros_like(rate)
    samples = tuple(
        PassSample(float(ti), float(ei), float(ri), float(wi * 1e3), float(ai * 1e3), float(zi))
        for ti, ei, ri, wi, ai, zi in zip(t, el, rng, rate, accel, az)
    )
    return PassTrack(station, samples, duration, altitude=h, max_elevation=max_elevation)


def pass_window(track: PassTrack, max_range: float) -> float:
    """Time (s) the satellite spends within ``max_range`` km during the track."""
    t = track.column("t")
    z = track.column("slant_range")
    inside = t[z <= max_range]
    return float(inside[-1] - inside[0]) if inside.size > 1 else 0.0


def _unit_vectors(az_deg: np.ndarray, el_deg: np.ndarray) -> np.ndarray:
    az = np.radians(az_deg)
    el = np.radians(el_deg)
    return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)


def angular_dynamics(track: PassTrack) -> tuple[float, float]:
    """Peak line-of-sight angular rate (mrad/s) and acceleration (mrad/s^2).

    Both come from finite differences of the sampled pointing direction.
    """
    if len(track.samples) < 3:
        raise InsufficientSamplesError("angular_dynamics needs at least 3 samples")
    t = track.column("t")
    u = _unit_vectors(track.column("azimuth"), track.column("elevation"))
    # atan2 form stays exact for tiny steps where arccos loses precision
    cross = np.linalg.norm(np.cross(u[1:], u[:-1]), axis=1)
    step = np.arctan2(cross, np.sum(u[1:] * u[:-1], axis=1))
    dts = np.diff(t)
    rate = step / dts
    accel = np.diff(rate) / (0.5 * (dts[1:] + dts[:-1]))
    return float(np.max(rate) * 1e3), float(np.max(np.abs(accel)) * 1e3)


@dataclass(frozen=True)
class PassStatistics:
    passes_per_day: float
    mean_duration: float
    total_passes: int
    days: int


def _day_passes(
    orbit: OrbitSpec,
    station: GroundStation,
    seed: int,
    sat_index: int,
    day: int,
    night_only: bool,
) -> list[float]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sat_index, day)))
    T = orbit.period
    n_rev = int(SECONDS_PER_DAY // T)
    if rng.random() < (SECONDS_PER_DAY / T - n_rev):
        n_rev += 1
    node0 = rng.uniform(0.0, 2.0 * math.pi)
    # ground track shifts west by Earth's rotation each revolution
    dnode = -2.0 * math.pi * T / SIDEREAL_DAY_S
    inc = math.radians(orbit.inclination)
    lat = math.radians(station.latitude)
    s = np.array([math.cos(lat), 0.0, math.sin(lat)])
    gamma_c = central_angle(orbit.altitude, station.min_elevation, orbit.earth_radius)
    durations = []
    for k in range(n_rev):
        node = node0 + k * dnode
        n = np.array([math.sin(inc) * math.sin(node), -math.sin(inc) * math.cos(node), math.cos(inc)])
        sin_beta = float(s @ n)
        beta = math.asin(max(-1.0, min(1.0, sin_beta)))
        if abs(beta) >= gamma_c:
            continue
        if night_only:
            # closest approach direction is the station projected into the orbit plane;
            # the night half of a noon/midnight orbit is the descending half
            p = s - sin_beta * n
            node_vec = np.array([math.cos(node), math.sin(node), 0.0])
            along = np.cross(n, node_vec)
            u = math.atan2(float(p @ along), float(p @ node_vec))
            descending = math.cos(u) < 0.0
            if not descending:
                continue
        phi_c = math.acos(min(1.0, math.cos(gamma_c) / math.cos(beta)))
        durations.append(2.0 * phi_c / orbit.mean_motion)
    return durations


def pass_statistics(
    constellation: list[OrbitSpec],
    station: GroundStation,
    days: int,
    seed: int = 0,
    night_only: bool = True,
    workers: int = 1,
) -> PassStatistics:
    """Average passes per day and mean pass duration (s) above the station cutoff.

    Each (satellite, day) pair draws its own ascending node from a seed derived
    from ``seed``, so results do not depend on ``workers``.
    """
    if days < 1:
        raise DomainError("days must be >= 1")
    jobs = [(i, d) for i in range(len(constellation)) for d in range(days)]

    def run(job):
        i, d = job
        return _day_passes(constellation[i], station, seed, i, d, night_only)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    durations = [x for r in results for x in r]
    n = len(durations)
    mean = float(np.mean(durations)) if n else 0.0
    return PassStatistics(n / days, mean, n, days)


def pass_half_duration(orbit: OrbitSpec, station: GroundStation, max_elevation: float) -> float:
    """Half the time (s) a pass peaking at ``max_elevation`` spends above the cutoff."""
    if max_elevation < station.min_elevation:
        raise NoVisibilityError(
            f"peak elevation {max_elevation} deg below cutoff {station.min_elevation} deg"
        )
    beta = central_angle(orbit.altitude, max_elevation, orbit.earth_radius)
    gamma_c = central_angle(orbit.altitude, station.min_elevation, orbit.earth_radius)
    return math.acos(min(1.0, math.cos(gamma_c) / math.cos(beta))) / orbit.mean_motion


def pass_view(orbit: OrbitSpec, max_elevation: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elevation (deg) and slant range (km) at times ``t`` (s) from the pass peak."""
    beta = central_angle(orbit.altitude, max_elevation, orbit.earth_radius)
    phi = orbit.mean_motion * np.asarray(t, dtype=float)
    el, _, _, _ = _los_geometry(orbit, beta, phi)
    el = np.clip(el, 0.0, 90.0)
    rng = np.array([slant_range(orbit.altitude, e, orbit.earth_radius) for e in el])
    return el, rng
