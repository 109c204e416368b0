"""Gravity-induced decorrelation of entangled photons in the event formalism.

The time decorrelation between a photon climbing to altitude ``h`` and its
ground-bound twin is

    dt = (1/c) * int_{r_e}^{r_e+h} g(r) * sqrt(1 + 2M/r + r_e^2 cot^2(theta) / r^2) dr

with ``g(r) = M/r`` in the general form and ``g(r) = M/r - M/(r_e+h)`` when
the clock local to the detector is the reference.  ``theta`` is the altitude
angle of the satellite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, QuadratureError

C_LIGHT = 299_792_458.0
GM_EARTH = 3.986004418e14
FORMULATIONS = ("general", "local_clock")


@dataclass(frozen=True)
class EarthModel:
    radius: float = 6.371e6
    mass_length: float = GM_EARTH / C_LIGHT**2

    def __post_init__(self) -> None:
        if not 0 < self.mass_length < 1e-3 * self.radius:
            raise DomainError("mass length must be positive and much smaller than the radius")


def _simpson(f, a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-10, max_depth: int = 60) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    Raises QuadratureError if an interval still misses tolerance at
    ``max_depth``.
    """
    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = _simpson(f, a, b, fa, fm, fb)
    scale = abs(whole) if whole != 0 else 1.0
    tol = rel_tol * scale
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl, fr = f(0.5 * (lo + mid)), f(0.5 * (mid + hi))
        left = _simpson(f, lo, mid, flo, fl, fmid)
        right = _simpson(f, mid, hi, fmid, fr, fhi)
        diff = left + right - est
        if abs(diff) <= 15.0 * eps:
            total += left + right + diff / 15.0
        elif depth >= max_depth:
            raise QuadratureError(f"no convergence on [{lo}, {hi}] after {depth} bisections")
        else:
            stack.append((lo, mid, flo, fl, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * eps, depth + 1))
    return total


def delta_t(
    earth: EarthModel,
    h: float,
    theta: float,
    formulation: str = "local_clock",
    rel_tol: float = 1e-10,
) -> float:
    """Time decorrelation (s) for altitude ``h`` (m) and altitude angle ``theta`` (deg)."""
    if formulation not in FORMULATIONS:
        raise DomainError(f"formulation must be one of {FORMULATIONS}")
    if not 0.0 < theta <= 90.0:
        raise DomainError(f"altitude angle {theta} outside (0, 90]")
    if h < 0:
        raise DomainError("altitude must be non-negative")
    if h == 0:
        return 0.0
    re, M = earth.radius, earth.mass_length
    top = re + h
    cot2 = 0.0 if theta == 90.0 else math.tan(math.radians(90.0 - theta)) ** 2
    offset = M / top if formulation == "local_clock" else 0.0

    def integrand(r: float) -> float:
        return (M / r - offset) * math.sqrt(1.0 + 2.0 * M / r + re * re * cot2 / (r * r))

    return adaptive_simpson(integrand, re, top, rel_tol) / C_LIGHT


def zenith_closed_form(earth: EarthModel, h: float, formulation: str = "local_clock") -> float:
    """Zenith value with the small ``2M/r`` term dropped."""
    re, M = earth.radius, earth.mass_length
    val = M * math.log((re + h) / re)
    if formulation == "local_clock":
        val -= M * h / (re + h)
    return val / C_LIGHT


def decorrelation_D(dt: float, coherence_time: float) -> float:
    if coherence_time <= 0:
        raise DomainError("coherence time must be positive")
    return math.exp(-0.5 * dt * dt / coherence_time**2)


def calibrate_coherence_time(
    earth: EarthModel,
    h: float,
    theta_ref: float,
    target_D: float,
    formulation: str = "local_clock",
) -> float:
    """Coherence time that yields ``target_D`` at ``theta_ref``."""
    if not 0.0 < target_D < 1.0:
        raise DomainError("target D must be in (0, 1)")
    dt = delta_t(earth, h, theta_ref, formulation)
    return dt / math.sqrt(-2.0 * math.log(target_D))


@dataclass(frozen=True)
class EventFormalismParams:
    coherence_time: float
    altitude: float = 500e3
    formulation: str = "local_clock"
    earth: EarthModel = EarthModel()

    def __post_init__(self) -> None:
        if self.coherence_time <= 0 or self.altitude <= 0:
            raise DomainError("coherence time and altitude must be positive")
        if self.formulation not in FORMULATIONS:
            raise DomainError(f"formulation must be one of {FORMULATIONS}")

    def D(self, theta: float) -> float:
        return decorrelation_D(delta_t(self.earth, self.altitude, theta, self.formulation), self.coherence_time)


def angle_sweep(params: EventFormalismParams, thetas) -> list[tuple[float, float, float]]:
    rows = []
    for th in thetas:
        dt = delta_t(params.earth, params.altitude, float(th), params.formulation)
        rows.append((float(th), dt, decorrelation_D(dt, params.coherence_time)))
    return rows


def write_angle_sweep(rows, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_deg", "delta_t_s", "D"])
        for r in rows:
            w.writerow([format(x, ".12g") for x in r])


@dataclass(frozen=True)
class DecoherenceEstimate:
    theta: np.ndarray
    D_epr: np.ndarray
    D_epr_err: np.ndarray
    D_coh: np.ndarray
    D_coh_err: np.ndarray


def _ratio(obs: np.ndarray, expected: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if np.any(expected <= 0):
        raise ZeroDivisionError("expected counts must be positive in every bin")
    d = obs / expected
    # Poisson error on the observed count, expectation treated as exact
    return d, np.sqrt(np.maximum(obs, 1.0)) / expected


def decorrelation_estimators(
    theta,
    c_exp_epr,
    s_epr,
    eta_2: float,
    c_exp_coh,
    s_coh,
    s_3,
    pulse_period: float,
    collection_time,
) -> DecoherenceEstimate:
    """Per-bin D from observed vs standard-theory coincidence counts.

    Standard-theory expectations are ``eta_2 * S_EPR`` for entangled pairs and
    ``S_COH * S_3 * pulse_period / collection_time`` for the coherent
    reference (accidental-style coincidences of independent pulses).
    """
    c_epr = np.asarray(c_exp_epr, dtype=float)
    c_coh = np.asarray(c_exp_coh, dtype=float)
    sqt_epr = eta_2 * np.asarray(s_epr, dtype=float)
    sqt_coh = np.asarray(s_coh, dtype=float) * np.asarray(s_3, dtype=float) * pulse_period / np.asarray(
        collection_time, dtype=float
    )
    d_epr, e_epr = _ratio(c_epr, sqt_epr)
    d_coh, e_coh = _ratio(c_coh, sqt_coh)
    return DecoherenceEstimate(np.asarray(theta, dtype=float), d_epr, e_epr, d_coh, e_coh)


def simulate_channel(
    thetas,
    s_epr_per_bin: float,
    eta_2: float,
    rng: np.random.Generator,
    injected_D: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Satellite singles and ground coincidences per bin with an injected D."""
    thetas = np.asarray(thetas, dtype=float)
    s = rng.poisson(s_epr_per_bin, thetas.size).astype(float)
    c = rng.binomial(s.astype(np.int64), eta_2 * injected_D).astype(float)
    return s, c


def combined_D(est: DecoherenceEstimate) -> tuple[float, float]:
    """Inverse-variance weighted mean of the per-bin entangled-pair estimates."""
    w = 1.0 / est.D_epr_err**2
    return float(np.sum(w * est.D_epr) / np.sum(w)), float(1.0 / math.sqrt(np.sum(w)))
