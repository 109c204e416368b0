"""Photon sources, detectors, timing and coincidence statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf
from scipy.stats import poisson

from .errors import DomainError

RADIATION_DCR_INCREMENT = 219.0  # cps/day, unshielded silicon APD in orbit
MITIGATED_DCR_INCREMENT = 1.0  # cps/day upper bound after shielding + cooling


@dataclass(frozen=True)
class WcpSource:
    rep_rate: float = 100e6
    mu_signal: float = 0.8
    mu_decoy: float = 0.1
    mu_vacuum: float = 0.0
    p_signal: float = 0.5
    p_decoy: float = 0.25
    p_vacuum: float = 0.25
    basis_bias: float = 0.5
    bob_basis_bias: float | None = None

    def __post_init__(self) -> None:
        if not (self.mu_signal > self.mu_decoy > self.mu_vacuum == 0.0):
            raise DomainError("intensities must satisfy mu_signal > mu_decoy > mu_vacuum = 0")
        probs = (self.p_signal, self.p_decoy, self.p_vacuum)
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
            raise DomainError("state probabilities must form a simplex")
        if not 0.0 < self.basis_bias < 1.0:
            raise DomainError("basis_bias must be in (0, 1)")

    @property
    def intensities(self) -> tuple[float, float, float]:
        return (self.mu_signal, self.mu_decoy, self.mu_vacuum)

    @property
    def probabilities(self) -> tuple[float, float, float]:
        return (self.p_signal, self.p_decoy, self.p_vacuum)

    @property
    def bob_bias(self) -> float:
        return self.basis_bias if self.bob_basis_bias is None else self.bob_basis_bias

    @property
    def sift_probability(self) -> float:
        a, b = self.basis_bias, self.bob_bias
        return a * b + (1 - a) * (1 - b)

    @property
    def mean_photon_number(self) -> float:
        return float(np.dot(self.intensities, self.probabilities))


@dataclass(frozen=True)
class SpdcSource:
    pair_rate: float = 5.9e6
    fidelity: float = 0.907
    wavelength: float = 810e-9

    def __post_init__(self) -> None:
        if self.pair_rate < 0:
            raise DomainError("pair_rate must be non-negative")
        if not 0.0 <= self.fidelity <= 1.0:
            raise DomainError("fidelity must be in [0, 1]")


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 0.5
    dark_rate: float = 100.0
    radiation_increment: float = RADIATION_DCR_INCREMENT
    dead_time: float = 50e-9

    def __post_init__(self) -> None:
        if not 0.0 < self.efficiency <= 1.0:
            raise DomainError("detector efficiency must be in (0, 1]")
        if self.dark_rate < 0:
            raise DomainError("dark rate must be non-negative")

    def counted(self, rate: float) -> float:
        """Non-paralyzable dead-time correction."""
        return rate / (1.0 + rate * self.dead_time)


@dataclass(frozen=True)
class SyncModel:
    pulse_rate: float = 100e6
    timing_jitter: float = 529e-12
    window: float = 2e-9

    def __post_init__(self) -> None:
        if self.window <= 0:
            raise DomainError("coincidence window must be positive")
        if self.timing_jitter < 0:
            raise DomainError("timing jitter must be non-negative")


@dataclass(frozen=True)
class CountRecord:
    singles_a: float
    singles_b: float
    coincidences: float
    accidentals: float

    @property
    def snr(self) -> float:
        return self.coincidences / self.accidentals if self.accidentals > 0 else math.inf


@dataclass(frozen=True)
class PhotonNumberDistribution:
    mu: float
    pmf: np.ndarray = field(repr=False)

    @property
    def p0(self) -> float:
        return float(self.pmf[0])

    @property
    def p1(self) -> float:
        return float(self.pmf[1])

    @property
    def p_multi(self) -> float:
        """P(n >= 2), computed without cancellation."""
        return float(poisson.sf(1, self.mu)) if self.mu > 0 else 0.0

    def __call__(self, n: int) -> float:
        return float(poisson.pmf(n, self.mu)) if self.mu > 0 else float(n == 0)


def poisson_photon_stats(mu: float, n_max: int = 20) -> PhotonNumberDistribution:
    if mu < 0:
        raise DomainError("mean photon number must be non-negative")
    n = np.arange(n_max + 1)
    pmf = poisson.pmf(n, mu) if mu > 0 else (n == 0).astype(float)
    return PhotonNumberDistribution(mu, pmf)


def window_efficiency(sync: SyncModel) -> float:
    """Fraction of Gaussian-jittered signal falling inside ``+-window/2``."""
    if sync.timing_jitter == 0:
        return 1.0
    return float(erf(sync.window / (2.0 * math.sqrt(2.0) * sync.timing_jitter)))


def dark_rate_after(det: DetectorModel, days: float, mitigated: bool = False) -> float:
    if days < 0:
        raise DomainError("days must be non-negative")
    inc = MITIGATED_DCR_INCREMENT if mitigated else det.radiation_increment
    return det.dark_rate + days * inc


def coincidence_rates(
    src: SpdcSource,
    eta_1: float,
    eta_2: float,
    det_a: DetectorModel,
    det_b: DetectorModel,
    sync: SyncModel,
    background_a: float = 0.0,
    background_b: float = 0.0,
) -> CountRecord:
    """Analytic two-station rates (counts/s).

    ``eta_1`` and ``eta_2`` are end-to-end link efficiencies including the
    detectors, so detector efficiency is not applied again here; the detector
    models contribute only dark counts.
    """
    for e in (eta_1, eta_2):
        if not 0.0 < e <= 1.0:
            raise DomainError("link efficiencies must be in (0, 1]")
    if src.pair_rate == 0:
        return CountRecord(0.0, 0.0, 0.0, 0.0)
    sa = src.pair_rate * eta_1 + background_a + det_a.dark_rate
    sb = src.pair_rate * eta_2 + background_b + det_b.dark_rate
    coinc = src.pair_rate * eta_1 * eta_2 * window_efficiency(sync)
    acc = sa * sb * sync.window
    return CountRecord(sa, sb, coinc, acc)


def calibrate_background(
    src: SpdcSource,
    total_loss_db: float,
    target_snr: float,
    sync: SyncModel,
    dark_rate: float = 0.0,
) -> float:
    """Per-station background (cps) that yields ``target_snr`` for an evenly split loss."""
    eta = 10.0 ** (-abs(total_loss_db) / 20.0)
    coinc = src.pair_rate * eta * eta * window_efficiency(sync)
    singles = math.sqrt(coinc / target_snr / sync.window)
    bg = singles - src.pair_rate * eta - dark_rate
    if bg < 0:
        raise DomainError("target SNR unreachable even without background")
    return bg


def sample_coincidences(
    src: SpdcSource,
    eta_1: float,
    eta_2: float,
    det_a: DetectorModel,
    det_b: DetectorModel,
    sync: SyncModel,
    background_a: float,
    background_b: float,
    seconds: float,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Poisson-sampled (true, accidental) coincidence counts over ``seconds``."""
    rec = coincidence_rates(src, eta_1, eta_2, det_a, det_b, sync, background_a, background_b)
    return int(rng.poisson(rec.coincidences * seconds)), int(rng.poisson(rec.accidentals * seconds))


def simulate_pair_clicks(
    src: SpdcSource,
    eta_1: float,
    eta_2: float,
    sync: SyncModel,
    n_trials: int,
    rng: np.random.Generator,
) -> int:
    """Per-pair Monte Carlo: count pairs where both photons are detected inside the window."""
    a = rng.random(n_trials) < eta_1
    b = rng.random(n_trials) < eta_2
    jitter = rng.normal(0.0, sync.timing_jitter, n_trials) if sync.timing_jitter > 0 else np.zeros(n_trials)
    inside = np.abs(jitter) <= sync.window / 2.0
    return int(np.count_nonzero(a & b & inside))
