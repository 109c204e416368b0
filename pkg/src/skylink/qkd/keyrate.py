"""Decoy-state single-photon bounds and secure key length.

Bounds follow the vacuum + weak decoy estimator with three intensities
``mu1 > mu2 > mu3 = 0``.  The asymptotic mode uses the expected counts
directly; the finite mode widens every count by a Hoeffding interval and
adds the phase-error sampling penalty and the composable security overhead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, InconsistentStatisticsError
from .bb84 import X, Z, DecoyStats

QBER_ABORT = 0.11  # no positive key above this for one-way BB84 post-processing


def binary_entropy(p: float | np.ndarray) -> float | np.ndarray:
    """Shannon entropy in bits; 0 at the end points."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("probability outside [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    h = np.where((p == 0) | (p == 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


@dataclass(frozen=True)
class DecoyBounds:
    y1_lower: float
    e1_upper: float
    s0_lower: float
    s1_lower: float
    v1_upper: float
    basis: int


@dataclass(frozen=True)
class SecureKeyResult:
    sifted_bits: int
    qber: float
    y1_lower: float
    e1_upper: float
    secure_bits_asymptotic: float
    secure_bits_finite: float
    failure_probability: float
    mode: str = "finite"

    @property
    def secure_bits(self) -> float:
        return self.secure_bits_finite if self.mode == "finite" else self.secure_bits_asymptotic

    @property
    def ratio(self) -> float:
        return self.secure_bits / self.sifted_bits if self.sifted_bits else 0.0


def _taus(stats: DecoyStats, p: np.ndarray) -> tuple[float, float]:
    mu = np.asarray(stats.intensities)
    tau0 = float(np.sum(p * np.exp(-mu)))
    tau1 = float(np.sum(p * np.exp(-mu) * mu))
    return tau0, tau1


def _hoeffding(n_total: float, epsilon: float | None) -> float:
    if epsilon is None:
        return 0.0
    return math.sqrt(n_total / 2.0 * math.log(21.0 / epsilon))


def decoy_bounds(stats: DecoyStats, basis: int = Z, epsilon: float | None = None) -> DecoyBounds:
    """Lower bound on single-photon yield and upper bound on its error rate.

    Three intensities ``mu1 > mu2 > mu3 >= 0`` use the vacuum + weak decoy
    estimator; a (signal, vacuum) pair falls back to bounding every
    multi-photon yield by 1.  ``epsilon=None`` gives the asymptotic estimate;
    otherwise counts are widened by Hoeffding intervals at failure
    probability ``epsilon``.
    """
    mus = tuple(stats.intensities)
    if len(mus) not in (2, 3) or len(set(mus)) != len(mus) or min(mus) != 0.0:
        raise DomainError("decoy bounds need 2 or 3 distinct intensities including vacuum")
    n = stats.detected[:, basis]
    m = stats.errors[:, basis]
    vac = mus.index(0.0)
    if n.sum() - n[vac] <= 0:
        raise InconsistentStatisticsError("no non-vacuum detections in the requested basis")
    sent = stats.sent[:, basis].sum()
    # empirical intensity fractions in this basis
    p = stats.sent[:, basis] / sent
    if np.any(p <= 0):
        raise InconsistentStatisticsError("an intensity was never sent in the requested basis")
    dn = _hoeffding(n.sum(), epsilon)
    dm = _hoeffding(m.sum(), epsilon)

    def widen(counts, delta, k, sign):
        return math.exp(mus[k]) / p[k] * max(counts[k] + sign * delta, 0.0)

    tau0, tau1 = _taus(stats, p)
    if len(mus) == 2:
        sig = 1 - vac
        mu = mus[sig]
        y0 = widen(n, dn, vac, -1)
        s0 = tau0 * y0
        multi = (math.exp(mu) - 1.0 - mu) * sent
        s1 = tau1 * (widen(n, dn, sig, -1) - widen(n, dn, vac, +1) - multi) / mu
        v1_raw = (widen(m, dm, sig, +1) - 0.5 * widen(n, dn, vac, -1)) / mu
        v1 = max(0.0, tau1 * v1_raw)
    else:
        mu1, mu2, mu3 = mus
        if not mu1 > mu2 > mu3 >= 0 or mu1 <= mu2 + mu3:
            raise DomainError("intensities must satisfy mu1 > mu2 + mu3 and mu2 > mu3 >= 0")
        n_minus = [widen(n, dn, k, -1) for k in range(3)]
        n_plus = [widen(n, dn, k, +1) for k in range(3)]
        s0 = max(0.0, tau0 * (mu2 * n_minus[2] - mu3 * n_plus[1]) / (mu2 - mu3))
        denom = mu1 * (mu2 - mu3) - mu2**2 + mu3**2
        s1 = (
            tau1
            * mu1
            * (n_minus[1] - n_plus[2] - (mu2**2 - mu3**2) / mu1**2 * (n_plus[0] - s0 / tau0))
            / denom
        )
        m_plus = [widen(m, dm, k, +1) for k in range(3)]
        m_minus = [widen(m, dm, k, -1) for k in range(3)]
        v1 = max(0.0, tau1 * (m_plus[1] - m_minus[2]) / (mu2 - mu3))
    if s1 <= 0:
        raise InconsistentStatisticsError("decoy statistics give no positive single-photon bound")
    y1 = s1 / (tau1 * sent)
    e1 = min(0.5, v1 / s1)
    return DecoyBounds(float(y1), float(e1), float(s0), float(s1), float(v1), basis)


def _gamma(eps: float, b: float, c: float, d: float) -> float:
    """Finite-sampling correction on the phase error rate."""
    if b <= 0 or b >= 1 or c <= 0 or d <= 0:
        return 0.0
    inner = (c + d) / (c * d * (1 - b) * b) * (21.0 / eps) ** 2
    return math.sqrt((c + d) * (1 - b) * b / (c * d * math.log(2)) * math.log2(inner))


def _overhead(epsilon: float) -> float:
    return 6.0 * math.log2(21.0 / epsilon) + math.log2(2.0 / epsilon)


def secure_key_length(
    stats: DecoyStats,
    f_ec: float = 1.16,
    epsilon: float = 1e-9,
    mode: str = "finite",
    key_bases: tuple[int, ...] = (Z, X),
    leaked_ec: float | None = None,
) -> SecureKeyResult:
    """Extractable key from decoy-state statistics.

    Key is distilled from each basis in ``key_bases``; the phase error of one
    basis is bounded from the single-photon errors seen in the other.
    ``leaked_ec`` overrides the ``f_ec * n * h(E)`` reconciliation estimate.
    """
    if mode not in ("finite", "asymptotic"):
        raise DomainError(f"unknown mode {mode!r}")
    if f_ec < 1.0:
        raise DomainError("f_ec must be >= 1")
    sifted = stats.sifted_bits
    qber = stats.qber()
    if sifted == 0:
        raise InconsistentStatisticsError("no sifted bits")
    if leaked_ec is None:
        leaked_ec = sum(
            f_ec * stats.detected[:, b].sum() * binary_entropy(stats.qber(basis=b)) for b in key_bases
        )
    if qber >= QBER_ABORT:
        return SecureKeyResult(sifted, qber, 0.0, 0.5, 0.0, 0.0, epsilon, mode)

    results = {}
    y1_report = e1_report = None
    for label, eps in (("asymptotic", None), ("finite", epsilon)):
        total = 0.0
        try:
            for b in key_bases:
                other = X if b == Z else Z
                own = decoy_bounds(stats, b, eps)
                cross = decoy_bounds(stats, other, eps)
                phase = cross.e1_upper
                if eps is not None:
                    phase = min(0.5, phase + _gamma(eps, phase, own.s1_lower, cross.s1_lower))
                total += own.s0_lower + own.s1_lower * (1.0 - binary_entropy(phase))
                if label == mode and b == key_bases[0]:
                    y1_report, e1_report = own.y1_lower, phase
        except InconsistentStatisticsError:
            total = 0.0
        total -= leaked_ec
        if eps is not None:
            total -= _overhead(eps)
        results[label] = max(0.0, math.floor(total))
    return SecureKeyResult(
        sifted,
        qber,
        0.0 if y1_report is None else y1_report,
        0.5 if e1_report is None else e1_report,
        results["asymptotic"],
        min(results["finite"], results["asymptotic"]),
        epsilon,
        mode,
    )


def bbm92_key_length(
    sifted_bits: int,
    qber: float,
    f_ec: float = 1.16,
    epsilon: float = 1e-9,
    mode: str = "finite",
) -> SecureKeyResult:
    """Entanglement-based key: every sifted bit is a single-photon event.

    Asymptotically ``n (1 - h(e) - f h(e))``.  The finite version splits the
    sifted bits evenly between the bases and bounds each basis's phase error
    from the other basis's bit errors.
    """
    if sifted_bits < 0 or not 0.0 <= qber <= 0.5:
        raise DomainError("need sifted_bits >= 0 and qber in [0, 0.5]")
    if mode not in ("finite", "asymptotic"):
        raise DomainError(f"unknown mode {mode!r}")
    n = float(sifted_bits)
    if n == 0 or qber >= QBER_ABORT:
        return SecureKeyResult(sifted_bits, qber, 1.0, qber, 0.0, 0.0, epsilon, mode)
    h = binary_entropy(qber)
    asym = n * (1.0 - h - f_ec * h)
    half = n / 2.0
    phase = min(0.5, qber + _gamma(epsilon, qber, half, half))
    fin = n * (1.0 - binary_entropy(phase)) - f_ec * n * h - _overhead(epsilon)
    return SecureKeyResult(
        sifted_bits,
        qber,
        1.0,
        phase if mode == "finite" else qber,
        max(0.0, asym),
        max(0.0, min(math.floor(fin), asym)),
        epsilon,
        mode,
    )
