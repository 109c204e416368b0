"""Decoy-state BB84 and BBM92 transcripts, sifting and decoy statistics.

Polarisation encoding: basis Z carries H -> 0, V -> 1; basis X carries
-45 deg -> 0, +45 deg -> 1.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, EmptySiftError
from ..photonics import DetectorModel, SyncModel, WcpSource, window_efficiency

Z, X = 0, 1
BASIS_NAMES = ("Z", "X")
_POLARISATION = {(Z, 0): "H", (Z, 1): "V", (X, 0): "-45", (X, 1): "+45"}
_FROM_POLARISATION = {v: k for k, v in _POLARISATION.items()}

BLOCK = 1 << 20


@dataclass(frozen=True)
class BasisBit:
    basis: int
    bit: int

    def __post_init__(self) -> None:
        if self.basis not in (Z, X) or self.bit not in (0, 1):
            raise DomainError("basis must be Z/X and bit 0/1")

    @property
    def polarisation(self) -> str:
        return _POLARISATION[(self.basis, self.bit)]

    @classmethod
    def from_polarisation(cls, label: str) -> "BasisBit":
        return cls(*_FROM_POLARISATION[label])


@dataclass
class Transcript:
    """Per-pulse record.  ``intensity`` indexes the source's (signal, decoy, vacuum)."""

    intensity: np.ndarray
    alice_basis: np.ndarray
    alice_bit: np.ndarray
    detected: np.ndarray
    bob_basis: np.ndarray
    bob_bit: np.ndarray
    intensities: tuple[float, ...] = (0.8, 0.1, 0.0)
    probabilities: tuple[float, ...] = (0.5, 0.25, 0.25)

    def __len__(self) -> int:
        return int(self.intensity.size)

    @classmethod
    def concatenate(cls, parts: list["Transcript"]) -> "Transcript":
        first = parts[0]
        cat = {
            name: np.concatenate([getattr(p, name) for p in parts])
            for name in ("intensity", "alice_basis", "alice_bit", "detected", "bob_basis", "bob_bit")
        }
        return cls(**cat, intensities=first.intensities, probabilities=first.probabilities)


@dataclass
class DecoyStats:
    """Sifted counts per intensity (rows) and basis (columns Z, X)."""

    intensities: tuple[float, ...]
    probabilities: tuple[float, ...]
    sent: np.ndarray
    detected: np.ndarray
    errors: np.ndarray

    def __post_init__(self) -> None:
        self.sent = np.asarray(self.sent, dtype=float)
        self.detected = np.asarray(self.detected, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        if np.any(self.detected > self.sent) or np.any(self.errors > self.detected):
            raise DomainError("counts must satisfy errors <= detected <= sent")

    def gain(self, k: int, basis: int | None = None) -> float:
        if basis is None:
            s, d = self.sent[k].sum(), self.detected[k].sum()
        else:
            s, d = self.sent[k, basis], self.detected[k, basis]
        return float(d / s) if s > 0 else 0.0

    def qber(self, k: int | None = None, basis: int | None = None) -> float:
        rows = slice(None) if k is None else k
        cols = slice(None) if basis is None else basis
        d = np.sum(self.detected[rows, cols])
        e = np.sum(self.errors[rows, cols])
        return float(e / d) if d > 0 else 0.0

    @property
    def sifted_bits(self) -> int:
        return int(self.detected.sum())

    def __add__(self, other: "DecoyStats") -> "DecoyStats":
        if tuple(other.intensities) != tuple(self.intensities):
            raise DomainError("cannot merge statistics for different intensity sets")
        return DecoyStats(
            self.intensities,
            self.probabilities,
            self.sent + other.sent,
            self.detected + other.detected,
            self.errors + other.errors,
        )

    def scaled_errors(self, factor: float) -> "DecoyStats":
        """Copy with every error count multiplied by ``factor`` (capped at detections)."""
        errs = np.minimum(np.round(self.errors * factor), self.detected)
        return DecoyStats(self.intensities, self.probabilities, self.sent.copy(), self.detected.copy(), errs)


@dataclass
class SiftResult:
    sifted_bits: int
    qber: float
    stats: DecoyStats
    alice_key: np.ndarray = field(repr=False)
    bob_key: np.ndarray = field(repr=False)
    key_intensity: np.ndarray = field(repr=False)
    key_basis: np.ndarray = field(repr=False)


def click_probabilities(
    source: WcpSource,
    eta: float,
    det: DetectorModel,
    sync: SyncModel,
    background_cps: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Signal click probability per intensity and noise click probability per detector."""
    eta_eff = eta * det.efficiency * window_efficiency(sync)
    mu = np.asarray(source.intensities)
    p_signal = -np.expm1(-mu * eta_eff)
    p_noise = min(1.0, (det.dark_rate + background_cps) * sync.window)
    return p_signal, p_noise


def _bb84_block(
    source: WcpSource,
    p_signal: np.ndarray,
    p_noise: float,
    misalignment: float,
    n: int,
    rng: np.random.Generator,
    eve: bool,
) -> Transcript:
    intensity = rng.choice(3, size=n, p=np.asarray(source.probabilities))
    a_basis = (rng.random(n) >= source.basis_bias).astype(np.int8)
    a_bit = rng.integers(0, 2, n, dtype=np.int8)
    b_basis = (rng.random(n) >= source.bob_bias).astype(np.int8)
    signal = rng.random(n) < p_signal[intensity]
    if eve:
        e_basis = rng.integers(0, 2, n, dtype=np.int8)
        e_bit = np.where(e_basis == a_basis, a_bit, rng.integers(0, 2, n, dtype=np.int8))
        src_basis, src_bit = e_basis, e_bit
    else:
        src_basis, src_bit = a_basis, a_bit
    flip = rng.random(n) < misalignment
    coin = rng.integers(0, 2, n, dtype=np.int8)
    value = np.where(src_basis == b_basis, src_bit ^ flip, coin)
    d0 = (signal & (value == 0)) | (rng.random(n) < p_noise)
    d1 = (signal & (value == 1)) | (rng.random(n) < p_noise)
    detected = d0 | d1
    # double clicks get a random bit
    tie = rng.integers(0, 2, n, dtype=np.int8)
    b_bit = np.where(d0 & d1, tie, d1.astype(np.int8)).astype(np.int8)
    return Transcript(
        intensity.astype(np.int8),
        a_basis,
        a_bit,
        detected,
        b_basis,
        np.where(detected, b_bit, 0).astype(np.int8),
        source.intensities,
        source.probabilities,
    )


def bb84_round(
    source: WcpSource,
    link,
    det: DetectorModel,
    sync: SyncModel,
    n_pulses: int,
    seed: int = 0,
    misalignment: float = 0.01,
    background_cps: float = 0.0,
    eve: bool = False,
    workers: int = 1,
) -> Transcript:
    """Per-pulse decoy-state BB84 simulation.

    ``link`` is a LinkBudget or a bare channel efficiency.  Pulses are
    generated in fixed blocks with seeds derived from ``seed`` and the block
    index, so the transcript is identical for any ``workers``.
    """
    if n_pulses < 1:
        raise DomainError("n_pulses must be >= 1")
    eta = getattr(link, "total", link)
    p_signal, p_noise = click_probabilities(source, float(eta), det, sync, background_cps)
    sizes = [BLOCK] * (n_pulses // BLOCK)
    if n_pulses % BLOCK:
        sizes.append(n_pulses % BLOCK)

    def run(i: int) -> Transcript:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        return _bb84_block(source, p_signal, p_noise, misalignment, sizes[i], rng, eve)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    return Transcript.concatenate(parts) if len(parts) > 1 else parts[0]


def bbm92_transcript(
    n_coincidences: int,
    error_rate: float,
    seed: int = 0,
    basis_bias: float = 0.5,
) -> Transcript:
    """Coincidence-level BBM92 record: independent basis choices, correlated outcomes."""
    if n_coincidences < 1:
        raise DomainError("need at least one coincidence")
    rng = np.random.default_rng(seed)
    n = n_coincidences
    a_basis = (rng.random(n) >= basis_bias).astype(np.int8)
    b_basis = (rng.random(n) >= basis_bias).astype(np.int8)
    a_bit = rng.integers(0, 2, n, dtype=np.int8)
    flip = (rng.random(n) < error_rate).astype(np.int8)
    b_bit = np.where(a_basis == b_basis, a_bit ^ flip, rng.integers(0, 2, n, dtype=np.int8)).astype(np.int8)
    return Transcript(
        np.zeros(n, dtype=np.int8),
        a_basis,
        a_bit,
        np.ones(n, dtype=bool),
        b_basis,
        b_bit,
        (1.0,),
        (1.0,),
    )


def sift_and_qber(transcript: Transcript) -> SiftResult:
    """Keep matched-basis detections; QBER is errors over sifted bits."""
    if len(transcript) == 0:
        raise EmptySiftError("empty transcript")
    t = transcript
    matched = t.alice_basis == t.bob_basis
    keep = matched & t.detected
    n_sifted = int(np.count_nonzero(keep))
    if n_sifted == 0:
        raise EmptySiftError("no matched-basis detections")
    err = keep & (t.alice_bit != t.bob_bit)
    k = len(t.intensities)
    sent = np.zeros((k, 2))
    detected = np.zeros((k, 2))
    errors = np.zeros((k, 2))
    for b in (Z, X):
        mb = matched & (t.alice_basis == b)
        sent[:, b] = np.bincount(t.intensity[mb], minlength=k)
        detected[:, b] = np.bincount(t.intensity[keep & (t.alice_basis == b)], minlength=k)
        errors[:, b] = np.bincount(t.intensity[err & (t.alice_basis == b)], minlength=k)
    stats = DecoyStats(t.intensities, t.probabilities, sent, detected, errors)
    return SiftResult(
        n_sifted,
        float(np.count_nonzero(err) / n_sifted),
        stats,
        t.alice_bit[keep].copy(),
        t.bob_bit[keep].copy(),
        t.intensity[keep].copy(),
        t.alice_basis[keep].copy(),
    )


def expected_error_probability(
    p_signal: np.ndarray, p_noise: float, misalignment: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-intensity (QBER, click probability) of sifted pulses under the per-pulse click rules."""
    q0 = 1.0 - p_noise
    # signal lands on the correct detector with prob (1-e)
    p_right = p_signal * (1 - misalignment)
    p_wrong = p_signal * misalignment
    p_none = 1.0 - p_signal
    # enumerate signal on correct detector, on wrong detector, or absent
    both = p_right * p_noise + p_wrong * p_noise + p_none * p_noise * p_noise
    only_c = p_right * q0 + p_none * p_noise * q0
    only_w = p_wrong * q0 + p_none * p_noise * q0
    click = only_c + only_w + both
    with np.errstate(invalid="ignore", divide="ignore"):
        e = np.where(click > 0, (only_w + 0.5 * both) / click, 0.5)
    return e, click


def sample_decoy_stats(
    source: WcpSource,
    eta: float,
    det: DetectorModel,
    sync: SyncModel,
    n_pulses: int,
    rng: np.random.Generator,
    misalignment: float = 0.01,
    background_cps: float = 0.0,
) -> DecoyStats:
    """Aggregated binomial sampling of sifted counts, for pulse numbers too large to enumerate."""
    p_signal, p_noise = click_probabilities(source, eta, det, sync, background_cps)
    e, click = expected_error_probability(p_signal, p_noise, misalignment)
    a, b = source.basis_bias, source.bob_bias
    match = np.array([a * b, (1 - a) * (1 - b)])
    probs = np.asarray(source.probabilities)
    sent = rng.multinomial(n_pulses, np.append(np.outer(probs, match).ravel(), 1 - match.sum()))[:-1]
    sent = sent.reshape(3, 2).astype(np.int64)
    detected = rng.binomial(sent, click[:, None])
    errors = rng.binomial(detected, e[:, None])
    return DecoyStats(source.intensities, source.probabilities, sent, detected, errors)


def expected_decoy_stats(
    source: WcpSource,
    eta: float,
    det: DetectorModel,
    sync: SyncModel,
    n_pulses: float,
    misalignment: float = 0.01,
    background_cps: float = 0.0,
) -> DecoyStats:
    """Noise-free expectation of :func:`sample_decoy_stats`."""
    p_signal, p_noise = click_probabilities(source, eta, det, sync, background_cps)
    e, click = expected_error_probability(p_signal, p_noise, misalignment)
    a, b = source.basis_bias, source.bob_bias
    match = np.array([a * b, (1 - a) * (1 - b)])
    sent = n_pulses * np.outer(np.asarray(source.probabilities), match)
    detected = sent * click[:, None]
    errors = detected * e[:, None]
    return DecoyStats(source.intensities, source.probabilities, sent, detected, errors)


def matched_basis_fraction(basis_bias_a: float, basis_bias_b: float) -> float:
    return basis_bias_a * basis_bias_b + (1 - basis_bias_a) * (1 - basis_bias_b)


def intercept_resend_qber() -> float:
    """Matched-basis error rate an intercept-resend attacker imposes on single photons."""
    return 0.25
