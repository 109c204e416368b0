"""Quantum teleportation by explicit three-qubit density-matrix evolution.

Qubit order is (input, channel half kept by the sender, channel half at the
receiver).  The channel is nominally ``|phi+>``; outcome-dependent Pauli
corrections restore the input at the receiver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .entanglement import BELL, PAULI_I, PAULI_X, PAULI_Z, TwoQubitState, ket
from .errors import DomainError

BELL_ORDER = ("phi+", "phi-", "psi+", "psi-")
CORRECTIONS = {
    "phi+": ("I", PAULI_I),
    "phi-": ("Z", PAULI_Z),
    "psi+": ("X", PAULI_X),
    "psi-": ("ZX", PAULI_Z @ PAULI_X),
}
# Bell outcomes each BSM flavour can identify
BSM_MODES = {
    "full": frozenset(BELL_ORDER),
    "linear-optics": frozenset({"psi+", "psi-"}),
    "beam-splitter": frozenset({"psi-"}),
}

SIX_STATES = {
    "H": ket(1, 0),
    "V": ket(0, 1),
    "+": ket(1, 1),
    "-": ket(1, -1),
    "R": ket(1, 1j),
    "L": ket(1, -1j),
}
CLASSICAL_LIMIT = 2.0 / 3.0


@dataclass(frozen=True)
class TeleportOutcome:
    bsm_result: str | None
    correction: str | None
    output: np.ndarray | None = field(repr=False)
    fidelity: float | None

    @property
    def success(self) -> bool:
        return self.bsm_result is not None


def _as_density(state: np.ndarray) -> np.ndarray:
    s = np.asarray(state, dtype=complex)
    if s.shape == (2,):
        norm = np.linalg.norm(s)
        if abs(norm - 1.0) > 1e-9:
            raise DomainError("input state must be normalised")
        return np.outer(s, s.conj())
    if s.shape == (2, 2):
        if abs(np.trace(s).real - 1.0) > 1e-9:
            raise DomainError("input density matrix must have unit trace")
        return s
    raise DomainError("input must be a 2-vector or a 2x2 density matrix")


def _projector(name: str) -> np.ndarray:
    b = BELL[name]
    return np.kron(np.outer(b, b.conj()), PAULI_I)


def _receiver_state(rho3: np.ndarray, proj: np.ndarray) -> tuple[float, np.ndarray]:
    post = proj @ rho3 @ proj
    p = float(np.real(np.trace(post)))
    if p <= 0:
        return 0.0, np.eye(2, dtype=complex) / 2
    red = np.einsum("ijkijl->kl", post.reshape(2, 2, 2, 2, 2, 2)) / p
    return p, red


def _state_fidelity(rho_in: np.ndarray, rho_out: np.ndarray) -> float:
    # exact for a pure input; the inputs used here are pure
    return float(np.real(np.trace(rho_in @ rho_out)))


def outcome_distribution(state: np.ndarray, channel: TwoQubitState) -> dict[str, tuple[float, np.ndarray]]:
    """Probability and corrected receiver state for each Bell outcome."""
    rho_in = _as_density(state)
    rho3 = np.kron(rho_in, channel.rho)
    out = {}
    for name in BELL_ORDER:
        p, red = _receiver_state(rho3, _projector(name))
        u = CORRECTIONS[name][1]
        out[name] = (p, u @ red @ u.conj().T)
    return out


def teleport(
    state: np.ndarray,
    channel: TwoQubitState,
    bsm_mode: str = "full",
    rng: np.random.Generator | None = None,
) -> TeleportOutcome:
    """One teleportation event: sample a Bell outcome, correct, report fidelity.

    Outcomes the chosen BSM cannot identify are returned as inconclusive
    (``bsm_result=None``).
    """
    if bsm_mode not in BSM_MODES:
        raise DomainError(f"unknown BSM mode {bsm_mode!r}")
    rng = rng if rng is not None else np.random.default_rng()
    rho_in = _as_density(state)
    dist = outcome_distribution(state, channel)
    probs = np.array([dist[n][0] for n in BELL_ORDER])
    k = int(rng.choice(4, p=probs / probs.sum()))
    name = BELL_ORDER[k]
    if name not in BSM_MODES[bsm_mode]:
        return TeleportOutcome(None, None, None, None)
    out = dist[name][1]
    return TeleportOutcome(name, CORRECTIONS[name][0], out, _state_fidelity(rho_in, out))


def average_fidelity(state: np.ndarray, channel: TwoQubitState, bsm_mode: str = "full") -> float:
    """Outcome-averaged fidelity over the successful BSM results."""
    rho_in = _as_density(state)
    dist = outcome_distribution(state, channel)
    keep = [n for n in BELL_ORDER if n in BSM_MODES[bsm_mode]]
    w = sum(dist[n][0] for n in keep)
    return sum(dist[n][0] * _state_fidelity(rho_in, dist[n][1]) for n in keep) / w


def bsm_success_fraction(bsm_mode: str, n_trials: int, rng: np.random.Generator) -> float:
    """Monte Carlo fraction of events the BSM identifies, for a perfect channel."""
    ch = TwoQubitState.pure(BELL["phi+"])
    states = list(SIX_STATES.values())
    dist = [outcome_distribution(s, ch) for s in states]
    which = rng.integers(0, len(states), n_trials)
    ok = 0
    for i, d in enumerate(dist):
        n = int(np.count_nonzero(which == i))
        probs = np.array([d[b][0] for b in BELL_ORDER])
        counts = rng.multinomial(n, probs / probs.sum())
        ok += sum(int(c) for b, c in zip(BELL_ORDER, counts) if b in BSM_MODES[bsm_mode])
    return ok / n_trials


@dataclass(frozen=True)
class FidelityExperiment:
    per_state: dict[str, tuple[float, float]]
    mean: float
    stderr: float
    events: int
    classical_limit: float = CLASSICAL_LIMIT

    def rows(self) -> list[tuple[str, float, float]]:
        return [(k, f, e) for k, (f, e) in self.per_state.items()]


def teleport_fidelity_experiment(
    channel: TwoQubitState,
    n_events: int,
    seed: int = 0,
    accidental_fraction: float = 0.0,
    bsm_mode: str = "full",
) -> FidelityExperiment:
    """Six mutually unbiased inputs, ``n_events`` detected events in total.

    Each event is a projective test of the corrected receiver qubit against
    the input state; accidental events pass with probability one half.
    Errors are binomial.
    """
    if n_events < 1:
        raise DomainError("n_events must be >= 1")
    if not 0.0 <= accidental_fraction <= 1.0:
        raise DomainError("accidental_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    names = list(SIX_STATES)
    per_n = rng.multinomial(n_events, np.full(len(names), 1.0 / len(names)))
    per_state = {}
    hits_total = 0
    for name, n in zip(names, per_n):
        f_true = average_fidelity(SIX_STATES[name], channel, bsm_mode)
        p_pass = (1 - accidental_fraction) * f_true + 0.5 * accidental_fraction
        hits = int(rng.binomial(int(n), p_pass))
        hits_total += hits
        n = int(n)
        f = hits / n if n else float("nan")
        per_state[name] = (f, math.sqrt(f * (1 - f) / n) if n else float("nan"))
    mean = hits_total / n_events
    return FidelityExperiment(per_state, mean, math.sqrt(mean * (1 - mean) / n_events), n_events)
