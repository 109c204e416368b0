"""Two-qubit polarisation states, correlation functions and Bell tests.

Polarisers are described by their angle ``theta`` in the H/V plane; the
projector onto the "+1" outcome is ``|theta><theta|`` with
``|theta> = cos(theta)|H> + sin(theta)|V>``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# angles that maximise S for |phi+>, in radians
CHSH_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)
TSIRELSON = 2.0 * math.sqrt(2.0)


def ket(*amps: complex) -> np.ndarray:
    v = np.asarray(amps, dtype=complex)
    return v / np.linalg.norm(v)


BELL = {
    "phi+": ket(1, 0, 0, 1),
    "phi-": ket(1, 0, 0, -1),
    "psi+": ket(0, 1, 1, 0),
    "psi-": ket(0, 1, -1, 0),
}


@dataclass(frozen=True)
class TwoQubitState:
    rho: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        r = np.asarray(self.rho, dtype=complex)
        if r.shape != (4, 4):
            raise DomainError("two-qubit density matrix must be 4x4")
        if not np.allclose(r, r.conj().T, atol=1e-10):
            raise DomainError("density matrix must be Hermitian")
        if abs(np.trace(r).real - 1.0) > 1e-9:
            raise DomainError("density matrix must have unit trace")
        if np.linalg.eigvalsh(r).min() < -1e-9:
            raise DomainError("density matrix must be positive semidefinite")
        object.__setattr__(self, "rho", r)

    @classmethod
    def pure(cls, psi: np.ndarray) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    def fidelity(self, psi: np.ndarray) -> float:
        return float(np.real(psi.conj() @ self.rho @ psi))

    def expectation(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(self.rho @ op)))


def bell_state(name: str = "phi+") -> TwoQubitState:
    try:
        return TwoQubitState.pure(BELL[name])
    except KeyError:
        raise DomainError(f"unknown Bell state {name!r}") from None


def werner_state(p: float, name: str = "phi+") -> TwoQubitState:
    """``p |bell><bell| + (1 - p) I/4``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("Werner weight must be in [0, 1]")
    return TwoQubitState(p * bell_state(name).rho + (1 - p) * np.eye(4) / 4)


def werner_fidelity(p: float) -> float:
    return (3.0 * p + 1.0) / 4.0


def werner_from_fidelity(f: float) -> float:
    return (4.0 * f - 1.0) / 3.0


def polariser_observable(theta: float) -> np.ndarray:
    """Dichotomic observable +-1 for a linear polariser at ``theta`` (rad)."""
    c, s = math.cos(2 * theta), math.sin(2 * theta)
    return c * PAULI_Z + s * PAULI_X


def correlation_E(state: TwoQubitState, a: float, b: float) -> float:
    """``E(a, b) = <A(a) x B(b)>``."""
    return state.expectation(np.kron(polariser_observable(a), polariser_observable(b)))


def chsh_S(state: TwoQubitState, angles: tuple[float, float, float, float] = CHSH_ANGLES) -> float:
    """``S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|``."""
    a, a2, b, b2 = angles
    return abs(
        correlation_E(state, a, b)
        - correlation_E(state, a, b2)
        + correlation_E(state, a2, b)
        + correlation_E(state, a2, b2)
    )


@dataclass(frozen=True)
class ChshEstimate:
    S: float
    stderr: float
    correlations: tuple[float, float, float, float]
    counts: tuple[int, int, int, int]

    @property
    def violation_sigma(self) -> float:
        return (self.S - 2.0) / self.stderr if self.stderr > 0 else math.inf


def sample_chsh(
    state: TwoQubitState,
    n_trials: int,
    rng: np.random.Generator,
    angles: tuple[float, float, float, float] = CHSH_ANGLES,
    accidental_fraction: float = 0.0,
) -> ChshEstimate:
    """Monte Carlo CHSH run with uniformly random setting pairs.

    A fraction ``accidental_fraction`` of coincidences is uncorrelated noise
    with random outcomes.
    """
    if n_trials < 4:
        raise DomainError("need at least 4 trials")
    a, a2, b, b2 = angles
    settings = [(a, b), (a, b2), (a2, b), (a2, b2)]
    choice = rng.integers(0, 4, n_trials)
    Es, Ns, var = [], [], 0.0
    for k, (x, y) in enumerate(settings):
        n = int(np.count_nonzero(choice == k))
        e_true = correlation_E(state, x, y)
        noise = rng.random(n) < accidental_fraction
        same_p = np.where(noise, 0.5, (1 + e_true) / 2)
        same = rng.random(n) < same_p
        e = (2 * np.count_nonzero(same) - n) / n if n else 0.0
        Es.append(e)
        Ns.append(n)
        var += (1 - e * e) / n if n else math.inf
    S = abs(Es[0] - Es[1] + Es[2] + Es[3])
    return ChshEstimate(S, math.sqrt(var), tuple(Es), tuple(Ns))


def local_deterministic_bound() -> float:
    """Largest S achievable by any deterministic +-1 assignment (the LHV bound)."""
    best = 0
    for A, A2, B, B2 in itertools.product((-1, 1), repeat=4):
        best = max(best, abs(A * B - A * B2 + A2 * B + A2 * B2))
    return float(best)


def lhv_chsh(strategy: tuple[int, int, int, int]) -> float:
    A, A2, B, B2 = strategy
    return float(abs(A * B - A * B2 + A2 * B + A2 * B2))


def visibility(state: TwoQubitState, basis: str) -> float:
    """Correlation visibility in the Z (H/V), X (+-45) or Y (circular) basis."""
    op = {"Z": PAULI_Z, "X": PAULI_X, "Y": PAULI_Y}[basis]
    return state.expectation(np.kron(op, op))


def fidelity_from_visibilities(v_zz: float, v_xx: float, method: str = "werner") -> float:
    """Fidelity with ``|phi+>`` estimated from two visibilities.

    ``"werner"`` assumes the unmeasured circular-basis visibility is the mean
    of the other two, giving ``(1 + 1.5 (v_zz + v_xx)) / 4``.  ``"bound"``
    returns the lower bound ``(v_zz + v_xx) / 2``.
    """
    for v in (v_zz, v_xx):
        if not -1.0 <= v <= 1.0:
            raise DomainError("visibilities must be in [-1, 1]")
    if method == "werner":
        return (1.0 + 1.5 * (v_zz + v_xx)) / 4.0
    if method == "bound":
        return (v_zz + v_xx) / 2.0
    raise DomainError(f"unknown method {method!r}")


def qber_from_visibility(v: float) -> float:
    return (1.0 - v) / 2.0
