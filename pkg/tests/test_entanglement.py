from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skylink.entanglement import (
    BELL,
    TSIRELSON,
    TwoQubitState,
    bell_state,
    chsh_S,
    correlation_E,
    fidelity_from_visibilities,
    lhv_chsh,
    local_deterministic_bound,
    qber_from_visibility,
    sample_chsh,
    visibility,
    werner_fidelity,
    werner_from_fidelity,
    werner_state,
)
from skylink.errors import DomainError


def test_bell_states_orthonormal():
    m = np.array([BELL[k] for k in ("phi+", "phi-", "psi+", "psi-")])
    assert np.allclose(m.conj() @ m.T, np.eye(4))


def test_maximal_violation():
    assert chsh_S(bell_state()) == pytest.approx(TSIRELSON, rel=1e-12)


def test_correlation_cosine_law():
    for a, b in [(0.0, 0.3), (0.2, 1.1), (0.7, 0.1)]:
        assert correlation_E(bell_state(), a, b) == pytest.approx(math.cos(2 * (a - b)), abs=1e-12)


def test_local_bound_is_two():
    assert local_deterministic_bound() == 2.0
    assert all(lhv_chsh(s) <= 2.0 for s in [(1, 1, 1, 1), (1, -1, 1, -1), (-1, 1, 1, 1)])


@given(st.floats(0.0, 1.0))
def test_werner_state_is_valid(p):
    rho = werner_state(p).rho
    assert np.linalg.eigvalsh(rho).min() >= -1e-12
    assert np.trace(rho).real == pytest.approx(1.0)
    assert chsh_S(werner_state(p)) == pytest.approx(TSIRELSON * p, abs=1e-12)


@given(st.floats(0.25, 1.0))
def test_werner_fidelity_inverse(f):
    assert werner_fidelity(werner_from_fidelity(f)) == pytest.approx(f)
    assert werner_state(werner_from_fidelity(f)).fidelity(BELL["phi+"]) == pytest.approx(f)


def test_werner_threshold_for_violation():
    assert chsh_S(werner_state(1 / math.sqrt(2) + 1e-6)) > 2.0
    assert chsh_S(werner_state(1 / math.sqrt(2) - 1e-6)) < 2.0


def test_invalid_states_rejected():
    with pytest.raises(DomainError):
        TwoQubitState(np.eye(4))
    with pytest.raises(DomainError):
        TwoQubitState(np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(DomainError):
        werner_state(1.2)


def test_visibility_estimators():
    w = werner_state(0.8)
    vz, vx = visibility(w, "Z"), visibility(w, "X")
    assert vz == pytest.approx(0.8) and vx == pytest.approx(0.8)
    assert fidelity_from_visibilities(vz, vx) == pytest.approx(werner_fidelity(0.8))
    assert fidelity_from_visibilities(vz, vx, "bound") <= werner_fidelity(0.8)
    assert qber_from_visibility(0.91) == pytest.approx(0.045)


def test_sampled_chsh_converges():
    est = sample_chsh(werner_state(0.9), 400_000, np.random.default_rng(0))
    assert est.S == pytest.approx(TSIRELSON * 0.9, abs=4 * est.stderr)
    assert sum(est.counts) == 400_000


def test_accidentals_dilute_correlations():
    rng = np.random.default_rng(1)
    est = sample_chsh(bell_state(), 400_000, rng, accidental_fraction=0.5)
    assert est.S == pytest.approx(TSIRELSON * 0.5, abs=4 * est.stderr)
