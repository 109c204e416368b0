from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from skylink.errors import DomainError
from skylink.gravity import (
    C_LIGHT,
    EarthModel,
    EventFormalismParams,
    adaptive_simpson,
    angle_sweep,
    calibrate_coherence_time,
    combined_D,
    decorrelation_D,
    decorrelation_estimators,
    delta_t,
    simulate_channel,
    write_angle_sweep,
    zenith_closed_form,
)

EARTH = EarthModel()
H = 500e3


def _quad_delta_t(h, theta, formulation):
    re, M = EARTH.radius, EARTH.mass_length
    cot2 = 0.0 if theta == 90 else 1.0 / math.tan(math.radians(theta)) ** 2
    off = M / (re + h) if formulation == "local_clock" else 0.0
    val, _ = quad(lambda r: (M / r - off) * math.sqrt(1 + 2 * M / r + re * re * cot2 / (r * r)), re, re + h, epsabs=0, epsrel=1e-13)
    return val / C_LIGHT


def test_mass_length():
    assert EARTH.mass_length == pytest.approx(0.004435028039117671, rel=1e-12)


@pytest.mark.parametrize("formulation,expected", [("general", 1.12e-12), ("local_clock", 41.2e-15)])
def test_zenith_against_closed_form(formulation, expected):
    dt = delta_t(EARTH, H, 90.0, formulation)
    assert dt == pytest.approx(zenith_closed_form(EARTH, H, formulation), rel=1e-8)
    assert dt == pytest.approx(expected, rel=0.01)


@pytest.mark.parametrize("theta", [15.0, 40.0, 50.0, 60.0, 90.0])
@pytest.mark.parametrize("formulation", ["general", "local_clock"])
def test_simpson_against_scipy_quad(theta, formulation):
    assert delta_t(EARTH, H, theta, formulation) == pytest.approx(_quad_delta_t(H, theta, formulation), rel=1e-9)


def test_adaptive_simpson_polynomial():
    assert adaptive_simpson(lambda x: x**3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-14)


@given(st.floats(5.0, 89.0), st.floats(0.1, 1.0))
def test_delta_t_decreases_with_altitude_angle(theta, step):
    assert delta_t(EARTH, H, theta + step) < delta_t(EARTH, H, theta)


@given(st.floats(1e3, 2e6), st.floats(10.0, 90.0))
def test_delta_t_positive(h, theta):
    assert delta_t(EARTH, h, theta, "local_clock") > 0
    assert delta_t(EARTH, h, theta, "general") > delta_t(EARTH, h, theta, "local_clock")


def test_domain_errors():
    with pytest.raises(DomainError):
        delta_t(EARTH, H, 0.0)
    with pytest.raises(DomainError):
        delta_t(EARTH, H, 45.0, "newtonian")
    assert delta_t(EARTH, 0.0, 45.0) == 0.0
    with pytest.raises(DomainError):
        calibrate_coherence_time(EARTH, H, 50.0, 1.0)


def test_calibration_hits_target():
    d_t = calibrate_coherence_time(EARTH, H, 50.0, 0.97)
    assert EventFormalismParams(d_t).D(50.0) == pytest.approx(0.97, rel=1e-12)
    rows = angle_sweep(EventFormalismParams(d_t), [40.0, 50.0, 60.0])
    assert [r[2] for r in rows] == sorted(r[2] for r in rows)


def test_decorrelation_limits():
    assert decorrelation_D(0.0, 1e-12) == 1.0
    assert decorrelation_D(1e-12, 1e-12) == pytest.approx(math.exp(-0.5))


def test_injection_recovery():
    rng = np.random.default_rng(4)
    thetas = np.arange(40.0, 61.0, 2.0)
    s, c = simulate_channel(thetas, 50_000, 0.3, rng, injected_D=0.9)
    coh = np.full(thetas.size, 1e4)
    # coherent reference: 1e4 * 1e4 * 1e-6 / 1e-2 = 1e4 expected coincidences per bin
    est = decorrelation_estimators(thetas, c, s, 0.3, coh, coh, coh, 1e-6, np.full(thetas.size, 1e-2))
    d, err = combined_D(est)
    assert abs(d - 0.9) < 3 * err
    assert np.allclose(est.D_coh, 1.0)


def test_angle_sweep_csv(tmp_path):
    rows = angle_sweep(EventFormalismParams(1e-13), [40.0, 50.0])
    write_angle_sweep(rows, tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().splitlines()[0] == "theta_deg,delta_t_s,D"
