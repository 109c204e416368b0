from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import dblquad, quad

from skylink.errors import DomainError
from skylink.link import (
    AtmosphereModel,
    BeamParams,
    LinkBudget,
    OpticalChain,
    PointingModel,
    TurbulenceModel,
    aperture_collection,
    atmospheric_transmittance,
    beam_radius_at,
    fiber_detections,
    fiber_vs_freespace,
    freespace_curve,
    from_db,
    geometric_loss_approx,
    link_loss,
    pointing_efficiency,
    table_budget,
    to_db,
    years_per_sifted_bit,
)


def test_db_round_trip():
    assert to_db(from_db(35.0)) == pytest.approx(-35.0)
    assert from_db(-35.0) == from_db(35.0)


def test_beam_radius_matches_gaussian_optics():
    beam = BeamParams.from_divergence(850e-9, 10e-6)
    z = 1.0e6
    zr = math.pi * beam.waist**2 / 850e-9
    assert beam_radius_at(beam, z) == pytest.approx(beam.waist * math.hypot(1.0, z / zr), rel=1e-12)
    # far field tends to divergence * range
    assert beam_radius_at(beam, z) == pytest.approx(10.0, rel=1e-3)


def test_turbulence_broadening_factor():
    beam = BeamParams.from_divergence(850e-9, 10e-6)
    turb = TurbulenceModel(rytov_variance=1.0, fresnel_ratio=1.0)
    assert beam_radius_at(beam, 1e6, turb) / beam_radius_at(beam, 1e6) == pytest.approx(math.sqrt(2.33))


def test_from_aperture_fwhm():
    beam = BeamParams.from_aperture(810e-9, 0.3)
    # intensity exp(-2 r^2 / w^2) drops to one half at r = fwhm / 2
    r_half = 0.5 * 0.15
    assert math.exp(-2.0 * r_half**2 / beam.waist**2) == pytest.approx(0.5, rel=1e-12)


def test_aperture_collection_against_radial_integral():
    w, a = 12.0, 0.6
    num, _ = quad(lambda r: math.exp(-2.0 * r * r / (w * w)) * r, 0.0, a)
    den, _ = quad(lambda r: math.exp(-2.0 * r * r / (w * w)) * r, 0.0, np.inf)
    assert aperture_collection(w, a) == pytest.approx(num / den, rel=1e-9)
    assert aperture_collection(w, a) == pytest.approx(0.0049875, rel=1e-4)


def test_pointing_efficiency_against_2d_average():
    w, sigma = 10.0, 1.2
    # average on-axis intensity over a 2D Gaussian offset, one axis at a time (separable)
    g = lambda x: math.exp(-2.0 * x * x / w**2) * math.exp(-0.5 * x * x / sigma**2) / (math.sqrt(2 * math.pi) * sigma)
    one, _ = quad(g, -np.inf, np.inf)
    assert pointing_efficiency(w, sigma) == pytest.approx(one * one, rel=1e-9)
    assert pointing_efficiency(w, PointingModel(1.2e-6), 1e6) == pytest.approx(one * one, rel=1e-9)


def test_pointing_efficiency_small_case_dblquad():
    w, sigma = 1.0, 0.3
    val, _ = dblquad(
        lambda y, x: math.exp(-2 * (x * x + y * y) / w**2) * math.exp(-(x * x + y * y) / (2 * sigma**2)) / (2 * math.pi * sigma**2),
        -5, 5, -5, 5,
    )
    assert pointing_efficiency(w, sigma) == pytest.approx(val, rel=1e-7)


def test_atmosphere_airmass():
    atm = AtmosphereModel({850e-9: 0.7})
    assert atmospheric_transmittance(atm, 90.0, 850e-9) == 0.7
    assert atmospheric_transmittance(atm, 30.0, 850e-9) == pytest.approx(0.49)
    with pytest.raises(DomainError):
        atmospheric_transmittance(atm, 0.0, 850e-9)


@given(st.floats(5.0, 89.0), st.floats(0.5, 1.0))
def test_atmosphere_monotone_in_elevation(el, tz):
    atm = AtmosphereModel({850e-9: tz})
    assert atmospheric_transmittance(atm, el + 1.0, 850e-9) >= atmospheric_transmittance(atm, el, 850e-9)


@given(st.floats(300.0, 2000.0), st.floats(1.0, 400.0))
def test_link_loss_monotone_in_range(z, dz):
    chain = OpticalChain(eta_r=0.5)
    beam = BeamParams.from_divergence(850e-9, 10e-6)
    atm = AtmosphereModel({850e-9: 0.8})
    near = link_loss(chain, beam, TurbulenceModel(0.2, 1.0), PointingModel(1e-6), atm, z, 1.0, 45.0)
    far = link_loss(chain, beam, TurbulenceModel(0.2, 1.0), PointingModel(1e-6), atm, z + dz, 1.0, 45.0)
    assert far.total < near.total
    assert 0.0 < far.total <= 1.0


def test_budget_terms_multiply():
    b = LinkBudget.from_factors(eta_t=0.5, eta_r=0.4, eta_c=0.5)
    assert b.total == pytest.approx(0.1)
    assert dict(b.items())["eta_c"] == 0.5
    with pytest.raises(DomainError):
        LinkBudget.from_factors(eta_t=1.5)


def test_budget_csv(tmp_path):
    table_budget("one-downlink").to_csv(tmp_path / "b.csv")
    rows = (tmp_path / "b.csv").read_text().splitlines()
    assert rows[0] == "term,efficiency,db"
    assert rows[-1].startswith("total,")


def test_geometric_approx_value():
    assert to_db(geometric_loss_approx(1.2, 15e-6, 1e6)) == pytest.approx(-18.93, abs=0.01)
    assert geometric_loss_approx(10.0, 1e-6, 1.0) == 1.0


def test_fiber_loss_is_linear():
    cmp = fiber_vs_freespace(0.2, freespace_curve(0.025, 1.2, 15e-6), 1200.0)
    assert cmp.fiber_db == pytest.approx(240.0)


def test_fiber_detection_arithmetic():
    century = 100 * 365.25 * 86400.0
    assert fiber_detections(0.2, 1000.0, 1e10, century) == pytest.approx(1e10 * 1e-20 * century)
    assert years_per_sifted_bit(0.2, 1200.0, 1e10) == pytest.approx(1.0 / (0.5e10 * 1e-24) / (365.25 * 86400))
