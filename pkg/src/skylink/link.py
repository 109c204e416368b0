"""Free-space optical channel attenuation.

The one-way efficiency is the product of transmitter, receiver, diffraction,
turbulence, pointing and atmospheric terms.  Turbulence broadening enters the
spot radius, so ``eta_at`` is reported as the extra collection loss caused by
the broadened spot relative to the vacuum spot.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from scipy.optimize import brentq

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0


def to_db(eta: float) -> float:
    """Efficiency to dB (negative for loss)."""
    return 10.0 * math.log10(eta)


def from_db(db: float) -> float:
    """dB to efficiency; accepts either sign convention for loss (``-35`` or ``35``)."""
    return 10.0 ** (-abs(db) / 10.0)


@dataclass(frozen=True)
class BeamParams:
    wavelength: float
    waist: float

    def __post_init__(self) -> None:
        if self.wavelength <= 0 or self.waist <= 0:
            raise DomainError("wavelength and waist must be positive")

    @property
    def rayleigh_range(self) -> float:
        return math.pi * self.waist**2 / self.wavelength

    @property
    def divergence(self) -> float:
        """Far-field half-angle divergence in radians."""
        return self.wavelength / (math.pi * self.waist)

    @classmethod
    def from_divergence(cls, wavelength: float, divergence: float) -> "BeamParams":
        return cls(wavelength, wavelength / (math.pi * divergence))

    @classmethod
    def from_aperture(cls, wavelength: float, aperture_diameter: float) -> "BeamParams":
        """Gaussian whose FWHM equals half the transmit aperture diameter."""
        fwhm = 0.5 * aperture_diameter
        # intensity FWHM of exp(-2 r^2 / w^2) is w * sqrt(2 ln 2)
        return cls(wavelength, fwhm / math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class TurbulenceModel:
    rytov_variance: float = 0.0
    fresnel_ratio: float = 0.0

    def __post_init__(self) -> None:
        if self.rytov_variance < 0 or self.fresnel_ratio < 0:
            raise DomainError("turbulence parameters must be non-negative")

    @property
    def broadening(self) -> float:
        """Multiplicative factor applied to the vacuum spot radius."""
        return math.sqrt(1.0 + 1.33 * self.rytov_variance * self.fresnel_ratio ** (5.0 / 6.0))


def hufnagel_valley_cn2(height: float, wind_rms: float = 21.0, cn2_ground: float = 1.7e-14) -> float:
    """HV 5/7 refractive-index structure parameter (m^-2/3) at ``height`` metres."""
    h = height
    return (
        0.00594 * (wind_rms / 27.0) ** 2 * (1e-5 * h) ** 10 * math.exp(-h / 1000.0)
        + 2.7e-16 * math.exp(-h / 1500.0)
        + cn2_ground * math.exp(-h / 100.0)
    )


def rytov_from_profile(
    wavelength: float,
    zenith_deg: float,
    ground_height: float = 0.0,
    top: float = 20_000.0,
    uplink: bool = False,
    steps: int = 2000,
) -> float:
    """Plane-wave Rytov variance through an HV 5/7 atmosphere.

    Convenience only; link budgets take ``rytov_variance`` directly.
    """
    from scipy.integrate import quad

    k = 2.0 * math.pi / wavelength
    sec = 1.0 / math.cos(math.radians(zenith_deg))

    def integrand(h: float) -> float:
        path = (h - ground_height) if uplink else (top - h)
        return hufnagel_valley_cn2(h) * max(path, 0.0) ** (5.0 / 6.0)

    val, _ = quad(integrand, ground_height, top, limit=steps)
    return 2.25 * k ** (7.0 / 6.0) * sec ** (11.0 / 6.0) * val


@dataclass(frozen=True)
class PointingModel:
    """Pointing jitter.  ``jitter_angle`` (rad) is scaled by range to a receiver-plane sigma."""

    jitter_angle: float = 0.0

    def __post_init__(self) -> None:
        if self.jitter_angle < 0:
            raise DomainError("pointing jitter must be non-negative")

    def sigma_at(self, z: float) -> float:
        return self.jitter_angle * z


@dataclass(frozen=True)
class AtmosphereModel:
    zenith_transmittance: dict[float, float] = field(default_factory=lambda: {850e-9: 0.5})
    visibility: str = "clear-night"

    def __post_init__(self) -> None:
        for lam, tz in self.zenith_transmittance.items():
            if not 0.0 < tz <= 1.0:
                raise DomainError(f"zenith transmittance {tz} at {lam} m outside (0, 1]")

    def zenith(self, wavelength: float) -> float:
        bands = self.zenith_transmittance
        if wavelength in bands:
            return bands[wavelength]
        nearest = min(bands, key=lambda lam: abs(lam - wavelength))
        return bands[nearest]


@dataclass(frozen=True)
class OpticalChain:
    eta_t: float = 1.0
    eta_r: float = 1.0
    eta_c: float = 1.0
    eta_d: float = 1.0
    eta_m: float = 1.0

    def __post_init__(self) -> None:
        for name in ("eta_t", "eta_r", "eta_c", "eta_d", "eta_m"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DomainError(f"{name}={v} outside (0, 1]")

    @property
    def receive(self) -> float:
        """Receiver-side optics, coupling and detector combined."""
        return self.eta_r * self.eta_c * self.eta_d


TERMS = ("eta_t", "eta_r", "eta_d", "eta_at", "eta_p", "eta_as")


@dataclass(frozen=True)
class LinkBudget:
    eta_t: float
    eta_r: float
    eta_d: float
    eta_at: float
    eta_p: float
    eta_as: float
    extra: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        for name, v in self.items():
            if not 0.0 < v <= 1.0:
                raise DomainError(f"budget term {name}={v} outside (0, 1]")

    def items(self) -> list[tuple[str, float]]:
        return [(n, getattr(self, n)) for n in TERMS] + list(self.extra)

    @property
    def total(self) -> float:
        out = 1.0
        for _, v in self.items():
            out *= v
        return out

    @property
    def total_db(self) -> float:
        return to_db(self.total)

    def db_terms(self) -> dict[str, float]:
        return {n: to_db(v) for n, v in self.items()}

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term", "efficiency", "db"])
            for n, v in self.items():
                w.writerow([n, format(v, ".12g"), format(to_db(v), ".12g")])
            w.writerow(["total", format(self.total, ".12g"), format(self.total_db, ".12g")])

    @classmethod
    def from_factors(cls, **factors: float) -> "LinkBudget":
        """Budget from a flat list of efficiency factors (design-point budgets).

        Known names fill the standard slots; anything else goes to ``extra``.
        Missing standard slots default to 1.
        """
        std = {n: factors.pop(n, 1.0) for n in TERMS}
        return cls(**std, extra=tuple(sorted(factors.items())))


def beam_radius_at(beam: BeamParams, z: float, turbulence: TurbulenceModel | None = None) -> float:
    """Spot radius (m) at distance ``z`` (m), optionally turbulence-broadened."""
    if z < 0:
        raise DomainError("distance must be non-negative")
    w = beam.waist * math.sqrt(1.0 + (z / beam.rayleigh_range) ** 2)
    if turbulence is not None:
        w *= turbulence.broadening
    return w


def aperture_collection(spot_radius: float, aperture_radius: float) -> float:
    """Fraction of a Gaussian spot captured by a circular aperture."""
    if spot_radius <= 0 or aperture_radius < 0:
        raise DomainError("spot radius must be positive and aperture non-negative")
    if math.isinf(aperture_radius):
        return 1.0
    return -math.expm1(-2.0 * aperture_radius**2 / spot_radius**2)


def pointing_efficiency(spot_radius: float, pointing: PointingModel | float, z: float | None = None) -> float:
    """Mean mispointing efficiency for Gaussian jitter.

    ``pointing`` is either a receiver-plane sigma in metres, or a
    :class:`PointingModel` combined with the range ``z`` in metres.
    """
    if spot_radius <= 0:
        raise DomainError("spot radius must be positive")
    if isinstance(pointing, PointingModel):
        sigma = pointing.sigma_at(z if z is not None else 0.0)
    else:
        sigma = float(pointing)
    w2 = spot_radius**2
    return w2 / (w2 + 4.0 * sigma**2)


def atmospheric_transmittance(model: AtmosphereModel, elevation: float, wavelength: float) -> float:
    """Plane-parallel airmass scaling of the zenith transmittance."""
    if not 0.0 < elevation <= 90.0:
        raise DomainError(f"elevation {elevation} outside (0, 90]")
    tz = model.zenith(wavelength)
    if elevation == 90.0:
        return tz
    return tz ** (1.0 / math.sin(math.radians(elevation)))


def link_loss(
    chain: OpticalChain,
    beam: BeamParams,
    turbulence: TurbulenceModel | None,
    pointing: PointingModel,
    atmosphere: AtmosphereModel,
    z_km: float,
    aperture: float,
    elevation: float,
) -> LinkBudget:
    """Full budget for range ``z_km`` into a receive aperture of diameter ``aperture`` (m)."""
    z = z_km * 1e3
    r = 0.5 * aperture
    w_vac = beam_radius_at(beam, z)
    w_at = beam_radius_at(beam, z, turbulence)
    eta_d = aperture_collection(w_vac, r)
    eta_at = aperture_collection(w_at, r) / eta_d
    eta_p = pointing_efficiency(w_at, pointing, z)
    eta_as = atmospheric_transmittance(atmosphere, elevation, beam.wavelength)
    return LinkBudget(
        eta_t=chain.eta_t,
        eta_r=chain.receive,
        eta_d=eta_d,
        eta_at=min(1.0, eta_at),
        eta_p=eta_p,
        eta_as=eta_as,
        extra=(("eta_m", chain.eta_m),) if chain.eta_m != 1.0 else (),
    )


def geometric_loss_approx(D: float, divergence: float, Z: float) -> float:
    """Far-field geometric collection ``2 (D / (theta Z))^2``, capped at 1."""
    if D < 0 or divergence <= 0 or Z <= 0:
        raise DomainError("invalid geometry")
    return min(1.0, 2.0 * (D / (divergence * Z)) ** 2)


@dataclass(frozen=True)
class FiberComparison:
    distance_km: float
    fiber_db: float
    freespace_db: float
    crossover_km: float


def fiber_vs_freespace(
    alpha_fiber: float,
    freespace_db_at,
    L: float,
    bracket: tuple[float, float] = (1.0, 1000.0),
) -> FiberComparison:
    """Fiber loss ``alpha * L`` against a free-space loss curve.

    ``freespace_db_at`` maps a distance in km to a positive loss in dB.  The
    crossover is where the two curves meet, located by bisection.
    """
    if alpha_fiber <= 0:
        raise DomainError("fiber attenuation must be positive")

    def diff(x: float) -> float:
        return alpha_fiber * x - freespace_db_at(x)

    lo, hi = bracket
    if diff(lo) * diff(hi) > 0:
        crossover = math.nan
    else:
        crossover = brentq(diff, lo, hi, xtol=1e-9)
    return FiberComparison(L, alpha_fiber * L, freespace_db_at(L), crossover)


def fiber_detections(alpha_fiber: float, L: float, source_rate: float, seconds: float) -> float:
    """Expected detections through ``L`` km of fiber with ideal source and detector."""
    return source_rate * seconds * 10.0 ** (-alpha_fiber * L / 10.0)


SECONDS_PER_YEAR = 365.25 * 86400.0


def years_per_sifted_bit(alpha_fiber: float, L: float, source_rate: float, sift: float = 0.5) -> float:
    rate = source_rate * sift * 10.0 ** (-alpha_fiber * L / 10.0)
    return 1.0 / rate / SECONDS_PER_YEAR


def freespace_curve(fixed_efficiency: float, aperture: float, divergence: float):
    """Loss-vs-distance callable (km -> positive dB) from fixed terms plus far-field geometry."""

    def loss_db(z_km: float) -> float:
        eta = fixed_efficiency * geometric_loss_approx(aperture, divergence, z_km * 1e3)
        return -to_db(eta)

    return loss_db


# design-point budgets at 1000 km (geometry, atmosphere, transmitter, receiver,
# coupling, detector, mispointing)
DESIGN_BUDGETS = {
    "one-downlink": dict(eta_g=0.0128, eta_a=0.5, eta_t=1.0, eta_r=0.4, eta_c=0.5, eta_det=0.5, eta_m=0.5),
    "two-downlink": dict(eta_g=0.000164, eta_a=0.25, eta_t=0.25, eta_r=0.16, eta_c=0.25, eta_det=0.25, eta_m=0.25),
    "one-uplink": dict(eta_g=0.00045, eta_a=0.5, eta_t=0.5, eta_r=0.4, eta_c=0.5, eta_det=0.5, eta_m=0.5),
}


def table_budget(name: str) -> LinkBudget:
    f = dict(DESIGN_BUDGETS[name])
    return LinkBudget(
        eta_t=f.pop("eta_t"),
        eta_r=f.pop("eta_r"),
        eta_d=f.pop("eta_g"),
        eta_at=1.0,
        eta_p=f.pop("eta_m"),
        eta_as=f.pop("eta_a"),
        extra=(("eta_c", f.pop("eta_c")), ("eta_det", f.pop("eta_det"))),
    )
