"""Closed-form scalar relations for a single emitter in an optical resonator.

All rates are angular frequencies in rad/s.  Use ``mhz`` / ``to_mhz`` at the
I/O boundary where values are quoted as 2*pi x MHz.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import constants as sc

TWO_PI = 2 * np.pi


def mhz(x: float) -> float:
    """2*pi x MHz -> rad/s."""
    return TWO_PI * 1e6 * x


def to_mhz(w: float) -> float:
    return w / (TWO_PI * 1e6)


@dataclass(frozen=True)
class PhysicalCavity:
    wavelength: float
    length: float
    R1: float
    R2: float
    waist: float
    mode_volume: float
    dipole_moment: float
    mode_function: float = 1.0

    def __post_init__(self):
        for name in ("wavelength", "length", "waist", "mode_volume", "dipole_moment"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("R1", "R2"):
            r = getattr(self, name)
            if not 0 < r < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if not 0 <= self.mode_function <= 1:
            raise ValueError("mode_function must lie in [0, 1]")

    @property
    def omega(self) -> float:
        return TWO_PI * sc.c / self.wavelength


@dataclass(frozen=True)
class RateSet:
    g: float
    kappa_l: float
    kappa_r: float = 0.0
    kappa_loss: float = 0.0
    gamma: float = 0.0
    delta_ac: float = 0.0
    delta_u: float = 0.0
    delta_c: float = 0.0
    delta_a: float = 0.0
    omega_l: float = 0.0

    def __post_init__(self):
        vals = asdict(self)
        if not all(np.isfinite(v) for v in vals.values()):
            raise ValueError("rates must be finite")
        if self.g < 0 or self.gamma < 0:
            raise ValueError("g and gamma must be nonnegative")
        if min(self.kappa_l, self.kappa_r, self.kappa_loss) < 0:
            raise ValueError("cavity decay rates must be nonnegative")
        if not self.kappa > 0:
            raise ValueError("total cavity decay kappa must be positive")

    @property
    def kappa(self) -> float:
        return self.kappa_l + self.kappa_r + self.kappa_loss

    @property
    def kappa_out(self) -> float:
        return self.kappa_l + self.kappa_r

    @property
    def cooperativity(self) -> float:
        return cooperativity(self.g, self.kappa, self.gamma)

    def with_(self, **kw) -> "RateSet":
        return replace(self, **kw)

    @classmethod
    def from_mhz(cls, **kw) -> "RateSet":
        return cls(**{k: mhz(v) for k, v in kw.items()})

    def to_mhz_dict(self) -> dict:
        return {k: to_mhz(v) for k, v in asdict(self).items()}


def finesse(R1: float, R2: float) -> float:
    if not (0 < R1 < 1 and 0 < R2 < 1):
        raise ValueError("reflectivities must lie in (0, 1)")
    rr = R1 * R2
    return np.pi * rr ** 0.25 / (1 - np.sqrt(rr))


def kappa_from_geometry(length: float, F: float) -> float:
    if length <= 0 or F <= 0:
        raise ValueError("length and finesse must be positive")
    return np.pi * sc.c / (2 * length * F)


def coupling_strength(cav: PhysicalCavity, omega: float | None = None) -> float:
    w = cav.omega if omega is None else omega
    return cav.mode_function * np.sqrt(cav.dipole_moment ** 2 * w / (2 * sc.epsilon_0 * sc.hbar * cav.mode_volume))


def radiative_gamma(dipole_moment: float, omega: float, solid_angle: float = 0.0) -> float:
    """Dipole (amplitude) decay rate from the radiative formula, with optional solid-angle correction.

    ``solid_angle`` is the angle zeta subtended by the resonator mode; the
    returned rate is reduced by the factor (1 - zeta/4pi).
    """
    Gamma = dipole_moment ** 2 * omega ** 3 / (3 * np.pi * sc.epsilon_0 * sc.hbar * sc.c ** 3)
    return 0.5 * Gamma * (1 - solid_angle / (4 * np.pi))


def cooperativity(g: float, kappa: float, gamma: float, n_atoms: int = 1) -> float:
    if kappa <= 0 or gamma <= 0:
        raise ValueError("kappa and gamma must be positive")
    return n_atoms * g ** 2 / (2 * kappa * gamma)


def critical_photon_number(g: float, gamma: float) -> float:
    if g <= 0:
        raise ValueError("critical photon number undefined for g = 0")
    return gamma ** 2 / (2 * g ** 2)


def free_space_margin(wavelength: float, F: float, waist: float) -> float:
    """Ratio of the finesse-enhanced absorption cross-section to the beam area; >>1 means deterministic."""
    if min(wavelength, F, waist) <= 0:
        raise ValueError("inputs must be positive")
    sigma = 3 * wavelength ** 2 / (2 * np.pi)
    return sigma * (F / np.pi) / (np.pi * waist ** 2 / 4)


def purcell_rate(g: float, kappa: float, delta_ac: float = 0.0) -> float:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return g ** 2 * kappa / (kappa ** 2 + delta_ac ** 2)


def emission_fraction(kappa_out: float, kappa: float, C: float) -> float:
    if not 0 <= kappa_out <= kappa or C < 0:
        raise ValueError("need 0 <= kappa_out <= kappa and C >= 0")
    if np.isinf(C):
        return kappa_out / kappa
    return (kappa_out / kappa) * (2 * C / (1 + 2 * C))


# Strong-coupling system with (g, kappa, gamma) = 2pi x (7, 2.5, 3) MHz.
# Single-sided variant: almost all cavity decay through the input mirror.
REFLECTION_RATES = RateSet.from_mhz(g=7.0, kappa_l=2.3, kappa_r=0.0, kappa_loss=0.2, gamma=3.0)
# Symmetric lossless variant for transmission spectra.
SYMMETRIC_RATES = RateSet.from_mhz(g=7.0, kappa_l=1.25, kappa_r=1.25, kappa_loss=0.0, gamma=3.0)
