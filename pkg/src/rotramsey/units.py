"""Physical constants and unit conversions.

Everything inside the package runs in atomic units (hbar = m_e = e = a0 = 1,
so epsilon_0 = 1/(4 pi) and c = 1/alpha). The helpers here convert the
laboratory units used for inputs and reports (cm^-1, fs, ps, W/cm^2, a0^3,
cm^3, K) to and from that system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as _sc

HARTREE_J = _sc.physical_constants["Hartree energy"][0]
BOHR_M = _sc.physical_constants["Bohr radius"][0]
AU_TIME_S = _sc.physical_constants["atomic unit of time"][0]
C_AU = 1.0 / _sc.fine_structure
EPS0_AU = 1.0 / (4.0 * math.pi)
K_B_AU = _sc.k / HARTREE_J

# Intensity unit consistent with eps0 = 1/(4 pi) and c = 137.036:
# E_h / (t_au * a0^2). Note: this is not the often-quoted 3.51e16 W/cm^2,
# which is (eps0 c / 2) E_au^2.
AU_INTENSITY_WCM2 = HARTREE_J / (AU_TIME_S * (BOHR_M * 100.0) ** 2)
CM1_PER_HARTREE = HARTREE_J / (_sc.h * _sc.c * 100.0)
FS_PER_AU = AU_TIME_S * 1e15
A03_CM3 = (BOHR_M * 100.0) ** 3

ENERGY_UNITS = ("cm-1", "hartree")
TIME_UNITS = ("fs", "ps", "au")
INTENSITY_UNITS = ("W/cm2", "au")
POLARIZABILITY_UNITS = ("a03", "cm3")

# factor that takes a value in `unit` to canonical atomic units
_TO_CANONICAL = {
    "cm-1": 1.0 / CM1_PER_HARTREE,
    "hartree": 1.0,
    "fs": 1.0 / FS_PER_AU,
    "ps": 1000.0 / FS_PER_AU,
    "au": 1.0,
    "W/cm2": 1.0 / AU_INTENSITY_WCM2,
    "a03": 1.0,
    "cm3": 1.0 / A03_CM3,
}
_NON_NEGATIVE = {"fs", "ps", "au", "W/cm2"}


@dataclass(frozen=True)
class Quantity:
    """A real value tagged with one of the supported units.

    Time and intensity quantities must be non-negative. ``"au"`` is shared
    between time and intensity since both are canonical.
    """

    value: float
    unit: str

    def __post_init__(self):
        if self.unit not in _TO_CANONICAL:
            raise ValueError(f"unknown unit tag {self.unit!r}")
        if self.unit in _NON_NEGATIVE and self.value < 0:
            raise ValueError(f"{self.unit} quantity must be non-negative, got {self.value}")

    def to_canonical(self) -> float:
        return self.value * _TO_CANONICAL[self.unit]

    @classmethod
    def from_canonical(cls, value: float, unit: str) -> "Quantity":
        if unit not in _TO_CANONICAL:
            raise ValueError(f"unknown unit tag {unit!r}")
        return cls(value / _TO_CANONICAL[unit], unit)


def to_canonical(value: float, unit: str) -> float:
    return Quantity(value, unit).to_canonical()


def from_canonical(value: float, unit: str) -> float:
    return Quantity.from_canonical(value, unit).value


def cm1_to_hartree(x):
    return x / CM1_PER_HARTREE


def hartree_to_cm1(x):
    return x * CM1_PER_HARTREE


def fs_to_au(t):
    return t / FS_PER_AU


def au_to_fs(t):
    return t * FS_PER_AU


def wcm2_to_au(i):
    return i / AU_INTENSITY_WCM2


def au_to_wcm2(i):
    return i * AU_INTENSITY_WCM2


def kelvin_to_hartree(temperature):
    return temperature * K_B_AU


def wavenumber_to_angular_frequency(b: float) -> float:
    """Angular frequency 2 pi c b, in rad/fs, of a wavenumber b in cm^-1."""
    if b < 0:
        raise ValueError(f"wavenumber must be non-negative, got {b}")
    return 2.0 * math.pi * _sc.c * 100.0 * b * 1e-15


def interaction_strength(i0: float, dalpha: float) -> float:
    """Peak angular coupling energy I0 / (2 eps0 c) * dalpha.

    Parameters
    ----------
    i0 : float
        Peak intensity in atomic units.
    dalpha : float
        Polarizability (anisotropy) in a0^3.

    Returns
    -------
    float
        Coupling energy in hartree.
    """
    if i0 < 0:
        raise ValueError(f"intensity must be non-negative, got {i0}")
    return i0 / (2.0 * EPS0_AU * C_AU) * dalpha


def polarizability_to_canonical(q: Quantity) -> float:
    """Polarizability volume in a0^3 (cm^3 inputs converted, a0^3 passed through)."""
    if q.unit not in POLARIZABILITY_UNITS:
        raise ValueError(f"not a polarizability unit: {q.unit!r}")
    return q.to_canonical()
