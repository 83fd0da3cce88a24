"""Rigid-rotor basis, field-free energies and cos^2(theta) matrix elements.

Basis functions are the normalized angular eigenfunctions |j, m> of a linear
rotor. Within a block of fixed m the basis is ordered by j = |m| .. j_max.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import units

DEFAULT_J_MAX = 20

# MgH+ in its vibrational ground state
MGH_B_CM1 = 6.3685
MGH_DALPHA_A03 = 16.20
MGH_ALPHA_PERP_A03 = 32.40


class TruncationWarning(UserWarning):
    """Population reached the top of the truncated rotational basis."""


@dataclass(frozen=True)
class MolecularParams:
    """Effective-rotor parameters, all in atomic units.

    Attributes
    ----------
    b : float
        Rotational constant (hartree).
    dalpha : float
        Polarizability anisotropy (a0^3). The sign is physical.
    alpha_perp : float
        Perpendicular polarizability (a0^3).
    """

    b: float
    dalpha: float
    alpha_perp: float = 0.0

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"rotational constant must be positive, got {self.b}")
        if self.alpha_perp < 0:
            raise ValueError(f"alpha_perp must be non-negative, got {self.alpha_perp}")

    @classmethod
    def from_lab(cls, b_cm1: float, dalpha_a03: float, alpha_perp_a03: float = 0.0):
        return cls(units.cm1_to_hartree(b_cm1), dalpha_a03, alpha_perp_a03)

    @classmethod
    def mgh_plus(cls, dalpha_a03: float = MGH_DALPHA_A03) -> "MolecularParams":
        return cls.from_lab(MGH_B_CM1, dalpha_a03, MGH_ALPHA_PERP_A03)

    def with_dalpha(self, dalpha: float) -> "MolecularParams":
        return MolecularParams(self.b, dalpha, self.alpha_perp)


@dataclass(frozen=True)
class BasisSpec:
    j_max: int = DEFAULT_J_MAX
    m: int = 0

    def __post_init__(self):
        if self.j_max < abs(self.m):
            raise ValueError(f"j_max={self.j_max} smaller than |m|={abs(self.m)}")

    @property
    def js(self) -> np.ndarray:
        return np.arange(abs(self.m), self.j_max + 1)

    @property
    def size(self) -> int:
        return self.j_max - abs(self.m) + 1

    def index(self, j: int) -> int:
        if not abs(self.m) <= j <= self.j_max:
            raise ValueError(f"j={j} outside block m={self.m}, j_max={self.j_max}")
        return j - abs(self.m)


def rotational_energy(j, params: MolecularParams):
    """E_j = B j (j + 1); accepts scalars or integer arrays."""
    j_arr = np.asarray(j)
    if np.any(j_arr < 0):
        raise ValueError("j must be non-negative")
    e = params.b * j_arr * (j_arr + 1)
    return float(e) if e.ndim == 0 else e


def block_energies(spec: BasisSpec, params: MolecularParams) -> np.ndarray:
    js = spec.js
    return params.b * js * (js + 1.0)


def _cos_coupling(j, m):
    # <j+1, m| cos(theta) |j, m> for normalized functions
    return np.sqrt(((j + 1.0) ** 2 - m * m) / ((2.0 * j + 1.0) * (2.0 * j + 3.0)))


@lru_cache(maxsize=256)
def _cos2_cached(j_max: int, m: int) -> np.ndarray:
    # Square cos(theta) on a basis one level larger than requested, then trim:
    # the trimmed block is then exact (cos^2 only reaches j +- 2).
    js = np.arange(m, j_max + 2)
    c = _cos_coupling(js[:-1], m)
    cos = np.diag(c, 1) + np.diag(c, -1)
    out = (cos @ cos)[: len(js) - 1, : len(js) - 1]
    out.setflags(write=False)
    return out


def cos2_matrix(spec: BasisSpec) -> np.ndarray:
    """Matrix of cos^2(theta) within the fixed-m block.

    Only the j' - j in {0, +-2} bands are nonzero. The returned array is
    read-only and shared between calls.
    """
    return _cos2_cached(spec.j_max, abs(spec.m))


def free_phase_vector(spec: BasisSpec, params: MolecularParams, t: float) -> np.ndarray:
    """Diagonal of exp(-i H0 t) in the block basis."""
    return np.exp(-1j * block_energies(spec, params) * t)


def check_truncation(populations, spec: BasisSpec, threshold: float = 1e-6, context: str = ""):
    """Warn when the top two j levels of a block hold more than `threshold`.

    `populations` may be a vector over the block or a matrix whose columns
    are block vectors.
    """
    p = np.asarray(populations)
    top = p[-2:].sum(axis=0) if spec.size >= 2 else p[-1:]
    worst = float(np.max(top))
    if worst > threshold:
        where = f" ({context})" if context else ""
        warnings.warn(
            f"population {worst:.3g} in top levels of basis j_max={spec.j_max}, m={spec.m}{where}",
            TruncationWarning,
            stacklevel=3,
        )
    return worst
