"""Gaussian intensity envelopes and the fluence relation."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import units

DEFAULT_WINDOW_MULTIPLIER = 3.0
_FOUR_LN2 = 4.0 * math.log(2.0)


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse in atomic units.

    ``tau_i`` is the FWHM of the intensity profile. ``lambda_c`` (carrier
    wavelength, nm) is metadata only; the carrier is never simulated.
    """

    i0: float
    tau_i: float
    t_center: float = 0.0
    lambda_c: Optional[float] = None

    def __post_init__(self):
        if self.i0 < 0:
            raise ValueError(f"peak intensity must be non-negative, got {self.i0}")
        if not self.tau_i > 0:
            raise ValueError(f"pulse duration must be positive, got {self.tau_i}")

    @classmethod
    def from_lab(cls, i0_wcm2: float, tau_fs: float, t_center_fs: float = 0.0,
                 lambda_nm: Optional[float] = 800.0) -> "PulseSpec":
        return cls(units.wcm2_to_au(i0_wcm2), units.fs_to_au(tau_fs),
                   units.fs_to_au(t_center_fs), lambda_nm)

    @property
    def i0_wcm2(self) -> float:
        return units.au_to_wcm2(self.i0)

    @property
    def tau_fs(self) -> float:
        return units.au_to_fs(self.tau_i)

    def scaled(self, factor: float) -> "PulseSpec":
        return replace(self, i0=self.i0 * factor)

    def centered_at(self, t: float) -> "PulseSpec":
        return replace(self, t_center=t)


def intensity_at(p: PulseSpec, t):
    return p.i0 * np.exp(-_FOUR_LN2 * (np.asarray(t) - p.t_center) ** 2 / p.tau_i ** 2)


def fluence(p: PulseSpec) -> float:
    """2/(eps0 c) sqrt(pi/(4 ln 2)) I0 tau_I, in atomic units."""
    return 2.0 / (units.EPS0_AU * units.C_AU) * math.sqrt(math.pi / _FOUR_LN2) * p.i0 * p.tau_i


def window_half_width(p: PulseSpec, multiplier: float = DEFAULT_WINDOW_MULTIPLIER,
                      threshold: Optional[float] = None) -> float:
    """Half-width of the support window.

    With ``threshold`` given, the half-width is the smallest one outside of
    which I(t) < threshold * I0; otherwise it is ``multiplier * tau_i``.
    """
    if threshold is not None:
        if not 0 < threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
        return 0.5 * p.tau_i * math.sqrt(math.log2(1.0 / threshold))
    if not multiplier > 0:
        raise ValueError(f"window multiplier must be positive, got {multiplier}")
    return multiplier * p.tau_i


def support_window(p: PulseSpec, multiplier: float = DEFAULT_WINDOW_MULTIPLIER,
                   threshold: Optional[float] = None) -> tuple[float, float]:
    w = window_half_width(p, multiplier, threshold)
    return p.t_center - w, p.t_center + w
