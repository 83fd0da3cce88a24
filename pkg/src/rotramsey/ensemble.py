"""Incoherent initial ensembles and their propagated level populations.

A distribution assigns each rotational level j a total population a_j,
shared equally by its 2j + 1 m states. Each populated |j, m> is propagated
on its own and the final populations are summed with weight a_j / (2j + 1).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import units
from .dynamics import (
    ConvergenceError,
    PropagationSettings,
    overlap_threshold,
    pulse_kick,
    sequence_operator,
)
from .pulse import PulseSpec
from .rotor import DEFAULT_J_MAX, BasisSpec, MolecularParams, check_truncation

DEFAULT_J_INI_MAX = 6


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class InitialDistribution:
    """Normalized level populations ``weights[j] = a_j`` for j = 0, 1, ..."""

    weights: tuple
    label: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise DistributionError("weights must be a non-empty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DistributionError("weights must be finite and non-negative")
        total = w.sum()
        if not total > 0:
            raise DistributionError("weights sum to zero")
        nz = np.flatnonzero(w)
        w = w[: nz[-1] + 1] / total
        object.__setattr__(self, "weights", tuple(float(x) for x in w))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.weights)

    @property
    def j_ini_max(self) -> int:
        return len(self.weights) - 1

    def population(self, j: int) -> float:
        return self.weights[j] if 0 <= j < len(self.weights) else 0.0

    def per_state_weight(self, j: int) -> float:
        return self.population(j) / (2 * j + 1)

    def padded(self, n: int) -> np.ndarray:
        """Weights as an array of length ``n`` (zero padded)."""
        if n < len(self.weights):
            raise ValueError(f"distribution reaches j={self.j_ini_max}, cannot pad to {n}")
        out = np.zeros(n)
        out[: len(self.weights)] = self.weights
        return out

    def to_text(self) -> str:
        lines = [f"# {self.label}" if self.label else "# initial distribution", "# j  weight"]
        lines += [f"{j} {a:.15g}" for j, a in enumerate(self.weights)]
        return "\n".join(lines) + "\n"


def pure_ground() -> InitialDistribution:
    return InitialDistribution((1.0,), "pure j=0")


def thermal(temperature: float, params: MolecularParams,
            j_cut: int = DEFAULT_J_INI_MAX) -> InitialDistribution:
    """Boltzmann level populations (2j+1) exp(-E_j / kT) / Z for j <= j_cut."""
    if not temperature > 0:
        raise DistributionError(f"temperature must be positive, got {temperature}")
    if j_cut < 0:
        raise DistributionError("j_cut must be non-negative")
    j = np.arange(j_cut + 1)
    x = params.b * j * (j + 1) / units.kelvin_to_hartree(temperature)
    a = (2 * j + 1) * np.exp(-(x - x[0]))
    return InitialDistribution(tuple(a), f"thermal {temperature:g} K")


def parse_distribution(text: str, j_ini_max: int = DEFAULT_J_INI_MAX,
                       label: str = "file") -> InitialDistribution:
    """Parse ``j weight`` rows; '#' starts a comment line."""
    rows = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DistributionError(f"line {lineno}: expected 'j weight', got {raw!r}")
        try:
            j = int(parts[0])
            a = float(parts[1])
        except ValueError:
            raise DistributionError(f"line {lineno}: cannot parse {raw!r}") from None
        if j < 0:
            raise DistributionError(f"line {lineno}: negative j")
        if not np.isfinite(a) or a < 0:
            raise DistributionError(f"line {lineno}: weight must be finite and non-negative")
        if j > j_ini_max:
            raise DistributionError(f"line {lineno}: j={j} exceeds j_ini_max={j_ini_max}")
        if j in rows:
            raise DistributionError(f"line {lineno}: duplicate j={j}")
        rows[j] = a
    if not rows:
        raise DistributionError("no data rows")
    w = np.zeros(max(rows) + 1)
    for j, a in rows.items():
        w[j] = a
    if not w.sum() > 0:
        raise DistributionError("weights sum to zero")
    return InitialDistribution(tuple(w), label)


def load_distribution(source, j_ini_max: int = DEFAULT_J_INI_MAX) -> InitialDistribution:
    """Read a distribution from a path, an open text file, or literal text."""
    if hasattr(source, "read"):
        return parse_distribution(source.read(), j_ini_max)
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source):
        path = os.fspath(source)
        if not os.path.isfile(path):
            raise FileNotFoundError(f"distribution file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            return parse_distribution(fh.read(), j_ini_max, label=f"file {path}")
    return parse_distribution(source, j_ini_max)


def surrogate_experimental() -> InitialDistribution:
    """Built-in stand-in for a rotationally cooled ensemble with a_0 = 0.38."""
    text = resources.files("rotramsey").joinpath("data/surrogate_experimental.txt").read_text()
    return parse_distribution(text, label="surrogate experimental (a0=0.38)")


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _m_blocks(j_ini_max, full_m):
    if full_m:
        return [(m, 1.0) for m in range(-j_ini_max, j_ini_max + 1)]
    return [(m, 1.0 if m == 0 else 2.0) for m in range(j_ini_max + 1)]


def transfer_tensor(params: MolecularParams, p1: PulseSpec, p2: Optional[PulseSpec] = None,
                    delays: Optional[Sequence[float]] = None, *,
                    j_ini_max: int = DEFAULT_J_INI_MAX, j_max: int = DEFAULT_J_MAX,
                    settings: PropagationSettings = PropagationSettings(),
                    full_m: bool = False, workers: int = 1) -> np.ndarray:
    """m-averaged level-to-level transfer probabilities.

    Returns ``T[k, j', j] = sum_m |<j',m|U_k|j,m>|^2 / (2j+1)`` for each delay
    ``delays[k]``; with only ``p1`` given the leading delay axis is dropped.
    Ensemble populations are then ``T @ a``.
    """
    if j_ini_max > j_max:
        raise ValueError("j_ini_max exceeds j_max")
    single = p2 is None
    if not single and delays is None:
        raise ValueError("delays are required for a two-pulse sequence")
    taus = np.zeros(1) if single else np.asarray(delays, dtype=float).ravel()
    if np.any(taus < 0):
        raise ValueError("delays must be non-negative")
    threshold = None if single else overlap_threshold(p1, p2, settings)

    def block(item):
        m, weight = item
        spec = BasisSpec(j_max, m)
        cols = np.arange(abs(m), j_ini_max + 1) - abs(m)
        try:
            k1 = pulse_kick(spec, params, p1, settings)
            if single:
                amps = k1[None][:, :, cols]
            else:
                k2 = pulse_kick(spec, params, p2, settings)
                d = np.exp(-1j * np.multiply.outer(taus, spec.js * (spec.js + 1.0) * params.b))
                amps = np.einsum("ab,tb,bc->tac", k2, d, k1[:, cols], optimize=True)
                for i in np.flatnonzero(taus < threshold):
                    amps[i] = sequence_operator(spec, params, p1, taus[i], p2, settings)[:, cols]
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"m={m}, initial j={abs(m)}..{j_ini_max}: {exc}") from exc
        pops = np.abs(amps) ** 2
        check_truncation(np.moveaxis(pops, 1, 0).reshape(spec.size, -1), spec,
                         context=f"initial j <= {j_ini_max}")
        return m, weight, pops

    out = np.zeros((taus.size, j_max + 1, j_ini_max + 1))
    for m, weight, pops in _map(block, _m_blocks(j_ini_max, full_m), workers):
        lo = abs(m)
        js = np.arange(lo, j_ini_max + 1)
        out[:, lo:, lo:j_ini_max + 1] += weight * pops / (2 * js + 1)
    return out[0] if single else out


def ensemble_populations(dist: InitialDistribution, params: MolecularParams,
                         p1: PulseSpec, p2: Optional[PulseSpec] = None,
                         delay: Optional[float] = None, *, j_max: int = DEFAULT_J_MAX,
                         settings: PropagationSettings = PropagationSettings(),
                         full_m: bool = False) -> np.ndarray:
    """Final level populations rho_{j'j'} (length j_max + 1) after one or two pulses."""
    if p2 is not None and delay is None:
        raise ValueError("a delay is required with a second pulse")
    delays = None if p2 is None else [delay]
    t = transfer_tensor(params, p1, p2, delays, j_ini_max=dist.j_ini_max, j_max=j_max,
                        settings=settings, full_m=full_m)
    if p2 is not None:
        t = t[0]
    rho = t @ dist.array
    _check_trace(rho)
    return rho


def _check_trace(rho):
    err = np.max(np.abs(np.sum(rho, axis=-1) - 1.0))
    if err > 1e-8:
        raise ConvergenceError(f"trace deviates from 1 by {err:.3g}")


def initial_level_populations(dist: InitialDistribution, j_max: int = DEFAULT_J_MAX):
    return dist.padded(j_max + 1)


def pulse_landscape(dist: InitialDistribution, params: MolecularParams,
                    intensities, durations, *, j_max: int = DEFAULT_J_MAX,
                    settings: PropagationSettings = PropagationSettings(),
                    workers: int = 1) -> np.ndarray:
    """Single-pulse final populations on an intensity x duration grid.

    ``intensities`` and ``durations`` are in atomic units; returns an array
    of shape (len(intensities), len(durations), j_max + 1).
    """
    intensities = np.asarray(intensities, dtype=float)
    durations = np.asarray(durations, dtype=float)
    grid = [(i, k) for i in range(intensities.size) for k in range(durations.size)]

    def point(ik):
        i, k = ik
        p = PulseSpec(intensities[i], durations[k])
        return ensemble_populations(dist, params, p, j_max=j_max, settings=settings)

    pops = _map(point, grid, workers)
    return np.asarray(pops).reshape(intensities.size, durations.size, j_max + 1)


def crossing_intensity(params: MolecularParams, tau_i: float, bracket, *,
                       dist: Optional[InitialDistribution] = None, j_a: int = 0, j_b: int = 2,
                       j_max: int = DEFAULT_J_MAX,
                       settings: PropagationSettings = PropagationSettings(),
                       xtol: float = None) -> float:
    """Peak intensity (atomic units) at which levels j_a and j_b end up equally populated."""
    dist = dist or pure_ground()

    def diff(i0):
        rho = ensemble_populations(dist, params, PulseSpec(i0, tau_i), j_max=j_max,
                                   settings=settings)
        return rho[j_a] - rho[j_b]

    lo, hi = bracket
    xtol = xtol or 1e-6 * hi
    return brentq(diff, lo, hi, xtol=xtol)
