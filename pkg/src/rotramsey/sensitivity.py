"""Polarizability-anisotropy scans with Monte-Carlo error bands.

Noise model per sample: each initial level weight a_j gets a relative
perturbation (clamped at 0, renormalized), and the measured population of
the target level gets a relative perturbation (clamped to [0, 1]). Bands are
mean +- k sample standard deviations.

Populations are linear in the a_j, so the per-level transfer tensor is
computed once per dalpha and every sample is a reweighting of it.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import units
from .dynamics import ConvergenceError, PropagationSettings
from .ensemble import InitialDistribution, transfer_tensor
from .interferometry import Interferogram, _grid_step, default_delay_grid
from .pulse import PulseSpec
from .rotor import DEFAULT_J_MAX, MolecularParams

NOISE_MODELS = ("gaussian", "uniform")
DEFAULT_I0_FIRST_WCM2 = 0.55e13


@dataclass(frozen=True)
class SensitivityConfig:
    """Inputs of a dalpha scan. Uncertainties are relative (0.02 = 2 %)."""

    dalpha_values: tuple
    intensity_ratio: float = 1.0
    init_uncertainty: float = 0.0
    meas_uncertainty: float = 0.0
    n_samples: int = 1
    rng_seed: int = 0
    target_j: int = 0
    window: Optional[tuple] = None
    noise: str = "gaussian"
    band_k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "dalpha_values", tuple(float(x) for x in self.dalpha_values))
        if not self.dalpha_values:
            raise ValueError("dalpha_values must not be empty")
        if self.init_uncertainty < 0 or self.meas_uncertainty < 0:
            raise ValueError("uncertainties must be non-negative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.intensity_ratio < 0:
            raise ValueError("intensity_ratio must be non-negative")
        if self.noise not in NOISE_MODELS:
            raise ValueError(f"noise must be one of {NOISE_MODELS}")
        if self.band_k < 0:
            raise ValueError("band_k must be non-negative")
        if self.target_j < 0:
            raise ValueError("target_j must be non-negative")


@dataclass
class SensitivityReport:
    """Per-dalpha mean curves and error bands of the target-level population."""

    delays: np.ndarray
    mean: dict
    lo: dict
    hi: dict
    config: Optional[SensitivityConfig] = None
    noiseless: dict = field(default_factory=dict)

    def _key(self, dalpha):
        for k in self.mean:
            if abs(k - dalpha) <= 1e-9 * max(1.0, abs(k)):
                return k
        raise KeyError(f"dalpha {dalpha} not in report")

    def band(self, dalpha):
        k = self._key(dalpha)
        return self.mean[k], self.lo[k], self.hi[k]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau_fs", "dalpha_au", "mean", "lo", "hi"])
        taus = units.au_to_fs(self.delays)
        for da in self.mean:
            for i, t in enumerate(taus):
                w.writerow([f"{t:.15g}", f"{da:.15g}", f"{self.mean[da][i]:.15g}",
                            f"{self.lo[da][i]:.15g}", f"{self.hi[da][i]:.15g}"])
        return buf.getvalue()


def _second_pulse(p1: PulseSpec, cfg: SensitivityConfig, p2: Optional[PulseSpec]):
    template = p1 if p2 is None else p2
    return PulseSpec(cfg.intensity_ratio * p1.i0, template.tau_i, template.t_center,
                     template.lambda_c)


def _delays(cfg, delays):
    d = default_delay_grid() if delays is None else np.asarray(delays, dtype=float)
    if cfg.window is not None:
        lo, hi = cfg.window
        d = d[(d >= lo - 1e-9) & (d <= hi + 1e-9)]
    _grid_step(d)
    return d


def _tensors(cfg, params, p1, p2, dist, delays, j_max, settings, workers):
    out = {}
    for da in cfg.dalpha_values:
        try:
            out[da] = transfer_tensor(params.with_dalpha(da), p1, p2, delays,
                                      j_ini_max=dist.j_ini_max, j_max=j_max,
                                      settings=settings, workers=workers)
        except ConvergenceError as exc:
            raise ConvergenceError(f"dalpha={da}: {exc}") from exc
    return out


def scan_dalpha(cfg: SensitivityConfig, params: MolecularParams, p1: PulseSpec,
                dist: InitialDistribution, delays=None, *, p2: Optional[PulseSpec] = None,
                j_max: int = DEFAULT_J_MAX,
                settings: PropagationSettings = PropagationSettings(),
                workers: int = 1) -> dict:
    """One noiseless interferogram per dalpha; pulse 2 has intensity ratio * I0(pulse 1)."""
    delays = _delays(cfg, delays)
    p2 = _second_pulse(p1, cfg, p2)
    tensors = _tensors(cfg, params, p1, p2, dist, delays, j_max, settings, workers)
    out = {}
    for da, t in tensors.items():
        meta = {"dalpha_a03": da, "intensity_ratio": cfg.intensity_ratio,
                "distribution": dist.label}
        out[da] = Interferogram(delays, t @ dist.array, meta)
    return out


def _noise(rng, size, kind):
    if kind == "gaussian":
        return rng.standard_normal(size)
    # unit variance
    return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size)


def sample_noise(cfg: SensitivityConfig, n_levels: int, n_delays: int):
    """Standardized noise draws, one stream per sample index.

    Returns (init, meas) arrays of shape (n_samples, n_levels) and
    (n_samples, n_delays). Sample i depends only on (rng_seed, i).
    """
    init = np.empty((cfg.n_samples, n_levels))
    meas = np.empty((cfg.n_samples, n_delays))
    for i in range(cfg.n_samples):
        rng = np.random.default_rng([cfg.rng_seed, i])
        init[i] = _noise(rng, n_levels, cfg.noise)
        meas[i] = _noise(rng, n_delays, cfg.noise)
    return init, meas


def measured_samples(level_curves: np.ndarray, weights: np.ndarray, cfg: SensitivityConfig,
                     noise=None) -> np.ndarray:
    """Noisy measured populations, shape (n_samples, n_delays).

    ``level_curves[k, j]`` is the target-level population at delay k for a
    pure level-j start (m-averaged).
    """
    n_delays, n_levels = level_curves.shape
    init, meas = noise if noise is not None else sample_noise(cfg, n_levels, n_delays)
    a = np.clip(weights[None, :] * (1.0 + cfg.init_uncertainty * init), 0.0, None)
    total = a.sum(axis=1, keepdims=True)
    a = np.where(total > 0, a / np.where(total > 0, total, 1.0), weights[None, :])
    rho = a @ level_curves.T
    return np.clip(rho * (1.0 + cfg.meas_uncertainty * meas), 0.0, 1.0)


def monte_carlo_bands(cfg: SensitivityConfig, params: MolecularParams, p1: PulseSpec,
                      dist: InitialDistribution, delays=None, *,
                      p2: Optional[PulseSpec] = None, j_max: int = DEFAULT_J_MAX,
                      settings: PropagationSettings = PropagationSettings(),
                      workers: int = 1) -> SensitivityReport:
    """Mean and +-k sigma bands of the measured target population for every dalpha.

    The same noise draws are used for every dalpha, so curves can be compared
    sample by sample.
    """
    delays = _delays(cfg, delays)
    p2 = _second_pulse(p1, cfg, p2)
    if cfg.target_j > j_max:
        raise ValueError("target_j exceeds j_max")
    tensors = _tensors(cfg, params, p1, p2, dist, delays, j_max, settings, workers)
    weights = dist.array
    noise = sample_noise(cfg, weights.size, delays.size)
    mean, lo, hi, clean = {}, {}, {}, {}
    for da, t in tensors.items():
        curves = t[:, cfg.target_j, :]
        samples = measured_samples(curves, weights, cfg, noise)
        mu = samples.mean(axis=0)
        sd = samples.std(axis=0, ddof=1) if cfg.n_samples > 1 else np.zeros_like(mu)
        if cfg.init_uncertainty == 0 and cfg.meas_uncertainty == 0:
            sd = np.zeros_like(mu)
        mean[da], lo[da], hi[da] = mu, mu - cfg.band_k * sd, mu + cfg.band_k * sd
        clean[da] = curves @ weights
    return SensitivityReport(delays, mean, lo, hi, cfg, clean)


def separability(report: SensitivityReport, da1: float, da2: float,
                 window: Optional[tuple] = None, min_length: Optional[float] = None):
    """Delay intervals where the two error bands are disjoint.

    Returns ``(separable, intervals)``; an interval counts when its first and
    last grid points are at least ``min_length`` apart (default 50 fs).
    """
    m1, lo1, hi1 = report.band(da1)
    m2, lo2, hi2 = report.band(da2)
    min_length = units.fs_to_au(50.0) if min_length is None else min_length
    d = report.delays
    disjoint = (lo1 > hi2) | (lo2 > hi1)
    if window is not None:
        disjoint &= (d >= window[0] - 1e-9) & (d <= window[1] + 1e-9)
    intervals = []
    start = None
    for i, flag in enumerate(np.append(disjoint, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if d[i - 1] - d[start] >= min_length - 1e-9:
                intervals.append((float(d[start]), float(d[i - 1])))
            start = None
    return bool(intervals), intervals


def separability_csv(rows) -> str:
    """rows: iterable of (dalpha_a, dalpha_b, [(start, end), ...]) in atomic units."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dalpha_a", "dalpha_b", "window_start_fs", "window_end_fs"])
    for a, b, intervals in rows:
        for s, e in intervals:
            w.writerow([f"{a:.15g}", f"{b:.15g}", f"{units.au_to_fs(s):.15g}",
                        f"{units.au_to_fs(e):.15g}"])
    return buf.getvalue()


def max_pointwise_separation(curves: Sequence[np.ndarray]) -> float:
    """Largest spread between any two curves at any delay."""
    stack = np.vstack(curves)
    return float(np.max(stack.max(axis=0) - stack.min(axis=0)))
