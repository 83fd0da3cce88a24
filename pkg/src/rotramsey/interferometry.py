"""Delay scans, visibilities, revival times and population spectra."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import units
from .dynamics import PropagationSettings, overlap_threshold
from .ensemble import InitialDistribution, transfer_tensor, _check_trace
from .pulse import PulseSpec
from .rotor import DEFAULT_J_MAX, MolecularParams

DEFAULT_DELAY_START_FS = 300.0
DEFAULT_DELAY_STOP_FS = 4000.0
DEFAULT_DELAY_STEP_FS = 5.0

_UNIFORM_RTOL = 1e-9


def delay_grid(start: float, stop: float, step: float) -> np.ndarray:
    """Uniform grid start, start + step, ... up to and including ``stop`` if on grid."""
    if not step > 0:
        raise ValueError("delay step must be positive")
    if stop < start:
        raise ValueError("delay grid stop precedes start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def default_delay_grid() -> np.ndarray:
    return units.fs_to_au(delay_grid(DEFAULT_DELAY_START_FS, DEFAULT_DELAY_STOP_FS,
                                     DEFAULT_DELAY_STEP_FS))


def _grid_step(delays):
    d = np.asarray(delays, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("delay grid needs at least two points")
    steps = np.diff(d)
    step = steps.mean()
    if not step > 0 or np.max(np.abs(steps - step)) > _UNIFORM_RTOL * max(abs(d).max(), step):
        raise ValueError("delay grid must be strictly increasing and uniform")
    return step


@dataclass
class Interferogram:
    """Final level populations versus pulse delay.

    ``populations[k, j]`` is the population of level j after the sequence with
    delay ``delays[k]`` (atomic units).
    """

    delays: np.ndarray
    populations: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=float)
        self.populations = np.asarray(self.populations, dtype=float)
        if self.populations.shape[0] != self.delays.size:
            raise ValueError("one population row per delay is required")
        if self.delays.size > 1:
            _grid_step(self.delays)

    @property
    def step(self) -> float:
        return _grid_step(self.delays)

    @property
    def j_max(self) -> int:
        return self.populations.shape[1] - 1

    def level(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.j_max:
            raise KeyError(f"level j={j} not in interferogram")
        return self.populations[:, j]

    def to_csv(self, levels: Optional[Sequence[int]] = None) -> str:
        levels = range(self.j_max + 1) if levels is None else levels
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau_fs"] + [f"p_j{j}" for j in levels])
        for t, row in zip(units.au_to_fs(self.delays), self.populations):
            w.writerow([f"{t:.15g}"] + [f"{row[j]:.15g}" for j in levels])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Interferogram":
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        rows = list(csv.reader(lines))
        header = rows[0]
        if header[0] != "tau_fs" or not all(h.startswith("p_j") for h in header[1:]):
            raise ValueError(f"unexpected interferogram header {header}")
        js = [int(h[3:]) for h in header[1:]]
        data = np.array(rows[1:], dtype=float)
        pops = np.zeros((data.shape[0], max(js) + 1))
        pops[:, js] = data[:, 1:]
        return cls(units.fs_to_au(data[:, 0]), pops)


@dataclass
class SpectrumResult:
    """One-sided population spectra.

    ``frequencies`` are angular frequencies, i.e. energies in hartree since
    hbar = 1; bin spacing is 2 pi / (N * step).
    """

    frequencies: np.ndarray
    amplitudes: dict

    @property
    def resolution(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def peaks(self, j: int) -> np.ndarray:
        """Bin indices of local maxima of S_j, including a maximum at zero frequency."""
        s = self.amplitudes[j]
        idx = [0] if s.size > 1 and s[0] > s[1] else []
        inner = np.flatnonzero((s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:])) + 1
        idx.extend(inner.tolist())
        if s.size > 1 and s[-1] > s[-2]:
            idx.append(s.size - 1)
        return np.asarray(idx, dtype=int)

    def has_peak_near(self, j: int, energy: float, bins: float = 1.0) -> bool:
        pk = self.frequencies[self.peaks(j)]
        return bool(np.any(np.abs(pk - energy) <= bins * self.resolution + 1e-12 * abs(energy)))

    def to_csv(self, b: float) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        levels = sorted(self.amplitudes)
        w.writerow(["energy_in_B_units"] + [f"S_j{j}" for j in levels])
        for k, e in enumerate(self.frequencies):
            w.writerow([f"{e / b:.15g}"] + [f"{self.amplitudes[j][k]:.15g}" for j in levels])
        return buf.getvalue()


def scan_interferogram(dist: InitialDistribution, params: MolecularParams,
                       p1: PulseSpec, p2: PulseSpec, delays=None, *,
                       j_max: int = DEFAULT_J_MAX,
                       settings: PropagationSettings = PropagationSettings(),
                       allow_overlap: bool = False, full_m: bool = False,
                       workers: int = 1) -> Interferogram:
    """Ensemble-averaged final populations over a uniform delay grid."""
    delays = default_delay_grid() if delays is None else np.asarray(delays, dtype=float)
    _grid_step(delays)
    threshold = overlap_threshold(p1, p2, settings)
    if not allow_overlap and delays[0] < threshold * (1 - 1e-12):
        raise ValueError(
            f"delay grid starts at {units.au_to_fs(delays[0]):g} fs, below the pulse overlap "
            f"threshold {units.au_to_fs(threshold):g} fs (pass allow_overlap=True)")
    t = transfer_tensor(params, p1, p2, delays, j_ini_max=dist.j_ini_max, j_max=j_max,
                        settings=settings, full_m=full_m, workers=workers)
    pops = t @ dist.array
    _check_trace(pops)
    meta = {
        "distribution": dist.label,
        "pulse1_I0_Wcm2": p1.i0_wcm2,
        "pulse1_tau_fs": p1.tau_fs,
        "pulse2_I0_Wcm2": p2.i0_wcm2,
        "pulse2_tau_fs": p2.tau_fs,
        "b_cm": units.hartree_to_cm1(params.b),
        "dalpha_a03": params.dalpha,
        "j_max": j_max,
    }
    return Interferogram(delays, pops, meta)


def visibility(ig: Interferogram, j: int, window: Optional[tuple] = None) -> float:
    """(max - min) / (max + min) of the level-j population inside ``window``."""
    f = ig.level(j)
    if window is not None:
        lo, hi = window
        mask = (ig.delays >= lo) & (ig.delays <= hi)
        f = f[mask]
    if f.size == 0:
        raise ValueError("visibility window contains no delays")
    top, bottom = float(f.max()), float(f.min())
    if top + bottom == 0:
        return 0.0
    return (top - bottom) / (top + bottom)


def spectrum(ig: Interferogram, j=None) -> SpectrumResult:
    """S_j = sqrt(|DFT[f_j]| / N) with a rectangular window and no detrending.

    ``j`` may be one level, a sequence of levels, or None for all levels.
    """
    step = ig.step
    levels = range(ig.j_max + 1) if j is None else ([j] if np.isscalar(j) else list(j))
    n = ig.delays.size
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n, d=step)
    amps = {int(k): np.sqrt(np.abs(np.fft.rfft(ig.level(int(k)))) / n) for k in levels}
    return SpectrumResult(freqs, amps)


def revival_time(params: MolecularParams) -> float:
    return math.pi / params.b


def estimate_period(ig: Interferogram, j: int, min_period: float, max_period: float) -> float:
    """Delay shift in [min_period, max_period] that best maps f_j onto itself.

    Minimises the RMS difference f_j(tau + s) - f_j(tau) over grid shifts;
    resolution is one grid step.
    """
    f = ig.level(j)
    step = ig.step
    k_lo = max(1, int(math.ceil(min_period / step - 1e-9)))
    k_hi = min(f.size - 2, int(math.floor(max_period / step + 1e-9)))
    if k_hi < k_lo:
        raise ValueError("period search range does not fit in the delay grid")
    shifts = np.arange(k_lo, k_hi + 1)
    rms = np.array([np.sqrt(np.mean((f[k:] - f[:-k]) ** 2)) for k in shifts])
    return float(shifts[np.argmin(rms)] * step)
