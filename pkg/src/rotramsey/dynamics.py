"""Time propagation of a fixed-m rotor block under the effective-rotor Hamiltonian

    H(t) = B J^2 - I(t) / (2 eps0 c) * (dalpha cos^2(theta) + alpha_perp)

Pulses are integrated with a fourth-order Magnus step (two Gauss-Legendre
nodes per step, exact matrix exponential of the Hermitian step generator).
Convergence is enforced by step halving.

A pulse centred at t_c acts on field-free motion as a "kick"

    K = exp(+i H0 t_end) U(t_end, t_start) exp(-i H0 t_start)

which depends only on the pulse shape, not on t_c. Sequences and delay scans
are assembled from kicks and diagonal free-evolution phases.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from . import units
from .pulse import PulseSpec, intensity_at, window_half_width
from .rotor import (
    BasisSpec,
    MolecularParams,
    block_energies,
    check_truncation,
    cos2_matrix,
    free_phase_vector,
)

_GAUSS_OFFSET = math.sqrt(3.0) / 6.0
_MAGNUS_COMMUTATOR = math.sqrt(3.0) / 12.0
_CHUNK = 1024


class ConvergenceError(RuntimeError):
    """Step-halving refinement did not reach the requested tolerance."""


class PulseOverlapWarning(UserWarning):
    """Two pulses are too close to be treated separately."""


@dataclass(frozen=True)
class PropagationSettings:
    """Numerical controls for pulse integration (times in atomic units).

    Converged means: halving ``dt`` changes no population by more than
    ``100 * tol``.
    """

    dt: float = field(default_factory=lambda: units.fs_to_au(0.5))
    tol: float = 1e-10
    window_multiplier: float = 3.0
    check_convergence: bool = True
    max_refinements: int = 4

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.window_multiplier > 0:
            raise ValueError("window multiplier must be positive")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be at least 1")


@dataclass
class RotorState:
    """Schroedinger-picture state of one m block at time ``t``.

    ``coeffs[k]`` is the amplitude of j = |m| + k.
    """

    m: int
    coeffs: np.ndarray
    params: MolecularParams
    t: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("coeffs must be a non-empty vector")

    @property
    def basis(self) -> BasisSpec:
        return BasisSpec(abs(self.m) + self.coeffs.size - 1, self.m)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.populations.sum()))

    def population(self, j: int) -> float:
        return float(self.populations[self.basis.index(j)])

    def replace(self, **changes) -> "RotorState":
        return replace(self, **changes)

    @classmethod
    def basis_state(cls, j: int, m: int, params: MolecularParams, j_max: int = 20,
                    t: float = 0.0) -> "RotorState":
        spec = BasisSpec(j_max, m)
        c = np.zeros(spec.size, dtype=complex)
        c[spec.index(j)] = 1.0
        return cls(m, c, params, t)


def _require_normalized(state: RotorState):
    if abs(state.norm - 1.0) > 1e-8:
        raise ValueError(f"state is not normalized (norm = {state.norm!r})")


def _step_exponentials(e0, cos2, coupling, alpha_perp_coupling, g1, g2, h):
    """Stack of Magnus-4 step propagators for intensities g1, g2 at the Gauss nodes."""
    n = e0.size
    h0 = np.diag(e0)
    comm = (e0[:, None] - e0[None, :]) * cos2  # [H0, cos2]
    gm = 0.5 * (g1 + g2)
    heff = h0[None] - (coupling * gm)[:, None, None] * cos2[None]
    heff = heff - (alpha_perp_coupling * gm)[:, None, None] * np.eye(n)[None]
    heff = heff.astype(complex)
    # [H2, H1] = (g2 - g1) [H0, V] with V = coupling * cos2 (+ identity)
    heff -= 1j * _MAGNUS_COMMUTATOR * h * (coupling * (g2 - g1))[:, None, None] * comm[None]
    w, v = np.linalg.eigh(heff)
    return (v * np.exp(-1j * w * h)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _ordered_product(steps):
    # steps[k] acts at the k-th time step; returns steps[-1] @ ... @ steps[0]
    while len(steps) > 1:
        if len(steps) % 2:
            last = steps[-1]
            paired = steps[1:-1:2] @ steps[0:-1:2]
            steps = np.concatenate([paired, last[None]], axis=0)
        else:
            steps = steps[1::2] @ steps[0::2]
    return steps[0]


def _integrate_chain(e0, cos2, params, envelope, t_start, t_end, n_steps):
    kappa = 1.0 / (2.0 * units.EPS0_AU * units.C_AU)
    coupling = kappa * params.dalpha
    perp = kappa * params.alpha_perp
    h = (t_end - t_start) / n_steps
    u = np.eye(e0.size, dtype=complex)
    for start in range(0, n_steps, _CHUNK):
        k = np.arange(start, min(start + _CHUNK, n_steps))
        t0 = t_start + k * h
        g1 = envelope(t0 + (0.5 - _GAUSS_OFFSET) * h)
        g2 = envelope(t0 + (0.5 + _GAUSS_OFFSET) * h)
        u = _ordered_product(_step_exponentials(e0, cos2, coupling, perp, g1, g2, h)) @ u
    return u


def _integrate(spec, params, envelope, t_start, t_end, n_steps):
    # even and odd j never couple; propagating them apart keeps the
    # forbidden amplitudes exactly zero
    e0 = block_energies(spec, params)
    cos2 = np.asarray(cos2_matrix(spec))
    u = np.zeros((spec.size, spec.size), dtype=complex)
    for parity in (0, 1):
        idx = np.flatnonzero(spec.js % 2 == parity)
        if idx.size:
            u[np.ix_(idx, idx)] = _integrate_chain(e0[idx], cos2[np.ix_(idx, idx)], params,
                                                   envelope, t_start, t_end, n_steps)
    return u


def block_propagator(spec: BasisSpec, params: MolecularParams,
                     envelope: Callable[[np.ndarray], np.ndarray],
                     t_start: float, t_end: float,
                     settings: PropagationSettings = PropagationSettings()) -> np.ndarray:
    """Schroedinger-picture propagator U(t_end, t_start) for one m block.

    ``envelope`` maps an array of times to intensities (atomic units).
    Raises ConvergenceError if step halving does not settle within
    ``settings.max_refinements`` halvings.
    """
    span = t_end - t_start
    if span < 0:
        raise ValueError("t_end must not precede t_start")
    if span == 0:
        return np.eye(spec.size, dtype=complex)
    n = max(1, math.ceil(span / settings.dt - 1e-9))
    u = _integrate(spec, params, envelope, t_start, t_end, n)
    if settings.check_convergence:
        limit = 100.0 * settings.tol
        for _ in range(settings.max_refinements):
            n *= 2
            finer = _integrate(spec, params, envelope, t_start, t_end, n)
            change = np.max(np.abs(np.abs(finer) ** 2 - np.abs(u) ** 2))
            u = finer
            if change < limit:
                break
        else:
            raise ConvergenceError(
                f"populations still change by {change:.3g} after {settings.max_refinements} "
                f"step halvings (dt={units.au_to_fs(settings.dt):g} fs, limit {limit:.3g})"
            )
    drift = np.max(np.abs(np.sum(np.abs(u) ** 2, axis=0) - 1.0))
    if drift > settings.tol:
        raise ConvergenceError(f"norm drift {drift:.3g} exceeds tol {settings.tol:.3g}")
    return u


@lru_cache(maxsize=1024)
def _kick_cached(j_max, m_abs, params, i0, tau_i, settings):
    spec = BasisSpec(j_max, m_abs)
    p = PulseSpec(i0, tau_i)
    w = window_half_width(p, settings.window_multiplier)
    u = block_propagator(spec, params, lambda t: intensity_at(p, t), -w, w, settings)
    phase = np.exp(1j * block_energies(spec, params) * w)
    k = phase[:, None] * u * phase[None, :]
    k.setflags(write=False)
    return k


def pulse_kick(spec: BasisSpec, params: MolecularParams, pulse: PulseSpec,
               settings: PropagationSettings = PropagationSettings()) -> np.ndarray:
    """Interaction-picture propagator of one pulse, referenced to its centre.

    Independent of ``pulse.t_center``; results are cached (read-only array).
    """
    return _kick_cached(spec.j_max, abs(spec.m), params, pulse.i0, pulse.tau_i, settings)


def overlap_threshold(p1: PulseSpec, p2: PulseSpec,
                      settings: PropagationSettings = PropagationSettings()) -> float:
    """Smallest peak-to-peak delay at which the pulses are kicked separately.

    With the default window multiplier 3 this is 3 (tau_1 + tau_2) / 2.
    """
    return 0.5 * settings.window_multiplier * (p1.tau_i + p2.tau_i)


def sequence_operator(spec: BasisSpec, params: MolecularParams, p1: PulseSpec,
                      delay: float, p2: PulseSpec,
                      settings: PropagationSettings = PropagationSettings()) -> np.ndarray:
    """Interaction-picture propagator of a two-pulse sequence (origin at pulse 1).

    Below the overlap threshold the summed envelope is integrated in one
    pass and a PulseOverlapWarning is issued.
    """
    if delay < 0:
        raise ValueError(f"delay must be non-negative, got {delay}")
    if delay >= overlap_threshold(p1, p2, settings):
        d = free_phase_vector(spec, params, delay)
        k1 = pulse_kick(spec, params, p1, settings)
        k2 = pulse_kick(spec, params, p2, settings)
        return np.conj(d)[:, None] * (k2 @ (d[:, None] * k1))
    warnings.warn(
        f"pulses overlap at delay {units.au_to_fs(delay):.1f} fs; integrating the summed envelope",
        PulseOverlapWarning,
        stacklevel=2,
    )
    a = PulseSpec(p1.i0, p1.tau_i, 0.0)
    b = PulseSpec(p2.i0, p2.tau_i, delay)
    t0 = -window_half_width(a, settings.window_multiplier)
    t1 = delay + window_half_width(b, settings.window_multiplier)
    u = block_propagator(spec, params, lambda t: intensity_at(a, t) + intensity_at(b, t),
                         t0, t1, settings)
    e = block_energies(spec, params)
    return np.exp(1j * e * t1)[:, None] * u * np.exp(-1j * e * t0)[None, :]


def propagate_free(state: RotorState, duration: float) -> RotorState:
    """Field-free evolution; populations are untouched."""
    phases = free_phase_vector(state.basis, state.params, duration)
    return state.replace(coeffs=phases * state.coeffs, t=state.t + duration)


def _window(pulse, settings):
    w = window_half_width(pulse, settings.window_multiplier)
    return pulse.t_center - w, pulse.t_center + w


def propagate_pulse(state: RotorState, pulse: PulseSpec,
                    settings: PropagationSettings = PropagationSettings()) -> RotorState:
    """Propagate through one pulse; returns the state at the end of its window.

    The state must not be later than the start of the pulse window.
    """
    _require_normalized(state)
    start, end = _window(pulse, settings)
    if state.t > start + 1e-9 * max(1.0, abs(start)):
        raise ValueError("state time lies inside or after the pulse window")
    spec = state.basis
    k = pulse_kick(spec, state.params, pulse, settings)
    at_center = propagate_free(state, pulse.t_center - state.t)
    kicked = at_center.replace(coeffs=k @ at_center.coeffs)
    out = propagate_free(kicked, end - pulse.t_center)
    check_truncation(out.populations, spec, context="after pulse")
    return out


def apply_sequence(state: RotorState, p1: PulseSpec, delay: float, p2: PulseSpec,
                   settings: PropagationSettings = PropagationSettings()) -> RotorState:
    """Pulse 1 at its own centre, then pulse 2 ``delay`` later (peak to peak).

    ``p2.t_center`` is ignored. Returns the state at the end of the second
    pulse window.
    """
    if delay < 0:
        raise ValueError(f"delay must be non-negative, got {delay}")
    _require_normalized(state)
    start, _ = _window(p1, settings)
    if state.t > start + 1e-9 * max(1.0, abs(start)):
        raise ValueError("state time lies inside or after the first pulse window")
    p2 = p2.centered_at(p1.t_center + delay)
    _, end = _window(p2, settings)
    spec = state.basis
    m_op = sequence_operator(spec, state.params, p1, delay, p2, settings)
    at_center = propagate_free(state, p1.t_center - state.t)
    kicked = at_center.replace(coeffs=m_op @ at_center.coeffs)
    # m_op is referenced to p1's centre; undo that reference and go to `end`
    out = propagate_free(kicked, end - p1.t_center)
    check_truncation(out.populations, spec, context="after pulse sequence")
    return out


def correlation(initial: RotorState, t) -> complex:
    """C(t) = sum_j |c_j|^2 exp(-i E_j t) for field-free evolution."""
    e = block_energies(initial.basis, initial.params)
    t_arr = np.asarray(t, dtype=float)
    c = np.exp(-1j * np.multiply.outer(t_arr, e)) @ initial.populations
    return complex(c) if c.ndim == 0 else c
