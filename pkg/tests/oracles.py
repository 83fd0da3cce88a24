"""Independent reference computations used to check the package.

Nothing here imports the package's rotor, pulse or dynamics code, and none of
it calls the units module.
"""
import math

import numpy as np
import scipy.constants as sc
from scipy.linalg import expm
from scipy.special import lpmv

A0 = sc.physical_constants["Bohr radius"][0]


def normalized_legendre(j, m, x):
    """sqrt((2j+1)/2 (j-m)!/(j+m)!) P_j^m(x): unit norm on [-1, 1]."""
    m = abs(m)
    lognorm = 0.5 * (math.log((2 * j + 1) / 2.0) + math.lgamma(j - m + 1) - math.lgamma(j + m + 1))
    return math.exp(lognorm) * lpmv(m, j, x)


def cos2_element_quadrature(jp, j, m, n_nodes=80):
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return float(np.sum(w * normalized_legendre(jp, m, x) * x * x * normalized_legendre(j, m, x)))


def cos2_matrix_quadrature(j_max, m, n_nodes=80):
    js = range(abs(m), j_max + 1)
    return np.array([[cos2_element_quadrature(a, b, m, n_nodes) for b in js] for a in js])


def coupling_rad_per_fs(i0_wcm2, dalpha_a03):
    """I/(2 eps0 c) * dalpha with dalpha in SI (4 pi eps0 a0^3 dalpha), over hbar, per fs."""
    alpha_si = 4 * math.pi * sc.epsilon_0 * A0 ** 3 * dalpha_a03
    energy = i0_wcm2 * 1e4 / (2 * sc.epsilon_0 * sc.c) * alpha_si
    return energy / sc.hbar * 1e-15


def b_rad_per_fs(b_cm1):
    return 2 * math.pi * sc.c * 100 * b_cm1 * 1e-15


def _midpoint_populations(e, cos2, u0, tau, n_steps):
    w = 3.0 * tau
    h = 2 * w / n_steps
    u = np.eye(len(e), dtype=complex)
    h0 = np.diag(e)
    for k in range(n_steps):
        t = -w + (k + 0.5) * h
        f = math.exp(-4 * math.log(2) * t * t / tau ** 2)
        u = expm(-1j * (h0 - u0 * f * cos2) * h) @ u
    return np.abs(u) ** 2


def brute_force_populations(i0_wcm2, tau_fs, j_max=8, m=0, b_cm1=6.3685, dalpha_a03=16.20,
                            dt_fs=0.25):
    """|U_jj'|^2 of one Gaussian pulse over +-3 tau (fs units throughout).

    Dense matrix exponential of the midpoint Hamiltonian at dt and dt/2,
    Richardson-extrapolated in the populations (second-order scheme).
    Free evolution only adds phases, so populations need no frame change.
    """
    js = np.arange(abs(m), j_max + 1)
    e = b_rad_per_fs(b_cm1) * js * (js + 1.0)
    cos2 = cos2_matrix_quadrature(j_max, m)
    u0 = coupling_rad_per_fs(i0_wcm2, dalpha_a03)
    n = int(math.ceil(6 * tau_fs / dt_fs))
    coarse = _midpoint_populations(e, cos2, u0, tau_fs, n)
    fine = _midpoint_populations(e, cos2, u0, tau_fs, 2 * n)
    return (4 * fine - coarse) / 3
