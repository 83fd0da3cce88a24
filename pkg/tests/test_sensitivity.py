import numpy as np
import pytest

from rotramsey import units
from rotramsey.ensemble import pure_ground, surrogate_experimental, thermal
from rotramsey.interferometry import delay_grid, scan_interferogram
from rotramsey.pulse import PulseSpec
from rotramsey.rotor import MolecularParams
from rotramsey.sensitivity import (
    SensitivityConfig,
    max_pointwise_separation,
    measured_samples,
    monte_carlo_bands,
    sample_noise,
    scan_dalpha,
    separability,
    separability_csv,
)

PARAMS = MolecularParams.mgh_plus()
P1 = PulseSpec.from_lab(0.55e13, 100.0)
DELAYS = units.fs_to_au(delay_grid(1500, 2000, 10))
DA = (15.39, 16.20, 17.01)


def cfg(**kw):
    base = dict(dalpha_values=DA, intensity_ratio=1.6, init_uncertainty=0.02,
                meas_uncertainty=0.02, n_samples=200, rng_seed=7)
    base.update(kw)
    return SensitivityConfig(**base)


@pytest.mark.parametrize("kw", [dict(dalpha_values=()), dict(init_uncertainty=-0.1),
                                dict(n_samples=0), dict(noise="cauchy"), dict(band_k=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        cfg(**kw)


def test_single_dalpha_ratio_one_reduces_to_scan():
    c = SensitivityConfig((16.20,))
    ig = scan_dalpha(c, PARAMS, P1, thermal(20.0, PARAMS), DELAYS)[16.20]
    ref = scan_interferogram(thermal(20.0, PARAMS), PARAMS, P1, P1, DELAYS)
    np.testing.assert_array_equal(ig.populations, ref.populations)


def test_deterministic():
    a = monte_carlo_bands(cfg(), PARAMS, P1, surrogate_experimental(), DELAYS)
    b = monte_carlo_bands(cfg(), PARAMS, P1, surrogate_experimental(), DELAYS)
    assert a.to_csv() == b.to_csv()


def test_zero_uncertainty_collapses_bands():
    r = monte_carlo_bands(cfg(init_uncertainty=0, meas_uncertainty=0, n_samples=5), PARAMS, P1,
                          surrogate_experimental(), DELAYS)
    for da in DA:
        mean, lo, hi = r.band(da)
        np.testing.assert_array_equal(lo, mean)
        np.testing.assert_array_equal(hi, mean)
        np.testing.assert_allclose(mean, r.noiseless[da], atol=1e-15)


def test_band_contains_mean():
    r = monte_carlo_bands(cfg(), PARAMS, P1, surrogate_experimental(), DELAYS)
    for da in DA:
        mean, lo, hi = r.band(da)
        assert np.all(lo <= mean) and np.all(mean <= hi)


def test_band_width_monotone_in_measurement_noise():
    widths = []
    for s in (0.0, 0.01, 0.02, 0.05, 0.1):
        r = monte_carlo_bands(cfg(meas_uncertainty=s, dalpha_values=(16.20,)), PARAMS, P1,
                              surrogate_experimental(), DELAYS)
        _, lo, hi = r.band(16.20)
        widths.append(hi - lo)
    for a, b in zip(widths, widths[1:]):
        assert np.all(b >= a - 1e-12)


def test_sample_streams_are_prefix_stable():
    a = sample_noise(cfg(n_samples=5), 7, 11)
    b = sample_noise(cfg(n_samples=9), 7, 11)
    np.testing.assert_array_equal(a[0], b[0][:5])
    np.testing.assert_array_equal(a[1], b[1][:5])


def test_uniform_noise_has_unit_variance():
    init, meas = sample_noise(cfg(noise="uniform", n_samples=4000), 1, 10)
    assert np.all(np.abs(meas) <= np.sqrt(3.0))
    assert meas.var() == pytest.approx(1.0, rel=0.05)


def test_mean_converges_at_inverse_sqrt_n():
    rng = np.random.default_rng(0)
    curves = rng.uniform(0.2, 0.6, size=(25, 3))
    w = np.array([0.5, 0.3, 0.2])
    clean = curves @ w
    errs = {}
    for n in (100, 10_000):
        c = cfg(init_uncertainty=0.0, meas_uncertainty=0.05, n_samples=n)
        s = measured_samples(curves, w, c)
        errs[n] = np.sqrt(np.mean((s.mean(axis=0) - clean) ** 2))
        expected = np.sqrt(np.mean((0.05 * clean) ** 2)) / np.sqrt(n)
        assert errs[n] < 3 * expected
    ratio = errs[100] / errs[10_000]
    assert 3 < ratio < 30


def test_seed_changes_bands_not_mean():
    d = surrogate_experimental()
    a = monte_carlo_bands(cfg(n_samples=10_000, rng_seed=1), PARAMS, P1, d, DELAYS)
    b = monte_carlo_bands(cfg(n_samples=10_000, rng_seed=2), PARAMS, P1, d, DELAYS)
    ma, la, _ = a.band(16.20)
    mb, lb, _ = b.band(16.20)
    assert not np.array_equal(la, lb)
    sd = ma - la
    assert np.all(np.abs(ma - mb) < 5 * sd * np.sqrt(2 / 10_000) + 1e-12)


def test_separability_trivial_cases():
    r = monte_carlo_bands(cfg(init_uncertainty=0, meas_uncertainty=0, n_samples=1), PARAMS, P1,
                          surrogate_experimental(), DELAYS)
    assert separability(r, 16.20, 16.20) == (False, [])
    ok, intervals = separability(r, 16.20, 17.01, min_length=0.0)
    diff = np.abs(r.mean[16.20] - r.mean[17.01]) > 1e-12
    assert ok == bool(diff.any())
    inside = np.zeros_like(diff)
    for a, b in intervals:
        inside |= (r.delays >= a) & (r.delays <= b)
    np.testing.assert_array_equal(inside, diff)


def test_separable_for_five_percent_shift_in_early_window():
    r = monte_carlo_bands(cfg(n_samples=500, rng_seed=0), PARAMS, P1, surrogate_experimental(),
                          DELAYS)
    ok, _ = separability(r, 16.20, 17.01, window=(DELAYS[0], DELAYS[-1]))
    assert ok


def test_ratio_ordering():
    d = thermal(20.0, PARAMS)
    grid = units.fs_to_au(delay_grid(300, 4000, 10))
    seps = []
    for ratio in (1.0, 1.6):
        curves = scan_dalpha(cfg(intensity_ratio=ratio), PARAMS, P1, d, grid)
        seps.append(max_pointwise_separation([ig.level(0) for ig in curves.values()]))
    assert seps[0] < seps[1]


def test_pure_state_bands():
    r = monte_carlo_bands(cfg(n_samples=50), PARAMS, P1, pure_ground(), DELAYS)
    mean, lo, hi = r.band(16.20)
    assert np.all(hi >= lo)


def test_csv_outputs():
    r = monte_carlo_bands(cfg(n_samples=3), PARAMS, P1, surrogate_experimental(), DELAYS)
    assert r.to_csv().splitlines()[0] == "tau_fs,dalpha_au,mean,lo,hi"
    text = separability_csv([(16.2, 17.01, [(DELAYS[0], DELAYS[3])])])
    lines = text.splitlines()
    assert lines[0] == "dalpha_a,dalpha_b,window_start_fs,window_end_fs"
    assert float(lines[1].split(",")[2]) == pytest.approx(1500.0)
