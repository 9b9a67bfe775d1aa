"""Tests for one-dimensional stable sampling, densities and normalization."""

import numpy as np
import pytest
from scipy.stats import chi2, kstwobign, ks_2samp

from anisostable.grids import GridError, UniformGrid1D
from anisostable.stable import (StableIndex, cell_masses, certified_extent,
                                density_1d, density_values,
                                normalization_constant, normalization_integral,
                                sample_increments, sample_standard, tail_mass)
from conftest import rng_for, three_sigma


# --- normalization constant -------------------------------------------------

def test_index_validation():
    with pytest.raises(ValueError):
        StableIndex(0.0)
    with pytest.raises(ValueError):
        StableIndex(2.0)
    with pytest.raises(ValueError):
        StableIndex(-0.3)
    assert StableIndex(1.97).delicate
    assert StableIndex(0.03).delicate
    assert not StableIndex(1.0).delicate


def test_normalization_alpha_one_is_inv_pi():
    # int (1-cos w)/w^2 dw = pi, so c_1 = 1/pi
    assert normalization_constant(1.0) == pytest.approx(1.0 / np.pi, rel=1e-14)


def test_normalization_alpha_half_matches_quadrature():
    # quadrature oracle evaluates to 0.19947114020... = 1/(2 sqrt(2 pi))
    c = normalization_constant(0.5)
    assert c == pytest.approx(0.5 / np.sqrt(2.0 * np.pi), rel=1e-12)
    assert normalization_integral(0.5) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.7, 1.0, 1.2, 1.5, 1.8, 1.95])
def test_normalization_defining_integral(alpha):
    assert normalization_constant(alpha) > 0.0
    assert normalization_integral(alpha) == pytest.approx(1.0, abs=1e-10)


# --- sampling ----------------------------------------------------------------

def test_sampler_cauchy_ks():
    z = sample_standard(1.0, 100_000, rng_for(1))
    # exact Cauchy CDF oracle
    u = np.sort(0.5 + np.arctan(z) / np.pi)
    n = len(u)
    d = np.max(np.maximum(u - np.arange(n) / n, (np.arange(n) + 1) / n - u))
    crit = kstwobign.isf(0.01) / np.sqrt(n)
    assert d < crit


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.4, 1.9])
def test_sampler_symmetry(alpha):
    z = sample_standard(alpha, 100_000, rng_for(2))
    assert abs(np.mean(np.sign(z))) < 3.0 / np.sqrt(len(z))


def test_sampler_char_function():
    z = sample_standard(1.5, 100_000, rng_for(3))
    vals = np.cos(1.0 * z)
    assert np.mean(vals) == pytest.approx(np.exp(-1.0), abs=three_sigma(vals))


def test_increment_unit_time_identical():
    a = sample_standard(1.3, 1000, rng_for(4))
    b = sample_increments(1.3, 1.0, 1000, rng_for(4))
    assert np.array_equal(a, b)


def test_increment_char_function_dt4():
    z = sample_increments(1.0, 4.0, 200_000, rng_for(5))
    vals = np.cos(1.0 * z)
    assert np.mean(vals) == pytest.approx(np.exp(-4.0), abs=three_sigma(vals))


def test_increment_self_similarity_ks():
    alpha, dt = 0.8, 0.25
    inc = sample_increments(alpha, dt, 100_000, rng_for(6))
    std = sample_standard(alpha, 100_000, rng_for(7))
    res = ks_2samp(inc / dt ** (1.0 / alpha), std)
    assert res.pvalue > 0.01


def test_rng_reproducibility():
    a = sample_standard(1.1, 50, rng_for(8))
    b = sample_standard(1.1, 50, rng_for(8))
    c = sample_standard(1.1, 50, rng_for(9))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


# --- density -----------------------------------------------------------------

def test_density_cauchy_values():
    grid = UniformGrid1D.centered(200.0, 8001)
    dens = density_1d(1.0, 1.0, grid, tail_uncertainty_target=1e-8)
    x = grid.nodes
    exact = 1.0 / (np.pi * (1.0 + x * x))
    assert np.abs(dens.values - exact).max() < 1e-6
    i0 = grid.n // 2
    assert dens.values[i0] == pytest.approx(1.0 / np.pi, abs=1e-6)
    i1 = i0 + round(1.0 / grid.h)
    assert x[i1] == pytest.approx(1.0)
    assert dens.values[i1] == pytest.approx(1.0 / (2.0 * np.pi), abs=1e-6)


def test_density_symmetry_bit_exact():
    grid = UniformGrid1D.centered(60.0, 1201)
    dens = density_1d(1.4, 0.7, grid)
    assert np.array_equal(dens.values, dens.values[::-1])


def test_density_nonnegative_and_mass():
    for alpha, t, extent in [(1.0, 1.0, 300.0), (1.4, 2.0, 150.0), (0.8, 0.5, 400.0)]:
        grid = UniformGrid1D.centered(extent, 20001)
        dens = density_1d(alpha, t, grid)
        assert (dens.values >= -1e-15).all()
        assert abs(dens.total_mass - 1.0) < 1e-6
        assert dens.tail_uncertainty <= 1e-8


def test_density_scaling_property():
    # q_t(x) = t^{-1/alpha} q_1(t^{-1/alpha} x), both sides computed independently
    rng = np.random.default_rng(42)
    for _ in range(10):
        alpha = rng.uniform(0.4, 1.8)
        t = rng.uniform(0.3, 5.0)
        x = np.linspace(-6.0, 6.0, 201)
        lhs = density_values(alpha, t, x)
        rhs = t ** (-1.0 / alpha) * density_values(alpha, 1.0, t ** (-1.0 / alpha) * x)
        assert np.abs(lhs / rhs - 1.0).max() < 1e-6


def test_density_grid_rejection():
    # tiny grid cannot certify a 1e-8 tail for heavy tails
    grid = UniformGrid1D.centered(2.0, 101)
    with pytest.raises(GridError):
        density_1d(0.6, 1.0, grid, tail_uncertainty_target=1e-8)


def test_certified_extent_monotone():
    e1 = certified_extent(1.0, 1.0, 1e-8)
    e2 = certified_extent(1.0, 1.0, 1e-10)
    assert e2 >= e1
    _, unc = tail_mass(1.0, 1.0, e1)
    assert 2.0 * unc <= 1e-8


def test_tail_mass_cauchy_oracle():
    for edge in (30.0, 80.0, 200.0):
        est, unc = tail_mass(1.0, 1.0, edge)
        exact = 0.5 - np.arctan(edge) / np.pi
        assert abs(est - exact) <= max(unc, 1e-15)


def test_cell_masses_cauchy_oracle():
    h = 0.05
    centers = np.arange(-400, 401) * h
    m = cell_masses(1.0, 1.0, centers, h)
    F = lambda x: 0.5 + np.arctan(x) / np.pi
    exact = F(centers + h / 2) - F(centers - h / 2)
    assert np.abs(m - exact).max() < 1e-13


def test_sampler_density_chi2():
    alpha, t, n = 1.3, 1.0, 100_000
    z = sample_increments(alpha, t, n, rng_for(10))
    edges = np.linspace(-8.0, 8.0, 51)
    counts, _ = np.histogram(z, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    probs = cell_masses(alpha, t, centers, edges[1] - edges[0])
    # two open tail bins
    left, _ = tail_mass(alpha, t, 8.0)
    counts = np.concatenate([[np.sum(z < -8.0)], counts, [np.sum(z > 8.0)]])
    probs = np.concatenate([[left], probs, [left]])
    expected = probs * n
    assert (expected > 5).all()
    stat = np.sum((counts - expected) ** 2 / expected)
    assert stat < chi2.isf(0.01, len(probs) - 1)


def test_density_csv_roundtrip(tmp_path):
    grid = UniformGrid1D.centered(50.0, 501)
    dens = density_1d(1.2, 1.0, grid)
    path = tmp_path / "dens.csv"
    dens.to_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert np.array_equal(data["x"], grid.nodes)
    assert np.array_equal(data["value"], dens.values)
