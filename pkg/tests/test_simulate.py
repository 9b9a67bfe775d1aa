"""Tests for path simulation, dyadic freezing, and Monte Carlo functionals."""

import numpy as np
import pytest
from scipy.stats import chi2

import anisostable.simulate as sim
from anisostable.driver import AlphaSpec, FrozenSpec
from anisostable.fields import constant_field, sine_field, zero_field
from anisostable.functions import constant_function, gaussian_bump
from anisostable.grids import TensorGrid
from anisostable.simulate import (coupling_discrepancy, maximal_inequality_probe,
                                  resolvent_mc, simulate_dyadic_freezing,
                                  simulate_ensemble, simulate_euler)
from anisostable.spectral import FunctionBounds, SemigroupEngine
from anisostable.stable import cell_masses, tail_mass
from conftest import rng_for, three_sigma


def test_zero_field_constant_states(handle):
    spec = AlphaSpec.of(0.8, 1.5)
    path = simulate_euler(zero_field(2), spec, [1.0, -2.0], 1.0, 0.125, handle)
    assert np.array_equal(path.states, np.tile([1.0, -2.0], (9, 1)))


def test_identity_field_driver_law():
    spec = AlphaSpec.of(0.9, 1.6)
    T, dt = 1.0, 1.0 / 64
    ens = simulate_ensemble(constant_field([1.0, 1.0]), spec, [0.0, 0.0],
                            T, dt, 20_000, rng_for(30), record_increments=False)
    disp = ens.states[:, -1, :] - ens.states[:, 0, :]
    rng = np.random.default_rng(17)
    for xi in rng.normal(size=(10, 2)):
        vals = np.cos(disp @ xi)
        target = np.exp(-T * np.sum(np.abs(xi) ** spec.values))
        assert np.mean(vals) == pytest.approx(target, abs=three_sigma(vals))


def test_constant_field_marginal_chi2():
    spec = AlphaSpec.of(1.1, 0.7)
    coeffs = (1.4, 0.6)
    T, dt = 1.0, 1.0 / 64
    ens = simulate_ensemble(constant_field(coeffs), spec, [0.0, 0.0],
                            T, dt, 50_000, rng_for(31), record_increments=False)
    # axis-0 marginal of X_T is a scaled stable with the frozen coefficients
    x = ens.states[:, -1, 0]
    edges = np.linspace(-12.0, 12.0, 41)
    counts, _ = np.histogram(x, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    probs = cell_masses(1.1, T, centers / coeffs[0], (edges[1] - edges[0]) / coeffs[0])
    tail, _ = tail_mass(1.1, T, 12.0 / coeffs[0])
    counts = np.concatenate([[np.sum(x < -12)], counts, [np.sum(x > 12)]])
    probs = np.concatenate([[tail], probs, [tail]])
    n = len(x)
    stat = np.sum((counts - n * probs) ** 2 / (n * probs))
    assert stat < chi2.isf(0.01, len(probs) - 1)


def test_bit_reproducibility():
    spec = AlphaSpec.of(0.8, 1.3)
    field = sine_field([1.0, 1.2], [0.3, 0.2])
    a = simulate_ensemble(field, spec, [0.0, 0.0], 1.0, 0.125, 50, rng_for(32))
    b = simulate_ensemble(field, spec, [0.0, 0.0], 1.0, 0.125, 50, rng_for(32))
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.increments, b.increments)


def test_dyadic_equals_reference_at_matching_level():
    spec = AlphaSpec.of(0.9, 1.4)
    field = sine_field([1.0, 1.2], [0.3, 0.2])
    m = 6
    ref = simulate_ensemble(field, spec, [0.1, -0.2], 2.0, 2.0 ** -m, 20, rng_for(33))
    frozen = simulate_dyadic_freezing(field, ref, m)
    assert np.array_equal(frozen.states, ref.states)


def test_dyadic_constant_field_identical():
    spec = AlphaSpec.of(0.9, 1.4)
    field = constant_field([1.1, 0.7])
    ref = simulate_ensemble(field, spec, [0.0, 0.0], 2.0, 2.0 ** -6, 20, rng_for(34))
    for n in (2, 3, 5):
        frozen = simulate_dyadic_freezing(field, ref, n)
        assert np.array_equal(frozen.states, ref.states)


def test_dyadic_grid_validation():
    spec = AlphaSpec.of(1.0,)
    field = constant_field([1.0])
    ref = simulate_ensemble(field, spec, [0.0], 2.0, 2.0 ** -4, 5, rng_for(35))
    with pytest.raises(ValueError):
        simulate_dyadic_freezing(field, ref, 6)   # driver grid too coarse
    ref2 = simulate_ensemble(field, spec, [0.0], 4.0, 2.0 ** -5, 5, rng_for(35))
    with pytest.raises(ValueError):
        simulate_dyadic_freezing(field, ref2, 3)  # horizon beyond freeze level


def test_coupling_discrepancy_decreases():
    spec = AlphaSpec.of(0.9, 1.5)
    field = sine_field([1.0, 1.3], [0.35, 0.3])
    m = 8
    ref = simulate_ensemble(field, spec, [0.0, 0.0], 2.0, 2.0 ** -m, 500, rng_for(36))
    medians = []
    for n in range(2, 7):
        frozen = simulate_dyadic_freezing(field, ref, n)
        medians.append(float(np.median(coupling_discrepancy(ref, frozen))))
    assert all(a >= b for a, b in zip(medians, medians[1:]))
    assert medians[-1] < medians[0]


def test_resolvent_mc_constant_function():
    spec = AlphaSpec.of(1.2,)
    field = constant_field([1.0])
    ens = simulate_ensemble(field, spec, [0.0], 4.0, 1.0 / 32, 100, rng_for(37),
                            record_increments=False)
    lam = 1.5
    f = constant_function(1, level=1.0)
    res = resolvent_mc(ens, f, lam, sup_norm=1.0)
    exact_truncated = (1.0 - np.exp(-lam * 4.0)) / lam
    assert res.estimate == pytest.approx(exact_truncated, abs=1e-12)
    assert res.stderr < 1e-15   # zero MC variance up to summation rounding
    assert res.estimate + res.tail_bound == pytest.approx(1.0 / lam, abs=1e-12)


def test_resolvent_mc_matches_frozen_resolvent():
    spec = AlphaSpec.of(1.0, 1.4)
    coeffs = (1.0, 0.8)
    field = constant_field(coeffs)
    frozen = FrozenSpec(spec, coeffs)
    lam = 1.0
    T, dt = 8.0, 1.0 / 64
    f = gaussian_bump(2, scale=1.5)
    ens = simulate_ensemble(field, spec, [0.0, 0.0], T, dt, 4000, rng_for(38),
                            record_increments=False)
    mc = resolvent_mc(ens, f, lam, sup_norm=f.sup_norm)

    grid = TensorGrid.centered([50.0, 50.0], [501, 501])
    eng = SemigroupEngine(frozen, grid)
    vals = f(grid.points()).reshape(grid.shape)
    out, rep = eng.resolvent(lam, vals, FunctionBounds(sup=1.0, lip=f.lip),
                             tail_target=1e-6)[lam]
    center = out[250, 250]
    budget = 3.0 * mc.stderr + mc.tail_bound + rep.total + 2e-3
    assert abs(mc.estimate - center) <= budget


def test_resolvent_bound_stable_under_bump_rescaling():
    # |S_lam f| <= c ||f||_p with p > beta; the fitted c must be stable when
    # the bump is rescaled
    spec = AlphaSpec.of(1.1, 1.4)
    beta = spec.beta
    p = beta + 1.0
    field = sine_field([1.0, 1.2], [0.3, 0.25])
    ens = simulate_ensemble(field, spec, [0.0, 0.0], 6.0, 1.0 / 32, 2000,
                            rng_for(39), record_increments=False)
    lam = 1.0
    ratios = []
    for s in (0.5, 1.0, 2.0):
        f = gaussian_bump(2, scale=s)
        norm_p = (2.0 * np.pi * s * s / p) ** (1.0 / p)   # d = 2
        res = resolvent_mc(ens, f, lam, sup_norm=1.0)
        ratios.append(abs(res.estimate) / norm_p)
    ratios = np.array(ratios)
    assert ratios.max() / ratios.min() < 2.5


def test_maximal_probe_monotone_and_oracle():
    spec = AlphaSpec.of(1.2,)
    field = constant_field([1.0])
    t = 1.0
    ens = simulate_ensemble(field, spec, [0.0], t, 1.0 / 128, 20_000, rng_for(40),
                            record_increments=False)
    deltas = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    table = maximal_inequality_probe(ens, t, deltas)
    assert (np.diff(table.probabilities) <= 1e-12).all()
    # independent driver-only oracle with its own stream
    oracle = simulate_ensemble(field, spec, [0.0], t, 1.0 / 128, 20_000,
                               rng_for(41), record_increments=False)
    oracle_table = maximal_inequality_probe(oracle, t, deltas)
    for p, lo, hi in zip(oracle_table.probabilities, table.ci_low, table.ci_high):
        assert lo - 0.01 <= p <= hi + 0.01


def test_escape_accounting(monkeypatch):
    monkeypatch.setattr(sim, "ESCAPE_THRESHOLD", 3.0)
    spec = AlphaSpec.of(0.7,)
    field = constant_field([1.0])
    ens = simulate_ensemble(field, spec, [0.0], 2.0, 0.125, 500, rng_for(42),
                            record_increments=False)
    assert ens.escaped.any()
    frozen_state = ens.states[ens.escaped][:, -1, :]
    res = resolvent_mc(ens, constant_function(1), 1.0, sup_norm=1.0)
    assert res.excluded_fraction == pytest.approx(ens.escaped.mean())
    # escaped paths stop evolving once flagged
    esc_idx = np.flatnonzero(ens.escaped)[0]
    states = ens.states[esc_idx]
    k = np.argmax(np.abs(states).max(axis=1) > 3.0)
    assert np.array_equal(states[k + 1], states[k + 1])


def test_path_csv_roundtrip(tmp_path, handle):
    spec = AlphaSpec.of(1.0, 1.3)
    field = constant_field([1.0, 1.0])
    path = simulate_euler(field, spec, [0.0, 0.0], 1.0, 0.25, handle)
    out = tmp_path / "path.csv"
    path.to_csv(out)
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert np.array_equal(data["t"], path.times)
    assert np.array_equal(data["x_1"], path.states[:, 0])
    assert np.array_equal(data["x_2"], path.states[:, 1])
