"""Tests for the singular-quadrature generator, frozen generator, perturbation."""

import numpy as np
import pytest

from anisostable.driver import AlphaSpec, FrozenSpec
from anisostable.fields import constant_field, oscillation_field, sine_field, zero_field
from anisostable.functions import (combine, constant_function, cosine_wave,
                                   fd_gradient_error, gaussian_bump, poly_bump,
                                   standard_battery)
from anisostable.generator import (apply_frozen_generator, apply_generator,
                                   apply_perturbation, axis_second_difference,
                                   frozen_generator_substituted,
                                   generator_on_points)
from anisostable.quadrature import SingularQuadrature

QUAD = SingularQuadrature()


# --- test-function invariants ---------------------------------------------------

@pytest.mark.parametrize("dim", [1, 2, 3])
def test_battery_gradient_consistency(dim):
    rng = np.random.default_rng(5)
    pts = rng.uniform(-2.5, 2.5, size=(20, dim))
    for f in standard_battery(dim):
        assert fd_gradient_error(f, pts) < 1e-6


@pytest.mark.parametrize("dim", [1, 2])
def test_battery_axis_second_consistency(dim):
    rng = np.random.default_rng(6)
    pts = rng.uniform(-2.0, 2.0, size=(15, dim))
    h = 1e-4
    for f in standard_battery(dim):
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = h
            fd = (f(pts + e) - 2.0 * f(pts) + f(pts - e)) / h**2
            assert np.abs(fd - f.axis_second(pts, j)).max() < 1e-4 * max(1.0, f.hessian_sup)


# --- generator basics ------------------------------------------------------------

def test_constant_function_gives_exact_zero():
    f = constant_function(2, level=0.7)
    res = apply_generator(constant_field([1.0, 2.0]), f, [0.3, -0.4], (0.9, 1.5), QUAD)
    assert res.value == 0.0
    assert res.error_bound == 0.0


def test_zero_field_gives_zero():
    f = gaussian_bump(2)
    res = apply_generator(zero_field(2), f, [0.0, 0.0], (1.0, 1.0), QUAD)
    assert res.value == 0.0


@pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5, 1.8])
def test_cosine_eigenfunction_1d(alpha):
    # exp(i x) is an eigenfunction: generator of cos at unit coefficients
    # is -|1|^alpha cos = -cos for every alpha
    f = cosine_wave(1, [1.0])
    field = constant_field([1.0])
    for x in (0.0, 0.7, -1.9):
        res = apply_generator(field, f, [x], (alpha,), QUAD)
        assert abs(res.value - (-np.cos(x))) <= res.error_bound
        # cosine has no spatial decay, so the tail term keeps the bound modest
        assert res.error_bound < 2e-2
        assert abs(res.value - (-np.cos(x))) < 5e-3


def test_frozen_equals_variable_for_constant_field():
    spec = AlphaSpec.of(0.8, 1.4)
    field = constant_field([1.3, 0.6])
    frozen = FrozenSpec(spec, (1.3, 0.6))
    f = gaussian_bump(2, scale=1.0)
    for x in ([0.0, 0.0], [1.1, -0.4]):
        a = apply_generator(field, f, x, spec, QUAD)
        b = apply_frozen_generator(frozen, f, x, QUAD)
        assert a.value == pytest.approx(b.value, abs=1e-14)


def test_frozen_weighted_vs_substituted_forms():
    spec = AlphaSpec.of(0.7, 1.6)
    frozen = FrozenSpec(spec, (1.7, 0.45))
    f = gaussian_bump(2, scale=1.2)
    rng = np.random.default_rng(11)
    for x in rng.uniform(-2, 2, size=(10, 2)):
        a = apply_frozen_generator(frozen, f, x, QUAD)
        b = frozen_generator_substituted(frozen, f, x, QUAD)
        assert a.within(b)
        assert abs(a.value - b.value) < 1e-8 + 1e-6 * abs(a.value)


def test_generator_linearity():
    spec = AlphaSpec.of(1.1, 0.9)
    field = sine_field([1.0, 1.5], [0.3, 0.2])
    f = gaussian_bump(2, scale=0.9)
    g = poly_bump(2, radius=2.5)
    fg = combine(f, g, 1.0, 1.0)
    x = [0.4, -0.2]
    rf = apply_generator(field, f, x, spec, QUAD)
    rg = apply_generator(field, g, x, spec, QUAD)
    rfg = apply_generator(field, fg, x, spec, QUAD)
    assert abs(rfg.value - (rf.value + rg.value)) <= (
        rfg.error_bound + rf.error_bound + rg.error_bound)


def test_frozen_translation_covariance():
    frozen = FrozenSpec.of((0.9, 1.3), (1.0, 2.0))
    y = np.array([0.8, -0.5])
    f = gaussian_bump(2, scale=1.0)
    f_shift = gaussian_bump(2, scale=1.0, center=y)
    x = np.array([0.3, 0.9])
    a = apply_frozen_generator(frozen, f_shift, x, QUAD)
    b = apply_frozen_generator(frozen, f, x - y, QUAD)
    assert a.within(b)
    assert a.value == pytest.approx(b.value, abs=1e-10)


def test_positive_maximum_principle():
    spec = AlphaSpec.of(0.8, 1.5)
    field = sine_field([1.0, 1.0], [0.4, 0.3])
    f = gaussian_bump(2, scale=1.3)
    res = apply_generator(field, f, [0.0, 0.0], spec, QUAD)
    assert res.value <= res.error_bound


def test_quadrature_convergence_with_refinement():
    spec = AlphaSpec.of(1.4,)
    field = constant_field([1.0])
    f = gaussian_bump(1, scale=0.8)
    x = [0.5]
    q1 = SingularQuadrature(eps=1e-3, H=1e3)
    q2 = SingularQuadrature(eps=5e-4, H=2e3)
    r1 = apply_generator(field, f, x, spec, q1)
    r2 = apply_generator(field, f, x, spec, q2)
    assert r2.error_bound < r1.error_bound
    assert abs(r1.value - r2.value) <= r1.error_bound + r2.error_bound


# --- perturbation ----------------------------------------------------------------

def test_perturbation_zero_at_anchor():
    spec = AlphaSpec.of(0.9, 1.2)
    field = sine_field([1.2, 1.0], [0.3, 0.25])
    x0 = np.array([0.2, 0.3])
    frozen = field.frozen_at(spec, x0)
    f = gaussian_bump(2)
    res = apply_perturbation(field, frozen, f, x0, QUAD)
    assert res.value == 0.0


def test_perturbation_zero_for_constant_field():
    spec = AlphaSpec.of(0.9, 1.2)
    field = constant_field([1.5, 0.7])
    frozen = field.frozen_at(spec, np.zeros(2))
    f = gaussian_bump(2)
    res = apply_perturbation(field, frozen, f, [1.0, -2.0], QUAD)
    assert res.value == 0.0


def test_perturbation_direct_vs_difference():
    spec = AlphaSpec.of(0.8, 1.5)
    field = sine_field([1.0, 1.3], [0.35, 0.3])
    x0 = np.zeros(2)
    frozen = field.frozen_at(spec, x0)
    f = gaussian_bump(2, scale=1.1)
    rng = np.random.default_rng(3)
    for x in rng.uniform(-2, 2, size=(6, 2)):
        direct = apply_perturbation(field, frozen, f, x, QUAD)
        diff_val = (apply_generator(field, f, x, spec, QUAD).value
                    - apply_frozen_generator(frozen, f, x, QUAD).value)
        budget = (direct.error_bound
                  + apply_generator(field, f, x, spec, QUAD).error_bound
                  + apply_frozen_generator(frozen, f, x, QUAD).error_bound)
        assert abs(direct.value - diff_val) <= budget + 1e-10


def test_perturbation_pointwise_eta_bound():
    spec = AlphaSpec.of(1.0, 1.0)
    eta = 0.2
    field = oscillation_field(spec, eta, wavevector=[1.0, 0.7])
    # anchor where cos(k.x0) = 0 so the weight deviation is exactly eta-bounded
    x0 = np.array([np.pi / 2.0, 0.0])
    frozen = field.frozen_at(spec, x0)
    f = gaussian_bump(2)
    rng = np.random.default_rng(8)
    for x in rng.uniform(-3, 3, size=(8, 2)):
        res = apply_perturbation(field, frozen, f, x, QUAD)
        msum = sum(
            abs(axis_second_difference(f, x, j, spec.values[j], QUAD).value)
            for j in range(2))
        assert abs(res.value) <= 0.5 * eta * msum + res.error_bound + 1e-12


# --- batch route ------------------------------------------------------------------

def test_batch_matches_pointwise():
    spec = AlphaSpec.of(0.8, 1.4)
    field = sine_field([1.0, 1.2], [0.3, 0.2])
    f = gaussian_bump(2, scale=1.0)
    rng = np.random.default_rng(4)
    pts = rng.uniform(-2, 2, size=(12, 2))
    vals, bound = generator_on_points(field, f, pts, spec, QUAD)
    for i, x in enumerate(pts):
        ref = apply_generator(field, f, x, spec, QUAD)
        assert abs(vals[i] - ref.value) <= bound + ref.error_bound + 1e-12
        assert abs(vals[i] - ref.value) < 5e-5
