import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zigzag_lab.errors import DomainError, EvaluationError, NormalizationError
from zigzag_lab.targets import (
    Direction,
    SwitchingRate,
    excess_constant,
    excess_none,
    excess_quadratic,
    lambda_rate,
    make_custom,
    make_gaussian,
    make_student_t,
    model_from_config,
    parse_excess,
)

GRID = np.linspace(-20.0, 20.0, 1000)
BUILTINS = [make_gaussian(1.0), make_gaussian(4.0), make_student_t(1.0), make_student_t(2.0),
            make_student_t(7.5)]


@pytest.mark.parametrize("x, theta, expected", [(-2.0, 1, 0.0), (2.0, 1, 2.0)])
def test_lambda_gaussian(x, theta, expected):
    rate = SwitchingRate(make_gaussian(1.0))
    assert lambda_rate(rate, x, theta) == expected


def test_lambda_student():
    rate = SwitchingRate(make_student_t(2.0))
    np.testing.assert_allclose(lambda_rate(rate, 1.0, 1), 1.0, rtol=1e-15)


def test_lambda_non_finite_gradient():
    t = make_custom(lambda x: 0.5 * x * x, lambda x: math.inf if x > 1 else x, name="bad")
    with pytest.raises(EvaluationError) as info:
        lambda_rate(SwitchingRate(t), 2.0, 1)
    assert info.value.where == 2.0


def test_gaussian_values():
    t = make_gaussian(1.0)
    assert t.potential(1.0) == 0.5
    assert t.grad(1.0) == 1.0
    assert make_gaussian(4.0).grad(2.0) == 0.5
    np.testing.assert_allclose(t.normalization, 2.5066282746, rtol=1e-10)
    assert t.hessian_bound == 1.0


def test_student_values():
    t = make_student_t(2.0)
    assert t.grad(1.0) == 1.0
    np.testing.assert_allclose(t.normalization, 2.8284271247461903, rtol=1e-14)
    cauchy = make_student_t(1.0)
    assert cauchy.grad_bound == 1.0
    assert cauchy.grad(1.0) == 1.0
    assert abs(cauchy.grad(1e8)) < 1e-7


@pytest.mark.parametrize("factory, bad", [(make_gaussian, 0.0), (make_gaussian, -1.0),
                                          (make_student_t, 0.0)])
def test_invalid_parameters(factory, bad):
    with pytest.raises(DomainError):
        factory(bad)


@pytest.mark.parametrize("t", BUILTINS, ids=lambda t: t.name)
def test_builtin_invariants(t):
    h = 1e-5
    fd = (t.potential(GRID + h) - t.potential(GRID - h)) / (2 * h)
    np.testing.assert_allclose(fd, t.grad(GRID), rtol=1e-6, atol=1e-9)
    if t.grad_bound is not None:
        assert np.all(np.abs(t.grad(GRID)) <= t.grad_bound + 1e-15)
    if t.hessian_bound is not None:
        h2 = 1e-4
        d2 = (t.grad(GRID + h2) - t.grad(GRID - h2)) / (2 * h2)
        assert np.all(np.abs(d2) <= t.hessian_bound * (1 + 1e-6))
    rate = SwitchingRate(t)
    diff = [lambda_rate(rate, x, 1) - lambda_rate(rate, x, -1) for x in GRID]
    np.testing.assert_allclose(diff, t.grad(GRID), atol=1e-12)


def test_canonical_gaussian_zero_set():
    rate = SwitchingRate(make_gaussian(1.0))
    for x in GRID:
        for th in (-1, 1):
            assert (lambda_rate(rate, x, th) == 0.0) == (th * x <= 0)


def test_custom_laplace_normalization():
    t = make_custom(lambda x: abs(x), lambda x: math.copysign(1.0, x), name="laplace")
    np.testing.assert_allclose(t.normalization, 2.0, rtol=1e-10)


def test_custom_matches_gaussian():
    g = make_gaussian(1.0)
    c = make_custom(lambda x: 0.5 * x * x, lambda x: x)
    np.testing.assert_allclose(c.normalization, g.normalization, rtol=1e-8)
    for x in (-3.0, 0.1, 2.5):
        assert c.potential(x) == g.potential(x)
        assert c.grad(x) == g.grad(x)


def test_custom_not_integrable():
    with pytest.raises(NormalizationError):
        make_custom(lambda x: -x * x, lambda x: -2 * x)


def test_direction_involution():
    assert -Direction(1) == Direction(-1)
    assert -(-Direction(-1)) == Direction(-1)


def test_excess_rates():
    rate = SwitchingRate(make_gaussian(1.0), excess_constant(0.5))
    assert lambda_rate(rate, -2.0, 1) == 0.5
    assert not rate.canonical
    q = excess_quadratic(2.0)
    assert q(3.0) == 20.0
    assert parse_excess("quadratic:1")(1.0) == 2.0
    assert parse_excess("const:3")(7.0) == 3.0
    assert parse_excess("none").is_zero
    assert excess_none().is_zero
    with pytest.raises(DomainError):
        parse_excess("cubic:1")
    with pytest.raises(DomainError):
        excess_constant(-1.0)


def test_model_from_config():
    r = model_from_config("gaussian", 2.0, "const:1")
    assert r.target.param == 4.0
    assert r.excess.coefficient == 1.0
    assert model_from_config("student_t", 3.0).target.param == 3.0


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-1e3, 1e3), th=st.sampled_from([-1, 1]), c=st.floats(0, 10))
def test_lambda_nonnegative_and_rearranged(x, th, c):
    rate = SwitchingRate(make_student_t(3.0), excess_constant(c))
    a, b = lambda_rate(rate, x, th), lambda_rate(rate, x, -th)
    assert a >= 0 and b >= 0
    np.testing.assert_allclose(a - b, th * rate.target.grad(x), atol=1e-12)
