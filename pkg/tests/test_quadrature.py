import math

import numpy as np
import pytest

from zigzag_lab.errors import QuadratureError
from zigzag_lab.quadrature import (QuadratureSettings, integrate, integrate_half_line,
                                   integrate_line)


def test_gaussian_integral():
    r = integrate_line(lambda x: math.exp(-0.5 * x * x))
    np.testing.assert_allclose(r.value, math.sqrt(2 * math.pi), rtol=1e-12)


def test_half_line_and_reversed_limits():
    r = integrate_half_line(lambda x: math.exp(-x), 0.0, +1)
    np.testing.assert_allclose(r.value, 1.0, rtol=1e-12)
    r = integrate_half_line(lambda x: math.exp(x), 0.0, -1)
    np.testing.assert_allclose(r.value, 1.0, rtol=1e-12)
    np.testing.assert_allclose(integrate(math.cos, math.pi, 0.0).value, 0.0, atol=1e-13)


def test_breakpoints_handle_kink():
    r = integrate(lambda x: abs(x - 0.3), -1.0, 1.0, breakpoints=(0.3,))
    np.testing.assert_allclose(r.value, 0.5 * (1.3 ** 2 + 0.7 ** 2), rtol=1e-13)


def test_heavy_tail_convergent():
    r = integrate_line(lambda x: 1.0 / (1.0 + x * x), check_divergence=True)
    assert not r.divergent
    np.testing.assert_allclose(r.value, math.pi, rtol=1e-10)


def test_divergence_flag():
    r = integrate_line(lambda x: 1.0 / (1.0 + abs(x)), check_divergence=True)
    assert r.divergent and math.isinf(r.value)


def test_odd_integrand_not_divergent():
    r = integrate_line(lambda x: x * math.exp(-0.5 * x * x), check_divergence=True)
    assert not r.divergent
    assert abs(r.value) < 1e-12


def test_non_finite_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: math.inf, 0.0, 1.0)


def test_settings_validation():
    with pytest.raises(ValueError):
        QuadratureSettings(abs_tol=0.0)
