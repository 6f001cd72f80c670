import math

import numpy as np
import pytest

from zigzag_lab.errors import DivergenceError
from zigzag_lab.ergodic import monomial, tail_indicator
from zigzag_lab.ess import (
    batch_means_variance,
    ess_batch_means,
    ess_from_run,
    ess_per_switch,
    ess_ratio_gaussian,
    switching_rate_analytic,
    write_ess_csv,
)
from zigzag_lab.sampler import (affine_bound, constant_bound, make_gaussian_inverse,
                                simulate_direct, simulate_thinned)
from zigzag_lab.targets import SwitchingRate, excess_constant, make_gaussian, make_student_t
from zigzag_lab.variance import sigma2_psi

TABLE = (1.5708, 1.5708, 1.1781, 1.32278, 1.22073, 1.33459)


def test_switching_rate_examples():
    g = make_gaussian(1.0)
    np.testing.assert_allclose(switching_rate_analytic(g), 1 / math.sqrt(2 * math.pi),
                               rtol=1e-10)
    np.testing.assert_allclose(switching_rate_analytic(make_student_t(2.0)),
                               0.3535533905932738, rtol=1e-10)
    rate = SwitchingRate(g, excess_constant(0.7))
    np.testing.assert_allclose(switching_rate_analytic(g, rate) - switching_rate_analytic(g),
                               0.7, rtol=1e-10)


@pytest.mark.parametrize("k, expected", list(zip(range(1, 7), TABLE)))
def test_gaussian_ess_ratios(k, expected):
    assert abs(ess_ratio_gaussian(k) - expected) < 1e-5
    assert ess_ratio_gaussian(k) > 1


@pytest.mark.parametrize("k", [1, 3, 4])
def test_ess_per_switch_independent_of_scale(k):
    base = ess_per_switch(make_gaussian(1.0), monomial(k))
    np.testing.assert_allclose(base, TABLE[k - 1], atol=2e-5)
    for var in (0.25, 9.0):
        np.testing.assert_allclose(ess_per_switch(make_gaussian(var), monomial(k)), base,
                                   rtol=1e-6)


def test_ess_from_run_gaussian():
    g = make_gaussian(1.0)
    c = simulate_direct(SwitchingRate(g), make_gaussian_inverse(1.0), 0.0, 1,
                        max_switches=10_000, seed=3)
    r = ess_from_run(c, monomial(1), sigma2_psi(g, None, monomial(1)), 1.0,
                     n_s=switching_rate_analytic(g))
    np.testing.assert_allclose(r.ess, math.pi / 2 * 10_000, rtol=1e-5)
    assert r.switches_observed == 10_000
    observed = ess_from_run(c, monomial(1), 2 * math.sqrt(2 / math.pi), 1.0)
    np.testing.assert_allclose(observed.n_s, c.accepted / c.t_end)


def test_per_proposal_smaller_for_thinning():
    t = make_student_t(2.0)
    rate = SwitchingRate(t)
    c = simulate_thinned(rate, constant_bound(rate), 0.0, 1, max_switches=5000, seed=4,
                         keep_rejected=False)
    g = tail_indicator(1.0)
    r = ess_from_run(c, g, sigma2_psi(t, None, g), 0.2)
    assert c.proposals > c.accepted
    assert r.ess_per_proposal < r.ess_per_switch


def test_divergent_sigma2():
    with pytest.raises(DivergenceError):
        ess_per_switch(make_student_t(2.0), monomial(1))
    c = simulate_direct(SwitchingRate(make_gaussian(1.0)), make_gaussian_inverse(1.0), 0.0,
                        1, max_switches=10, seed=0)
    with pytest.raises(DivergenceError):
        ess_from_run(c, monomial(1), math.inf, 1.0)


def test_batch_means_matches_theory():
    g = make_gaussian(1.0)
    rate = SwitchingRate(g, excess_constant(0.0))
    c = simulate_thinned(rate, affine_bound(rate), 0.0, 1, max_switches=400_000, seed=5,
                         keep_rejected=False)
    ess = ess_batch_means(c, monomial(1), 1.0, n_batches=2000)
    np.testing.assert_allclose(ess / c.accepted, math.pi / 2, rtol=0.1)
    mean, var = batch_means_variance(c, monomial(1), 2000)
    assert abs(mean) < 4 * math.sqrt(var)


def test_csv(tmp_path):
    c = simulate_direct(SwitchingRate(make_gaussian(1.0)), make_gaussian_inverse(1.0), 0.0,
                        1, max_switches=100, seed=0)
    r = ess_from_run(c, monomial(1), 1.6, 1.0, target_name="gaussian")
    path = tmp_path / "e.csv"
    write_ess_csv(path, [r])
    lines = path.read_text().splitlines()
    assert lines[0] == "target,observable,n_s,ess_per_switch,ess,switches,proposals"
    assert lines[1].startswith("gaussian,x^1,")
