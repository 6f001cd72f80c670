import math

import numpy as np
import pytest
from scipy import stats

from zigzag_lab.errors import DomainError, EvaluationError
from zigzag_lab.ergodic import (
    average_exact_moment,
    average_exact_tail,
    average_quadrature,
    generic,
    monomial,
    path_average,
    running_average_series,
    tail_indicator,
    time_integral,
    write_series_csv,
    write_series_stats_csv,
)
from zigzag_lab.rng import stream
from zigzag_lab.sampler import EventChain, make_gaussian_inverse, simulate_direct
from zigzag_lab.targets import SwitchingRate, make_gaussian


def chain_from(x0, thetas, taus):
    """Hand-built chain starting at ``x0`` with the given segment directions and durations."""
    thetas = np.asarray(thetas, dtype=np.int8)
    taus = np.asarray(taus, dtype=float)
    times = np.concatenate(([0.0], np.cumsum(taus)))
    pos = np.concatenate(([x0], x0 + np.cumsum(thetas * taus)))
    dirs = np.concatenate((thetas, thetas[-1:]))
    kinds = np.zeros(len(times), dtype=np.int8)
    n = len(taus)
    return EventChain(times, pos, dirs, kinds, n, n, n)


def random_chain(n, seed):
    rng = stream(seed)
    th = np.where(np.arange(n) % 2 == 0, 1, -1)
    return chain_from(rng.normal(), th, rng.exponential(1.0, n))


def test_single_segment_moments():
    c = chain_from(0.0, [1], [1.0])
    assert average_exact_moment(c, 1).value == 0.5
    np.testing.assert_allclose(average_exact_moment(c, 2).value, 1 / 3, rtol=1e-15)
    r = average_exact_moment(c, 1)
    assert r.total_time == c.t_end and r.segment_count == 1


def test_tail_overlaps():
    assert average_exact_tail(chain_from(0.0, [1], [2.0]), 1.0).value * 2.0 == 1.0
    assert average_exact_tail(chain_from(2.0, [-1], [2.0]), 3.0).value == 0.0
    assert average_exact_tail(chain_from(-1.0, [1], [2.0]), 1.0).value == 0.0
    assert average_exact_tail(random_chain(100, 1), -1e15).value == 1.0


def test_empty_chain_rejected():
    c = EventChain(np.zeros(1), np.zeros(1), np.ones(1, dtype=np.int8),
                   np.zeros(1, dtype=np.int8), 0, 0, 0)
    with pytest.raises(DomainError):
        average_exact_moment(c, 1)
    with pytest.raises(DomainError):
        average_exact_tail(c, 0.0)
    with pytest.raises(DomainError):
        average_exact_moment(random_chain(3, 0), 0)


def test_first_moment_formula():
    c = random_chain(500, 2)
    x, d, tau = c.segments()
    manual = np.sum(tau * x + d * tau ** 2 / 2) / c.t_end
    np.testing.assert_allclose(average_exact_moment(c, 1).value, manual, rtol=1e-12)


@pytest.mark.parametrize("p", range(1, 7))
def test_exact_matches_quadrature(p):
    c = random_chain(1000, 3)
    exact = average_exact_moment(c, p).value
    quad = average_quadrature(c, generic(lambda x: x ** p)).value
    assert abs(exact - quad) <= 1e-10 * max(1.0, abs(exact))


def test_quadrature_examples():
    c = random_chain(200, 4)
    np.testing.assert_allclose(average_quadrature(c, generic(np.square), order=2).value,
                               average_exact_moment(c, 2).value, rtol=1e-14)
    seg = chain_from(0.0, [1], [math.pi])
    assert abs(average_quadrature(seg, generic(np.cos), order=8).value) < 1e-12


def test_quadrature_rejects_indicator_and_bad_values():
    c = random_chain(20, 5)
    with pytest.raises(DomainError):
        average_quadrature(c, tail_indicator(0.0))
    assert path_average(c, tail_indicator(0.0)).value == average_exact_tail(c, 0.0).value
    bad = generic(lambda x: np.where(x > 0.5, np.inf, x))
    with pytest.raises(EvaluationError):
        average_quadrature(chain_from(0.0, [1, -1], [1.0, 1.0]), bad)


def test_observable_evaluation():
    assert monomial(3)(2.0) == 8.0
    f = tail_indicator(1.0)
    assert f(1.0) == 1.0 and f(0.999) == 0.0
    np.testing.assert_array_equal(f(np.array([0.0, 1.0, 2.0])), [0.0, 1.0, 1.0])
    assert monomial(2, centering=1.0).centered()(3.0) == 8.0
    with pytest.raises(DomainError):
        monomial(2).centered()


def test_additivity():
    c = random_chain(1000, 6)
    f = monomial(3)
    half = c.t_end / 2
    a, b = time_integral(c, f, [half, c.t_end])
    whole = average_exact_moment(c, 3).value
    combo = 0.5 * (a / half) + 0.5 * ((b - a) / half)
    np.testing.assert_allclose(combo, whole, rtol=1e-12)


def test_running_series():
    c = random_chain(100, 7)
    (t, v), = running_average_series(c, monomial(2), [c.t_end])
    assert t == c.t_end
    np.testing.assert_allclose(v, average_exact_moment(c, 2).value, rtol=1e-13)
    one = generic(lambda x: np.ones_like(x))
    vals = [v for _, v in running_average_series(c, one, [1.0, 5.0, c.t_end])]
    np.testing.assert_allclose(vals, 1.0, rtol=1e-14)
    with pytest.raises(DomainError):
        running_average_series(c, one, [1.0, c.t_end + 1.0])
    with pytest.raises(DomainError):
        running_average_series(c, one, [2.0, 1.0])


def test_gaussian_tail_average_over_replicates():
    rate = SwitchingRate(make_gaussian(1.0))
    inv = make_gaussian_inverse(1.0)
    n, horizon = 2000, 1000.0
    vals = np.empty(n)
    for i in range(n):
        g = stream(77, i)
        c = simulate_direct(rate, inv, g.standard_normal(), 1 if g.random() < 0.5 else -1,
                            t_max=horizon, seed=g, validate=i == 0)
        vals[i] = average_exact_tail(c, 1.0).value
    p1 = stats.norm.sf(1.0)
    se = vals.std(ddof=1) / math.sqrt(n)
    assert abs(vals.mean() - p1) < 3 * se


def test_csv_writers(tmp_path):
    p = tmp_path / "s.csv"
    write_series_csv(p, [1.0, 2.0], [0.5, 0.25])
    assert p.read_text().splitlines() == ["T,estimate", "1,0.5", "2,0.25"]
    write_series_stats_csv(p, [1.0], [0.1], [2.0])
    assert p.read_text().splitlines()[0] == "T,mean,var_scaled"
