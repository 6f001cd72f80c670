import math

import numpy as np
import pytest
from scipy import stats

from zigzag_lab.diffusion import (
    _scaled_setup,
    _zigzag_at_times,
    compare_distributions,
    default_step,
    make_sde_model,
    scaled_zigzag_paths,
    simulate_scaled_zigzag,
    simulate_sde_em,
    simulate_sde_paths,
    write_histogram_csv,
    write_ks_csv,
)
from zigzag_lab.errors import CapabilityError, DomainError, EvaluationError
from zigzag_lab.rng import stream
from zigzag_lab.targets import excess_constant, excess_none, excess_quadratic, make_custom, \
    make_gaussian

G1 = make_gaussian(1.0)
GAMMA = excess_quadratic(1.0)
# U' is negligible on the scales used: a stand-in for a flat potential
FLAT = make_gaussian(1e12)


def test_model_coefficients():
    m = make_sde_model(G1, GAMMA)
    assert m.drift(0.0) == 0.0
    np.testing.assert_allclose(m.drift(1.0), -0.5 * (1 / 2 + 2 / 4), rtol=1e-15)
    np.testing.assert_allclose(m.diffusion(1.0), math.sqrt(0.5), rtol=1e-15)
    assert default_step(m) == 1e-3
    with pytest.raises(DomainError):
        make_sde_model(G1, excess_none())


def test_brownian_variance():
    m = make_sde_model(FLAT, excess_constant(1.0))
    paths = simulate_sde_paths(m, [1.0], 0.5, 10_000, seed=1)
    np.testing.assert_allclose(paths[:, 0].var(ddof=1), 1.0, rtol=0.03)
    assert abs(paths.mean() - 0.5) < 0.04


def test_sde_stationarity():
    m = make_sde_model(G1, GAMMA)
    xs = simulate_sde_em(m, 20_000.0, 0.0, seed=2,
                         record_times=np.arange(1, 20_001, dtype=float))
    assert stats.kstest(xs, "norm").statistic < 0.03


def test_step_halving():
    m = make_sde_model(G1, GAMMA)
    start = lambda rng: rng.standard_normal()  # noqa: E731
    a = simulate_sde_paths(m, [1.0], start, 40_000, seed=3, step=1e-3)
    b = simulate_sde_paths(m, [1.0], start, 40_000, seed=3, step=5e-4, key=1)
    ref = stats.norm.cdf
    assert abs(stats.kstest(a[:, 0], ref).statistic - stats.kstest(b[:, 0], ref).statistic) \
        < 0.01


def test_blow_up_reports_step():
    # outward drift for a mis-signed potential
    bad = make_custom(lambda x: 0.5 * x * x, lambda x: -1e3 * x * x * x, name="unstable")
    m = make_sde_model(bad, excess_constant(1.0))
    with pytest.raises(EvaluationError) as info:
        simulate_sde_em(m, 10.0, 5.0, seed=0, step=0.1)
    assert info.value.where >= 1


def test_switch_count_grows_like_inverse_epsilon():
    counts = {}
    for eps in (1.0, 0.1):
        args, _ = _scaled_setup(G1, GAMMA, eps, None)
        _, counts[eps] = _zigzag_at_times(*args, 0.0, 1, np.array([2000.0]), stream(4, 0))
    assert 7 < counts[0.1] / counts[1.0] < 10


def test_telegraph_variance():
    c = 2.0
    paths = scaled_zigzag_paths(FLAT, excess_constant(c), 0.01, [1.0], 0.0, 2000, seed=5)
    np.testing.assert_allclose(paths[:, 0].var(ddof=1), 1.0 / c, rtol=0.1)


@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_scaled_zigzag_stationarity(eps):
    # unit-spaced samples are correlated, so the run is longer than the sample count suggests
    xs = simulate_scaled_zigzag(G1, GAMMA, eps, 1.0, 0.0, seed=6,
                                record_times=np.arange(1, 50_001, dtype=float))
    assert stats.kstest(xs, "norm").statistic < 0.03


def test_scaled_zigzag_capabilities():
    with pytest.raises(DomainError):
        simulate_scaled_zigzag(G1, GAMMA, 0.0, 1.0, 0.0)
    lap = make_custom(lambda x: abs(x), lambda x: math.copysign(1.0, x))
    with pytest.raises(CapabilityError):
        simulate_scaled_zigzag(lap, GAMMA, 1.0, 1.0, 0.0)


def test_comparison_ordering_and_determinism():
    kw = dict(epsilons=[10.0, 1.0, 0.1], times=[10.0], n_paths=2000, seed=7)
    a = compare_distributions(G1, GAMMA, **kw)
    b = compare_distributions(G1, GAMMA, **kw)
    np.testing.assert_array_equal(a.ks_statistics, b.ks_statistics)
    k = [a.ks(e, 10.0) for e in (10.0, 1.0, 0.1)]
    assert k[0] >= k[1] - 0.01 and k[1] >= k[2] - 0.01
    assert a.ks(10.0, 10.0) > 0.3


def test_csv_outputs(tmp_path):
    rep = compare_distributions(G1, GAMMA, [1.0], [1.0], 200, seed=8)
    write_ks_csv(tmp_path / "ks.csv", rep)
    lines = (tmp_path / "ks.csv").read_text().splitlines()
    assert lines[0] == "epsilon,t,ks" and len(lines) == 2
    write_histogram_csv(tmp_path / "h.csv", rep.zigzag_samples[1.0][:, 0], rep.sde_samples[:, 0])
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count_zigzag,count_sde"
    assert len(lines) == 51
