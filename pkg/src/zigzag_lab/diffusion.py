"""Diffusive limit of the Zig-Zag process with a large excess switching rate.

With switching rate ``max(0, theta U') + gamma / eps`` the sped-up position
``X^eps(t / eps)`` approaches, as ``eps -> 0``, the Ito diffusion

    d xi = -1/2 (U'/gamma + gamma'/gamma^2) dt + sqrt(1/gamma) dW,

which also has invariant law ``pi``. This module simulates both sides and
compares their laws with two-sample Kolmogorov-Smirnov statistics.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba as nb
import numpy as np
from scipy import stats

from .errors import CapabilityError, DomainError, EvaluationError
from .rng import map_replicates, stream
from .sampler import _invert_bound
from .targets import ExcessRate, SwitchingRate, TargetModel, _check_theta

__all__ = [
    "SdeModel",
    "ComparisonReport",
    "make_sde_model",
    "default_step",
    "simulate_sde_em",
    "simulate_sde_paths",
    "simulate_scaled_zigzag",
    "scaled_zigzag_paths",
    "compare_distributions",
    "write_histogram_csv",
    "write_ks_csv",
    "HIST_BINS",
    "HIST_RANGE",
]

HIST_BINS = 50
HIST_RANGE = (-4.0, 4.0)


@dataclass(frozen=True, eq=False)
class SdeModel:
    """Limiting diffusion ``d xi = b(xi) dt + s(xi) dW``."""

    target: TargetModel
    gamma: ExcessRate
    fd_derivative: bool = False

    def drift(self, x):
        g = float(self.gamma(x))
        return -0.5 * (float(self.target.grad(x)) / g + float(self.gamma.derivative(x)) / (g * g))

    def diffusion(self, x):
        return math.sqrt(1.0 / float(self.gamma(x)))

    def gamma_prime(self, x):
        return float(self.gamma.derivative(x))


def make_sde_model(target: TargetModel, gamma: ExcessRate) -> SdeModel:
    """Limiting SDE for ``target`` and a positive excess rate ``gamma``."""
    if gamma.is_zero:
        raise DomainError("the diffusive limit needs a positive excess rate")
    if gamma.kind in ("constant", "quadratic") and not gamma.coefficient > 0:
        raise DomainError("excess rate must be positive")
    return SdeModel(target, gamma, gamma.fd_derivative)


def default_step(model: SdeModel) -> float:
    """``1e-3 * min(1, gamma_min)``."""
    try:
        gmin = model.gamma.minimum
    except DomainError:
        gmin = 1.0
    return 1e-3 * min(1.0, gmin)


@nb.njit(nogil=True)
def _em_kernel(grad, tp, gam, gdp, gp, x0, h, n_steps, record_steps, rng):
    out = np.empty(record_steps.shape[0])
    x = x0
    j = 0
    sh = math.sqrt(h)
    # record_steps sorted; a 0 entry records the start
    while j < record_steps.shape[0] and record_steps[j] == 0:
        out[j] = x
        j += 1
    for i in range(1, n_steps + 1):
        g = gam(x, gp)
        b = -0.5 * (grad(x, tp) / g + gdp(x, gp) / (g * g))
        x = x + b * h + sh * math.sqrt(1.0 / g) * rng.standard_normal()
        if not math.isfinite(x):
            return out, i
        while j < record_steps.shape[0] and record_steps[j] == i:
            out[j] = x
            j += 1
    return out, -1


def _em_functions(model):
    grad, _, tp = model.target.sampler_functions()
    gam, gdp, gp = model.gamma.sampler_functions()
    compiled = model.target.is_compiled and model.gamma.kernel is not None
    return (grad, tp, gam, gdp, gp), compiled


def _em_run(model, times, x0, step, rng):
    times = np.asarray(times, dtype=float)
    if not step > 0:
        raise DomainError("step must be positive")
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise DomainError("output times must be non-negative and sorted")
    rec = np.rint(times / step).astype(np.int64)
    n = int(rec[-1]) if len(rec) else 0
    fns, compiled = _em_functions(model)
    kernel = _em_kernel if compiled else _em_kernel.py_func
    out, bad = kernel(*fns, float(x0), float(step), n, rec, rng)
    if bad >= 0:
        raise EvaluationError(f"Euler-Maruyama state not finite at step {bad}", where=bad)
    return out


def simulate_sde_em(model: SdeModel, t_end: float, x0: float, step: Optional[float] = None,
                    seed=0, record_times: Optional[Sequence[float]] = None):
    """Euler-Maruyama path of the limiting SDE.

    Returns ``xi(t_end)``, or the values at ``record_times`` (sorted, each a
    multiple of ``step`` up to rounding) when given.

    Raises:
        EvaluationError: the state became non-finite; carries the step index.
    """
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    step = default_step(model) if step is None else float(step)
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, 0)
    if record_times is None:
        return float(_em_run(model, [t_end], x0, step, rng)[0])
    return _em_run(model, record_times, x0, step, rng)


def simulate_sde_paths(model: SdeModel, times: Sequence[float], x0, n_paths: int,
                       seed: int, step: Optional[float] = None, threads: int = 1,
                       key: int = 0) -> np.ndarray:
    """``n_paths`` independent EM paths recorded at ``times``; shape ``(n_paths, len(times))``.

    ``x0`` is a number or a callable ``rng -> x0``. Path ``i`` uses stream
    ``(seed, key, i)``.
    """
    step = default_step(model) if step is None else float(step)

    def one(i):
        rng = stream(seed, key, i)
        start = x0(rng) if callable(x0) else x0
        return _em_run(model, times, start, step, rng)

    return np.array(map_replicates(one, n_paths, threads)).reshape(n_paths, len(times))


# -- scaled Zig-Zag -----------------------------------------------------------

@nb.njit(nogil=True)
def _zigzag_at_times(grad, tp, gam, gp, L, window, x0, th0, out_times, rng):
    """Thinned Zig-Zag (affine canonical bound + windowed convex excess bound);
    returns positions at ``out_times`` and the number of switches."""
    out = np.empty(out_times.shape[0])
    t = 0.0
    x = x0
    th = th0
    a = th * grad(x, tp)
    j = 0
    switches = 0
    while j < out_times.shape[0]:
        G = max(gam(x, gp), gam(x + th * window, gp))
        z = -math.log(1.0 - rng.random())
        tau = _invert_bound(z, a, 1, 0.0, L, G)
        reanchor = tau > window
        step = window if reanchor else tau
        while j < out_times.shape[0] and out_times[j] <= t + step:
            out[j] = x + th * (out_times[j] - t)
            j += 1
        if j == out_times.shape[0]:
            break
        t += step
        x += th * step
        du = grad(x, tp)
        if not reanchor:
            lam = max(0.0, th * du) + gam(x, gp)
            Lam = max(0.0, a + L * tau) + G
            if rng.random() * Lam < lam:
                th = -th
                switches += 1
        a = th * du
    return out, switches


def _scaled_setup(target, gamma, epsilon, window):
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if not (gamma.convex or gamma.is_constant):
        raise CapabilityError("scaled Zig-Zag needs a constant or convex excess rate")
    if target.hessian_bound is None:
        raise CapabilityError(f"{target.name} has no Hessian bound for thinning")
    ex = gamma.scaled(1.0 / epsilon)
    grad, _, tp = target.sampler_functions()
    gam, _, gp = ex.sampler_functions()
    compiled = target.is_compiled and ex.kernel is not None
    if window is None:
        window = 0.5 * target.scale
    return (grad, tp, gam, gp, float(target.hessian_bound), float(window)), compiled


def simulate_scaled_zigzag(target: TargetModel, gamma: ExcessRate, epsilon: float,
                           t_end: float, x0: float, seed=0, theta0=None,
                           window: Optional[float] = None, record_times=None):
    """``X^eps(t_end / eps)`` for the Zig-Zag process with rate ``lambda^0 + gamma/eps``.

    Args:
        theta0: initial direction; drawn uniformly from the stream when None.
        record_times: optional sorted diffusive times ``t``; returns
            ``X^eps(t / eps)`` for each instead of the terminal value.

    Returns:
        terminal position (float) or an array for ``record_times``.
    """
    if not t_end > 0:
        raise DomainError("t_end must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, 0)
    args, compiled = _scaled_setup(target, gamma, epsilon, window)
    th0 = (1 if rng.random() < 0.5 else -1) if theta0 is None else _check_theta(theta0)
    times = np.asarray([t_end] if record_times is None else record_times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise DomainError("record times must be sorted and non-negative")
    kernel = _zigzag_at_times if compiled else _zigzag_at_times.py_func
    out, _ = kernel(*args, float(x0), th0, times / epsilon, rng)
    return float(out[0]) if record_times is None else out


def scaled_zigzag_paths(target, gamma, epsilon, times, x0, n_paths, seed, threads=1,
                        key=0, window=None) -> np.ndarray:
    """Independent scaled Zig-Zag paths at diffusive ``times``; shape ``(n_paths, len(times))``.

    Path ``i`` uses stream ``(seed, key, i)``; the initial direction is uniform.
    """
    args, compiled = _scaled_setup(target, gamma, epsilon, window)
    kernel = _zigzag_at_times if compiled else _zigzag_at_times.py_func
    phys = np.asarray(times, dtype=float) / epsilon

    def one(i):
        rng = stream(seed, key, i)
        start = x0(rng) if callable(x0) else x0
        th0 = 1 if rng.random() < 0.5 else -1
        return kernel(*args, float(start), th0, phys, rng)[0]

    return np.array(map_replicates(one, n_paths, threads)).reshape(n_paths, len(phys))


# -- comparison ---------------------------------------------------------------

@dataclass
class ComparisonReport:
    epsilon_values: list
    times: list
    ks_statistics: np.ndarray  # (n_eps, n_times)
    sample_counts: int
    fd_derivative: bool = False
    zigzag_samples: dict = field(default_factory=dict, repr=False)
    sde_samples: Optional[np.ndarray] = field(default=None, repr=False)

    def ks(self, epsilon, t) -> float:
        return float(self.ks_statistics[self.epsilon_values.index(epsilon),
                                         self.times.index(t)])


# stream keys: SDE paths use key 0, epsilon i uses key i + 1
def compare_distributions(target: TargetModel, gamma: ExcessRate, epsilons: Sequence[float],
                          times: Sequence[float], n_paths: int, seed: int, x0: float = 2.0,
                          step: Optional[float] = None, threads: int = 1,
                          window: Optional[float] = None) -> ComparisonReport:
    """Two-sample KS between ``X^eps(t / eps)`` and ``xi(t)`` for each ``(eps, t)``."""
    if any(not e > 0 for e in epsilons):
        raise DomainError("all epsilon values must be positive")
    times = sorted(float(t) for t in times)
    model = make_sde_model(target, gamma)
    sde = simulate_sde_paths(model, times, x0, n_paths, seed, step, threads, key=0)
    ks = np.empty((len(epsilons), len(times)))
    zz = {}
    for i, eps in enumerate(epsilons):
        paths = scaled_zigzag_paths(target, gamma, eps, times, x0, n_paths, seed,
                                    threads, key=i + 1, window=window)
        zz[float(eps)] = paths
        for j in range(len(times)):
            ks[i, j] = stats.ks_2samp(paths[:, j], sde[:, j]).statistic
    return ComparisonReport([float(e) for e in epsilons], times, ks, int(n_paths),
                            model.fd_derivative, zz, sde)


def write_histogram_csv(path, zigzag_values, sde_values, bins=HIST_BINS, rng=HIST_RANGE):
    """``bin_left,bin_right,count_zigzag,count_sde`` over uniform bins."""
    edges = np.linspace(rng[0], rng[1], bins + 1)
    cz, _ = np.histogram(zigzag_values, edges)
    cs, _ = np.histogram(sde_values, edges)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count_zigzag", "count_sde"])
        for k in range(bins):
            w.writerow([f"{edges[k]:.17g}", f"{edges[k + 1]:.17g}", int(cz[k]), int(cs[k])])


def write_ks_csv(path, report: ComparisonReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "t", "ks"])
        for i, e in enumerate(report.epsilon_values):
            for j, t in enumerate(report.times):
                w.writerow([f"{e:.17g}", f"{t:.17g}", f"{report.ks_statistics[i, j]:.17g}"])
