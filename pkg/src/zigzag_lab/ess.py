"""Switching rates and effective sample size of Zig-Zag ergodic averages.

``N_S`` is the long-run number of switches per unit time. With ``sigma_f^2``
the asymptotic variance, a run with ``N`` switches is worth

    ESS = Var_pi(f) / (sigma_f^2 N_S) * N

independent samples. Costs can be counted per switch (direct simulation) or
per proposal (thinning, one gradient evaluation each).
"""

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import oracles
from .ergodic import Observable, time_integral
from .errors import DivergenceError, DomainError, InsufficientDataError
from .quadrature import DEFAULT_SETTINGS, integrate_line
from .variance import sigma2_psi, variance_under_pi
from .sampler import EventChain
from .targets import SwitchingRate, TargetModel

__all__ = [
    "EssReport",
    "switching_rate_analytic",
    "ess_ratio_gaussian",
    "ess_per_switch",
    "ess_from_run",
    "batch_means_variance",
    "ess_batch_means",
    "write_ess_csv",
]


@dataclass(frozen=True)
class EssReport:
    target: str
    observable: str
    n_s: float
    ess_per_switch: float
    ess: float
    switches_observed: int
    proposals_observed: int

    @property
    def ess_per_proposal(self) -> float:
        return self.ess / self.proposals_observed if self.proposals_observed else math.nan


def switching_rate_analytic(target: TargetModel, rate: Optional[SwitchingRate] = None,
                            settings=DEFAULT_SETTINGS) -> float:
    """``N_S = (1/2) int (|U'| + 2 gamma) pi``.

    Raises:
        DivergenceError: the integral is infinite.
    """
    if not math.isfinite(target.normalization):
        raise DomainError("N_S needs a proper target")
    ex = rate.excess if rate is not None else None
    k = target.normalization

    def integrand(x):
        w = math.exp(-float(target.potential(x)))
        if w == 0.0:
            return 0.0
        lam = abs(float(target.grad(x)))
        if ex is not None:
            lam += 2.0 * float(ex(x))
        return lam * w / k

    res = integrate_line(integrand, (target.mode,), target.mode, target.scale, settings,
                         check_divergence=True)
    if res.divergent:
        raise DivergenceError("switching rate integral diverges")
    return 0.5 * res.value


def ess_ratio_gaussian(k: int) -> float:
    """``ESS / N(T)`` for the ``k``-th moment of any centered Gaussian."""
    return oracles.gaussian_ess_ratio(k)


def ess_per_switch(target: TargetModel, g: Observable,
                   rate: Optional[SwitchingRate] = None, settings=DEFAULT_SETTINGS) -> float:
    """``Var_pi(g) / (sigma_g^2 N_S)`` evaluated by quadrature.

    Raises:
        DivergenceError: ``sigma_g^2`` or ``N_S`` is infinite.
    """
    s2 = sigma2_psi(target, rate, g, settings)
    if not math.isfinite(s2):
        raise DivergenceError(f"asymptotic variance of {g.name} diverges")
    return variance_under_pi(target, g, settings=settings) / (
        s2 * switching_rate_analytic(target, rate, settings))


def ess_from_run(chain: EventChain, g: Observable, sigma2: float, var_pi: float,
                 n_s: Optional[float] = None, target_name: str = "") -> EssReport:
    """Effective sample size of a run given the theoretical variance constants.

    Args:
        chain: the run; its switch and proposal counts set the cost.
        sigma2: asymptotic variance of ``g``.
        var_pi: ``Var_pi(g)``.
        n_s: switches per unit time; defaults to the run's observed rate.

    Raises:
        DivergenceError: ``sigma2`` is infinite or not positive.
    """
    if not (math.isfinite(sigma2) and sigma2 > 0):
        raise DivergenceError(f"ESS undefined for sigma2={sigma2!r}")
    if n_s is None:
        if chain.accepted == 0:
            raise InsufficientDataError("run has no switches")
        n_s = chain.accepted / chain.t_end
    per_switch = var_pi / (sigma2 * n_s)
    return EssReport(target_name, g.name, float(n_s), per_switch,
                     per_switch * chain.accepted, int(chain.accepted),
                     int(chain.proposals))


def batch_means_variance(chain: EventChain, g: Observable, n_batches: int = 10_000):
    """Estimate ``Var[pi_T(g)]`` from equal-time batch averages.

    Returns:
        ``(mean, variance_of_mean)``.
    """
    if n_batches < 2:
        raise DomainError("need at least two batches")
    edges = np.linspace(0.0, chain.t_end, n_batches + 1)
    ints = time_integral(chain, g, edges)
    width = chain.t_end / n_batches
    means = np.diff(ints) / width
    return float(means.mean()), float(means.var(ddof=1) / n_batches)


def ess_batch_means(chain: EventChain, g: Observable, var_pi: float,
                    n_batches: int = 10_000) -> float:
    """Empirical ``ESS = Var_pi(g) / Var[pi_T(g)]`` with batch means."""
    _, v = batch_means_variance(chain, g, n_batches)
    return var_pi / v


def write_ess_csv(path, reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "observable", "n_s", "ess_per_switch", "ess", "switches",
                    "proposals"])
        for r in reports:
            w.writerow([r.target, r.observable, f"{r.n_s:.17g}",
                        f"{r.ess_per_switch:.17g}", f"{r.ess:.17g}",
                        r.switches_observed, r.proposals_observed])
