"""Time averages along a Zig-Zag event chain.

The path is piecewise linear, so ``int_0^T f(X(s)) ds`` splits into one
integral per segment. Monomials and tail indicators are integrated in closed
form; anything else uses a fixed-order Gauss-Legendre rule per segment.
"""

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, EvaluationError
from .sampler import EventChain

__all__ = [
    "Observable",
    "PathAverage",
    "monomial",
    "tail_indicator",
    "generic",
    "average_exact_moment",
    "average_exact_tail",
    "average_quadrature",
    "path_average",
    "time_integral",
    "running_average_series",
    "write_series_csv",
    "write_series_stats_csv",
]

DEFAULT_ORDER = 8


@dataclass(frozen=True, eq=False)
class Observable:
    """A function of position with optional centering ``m = pi(f)``.

    Attributes:
        fn: vectorized ``f``.
        kind: ``"monomial"``, ``"tail_indicator"`` or ``"generic"``.
        param: the power ``p`` or the threshold ``a``.
        centering: ``pi(f)`` if known; ``None`` means compute it when needed.
        breakpoints: points where ``f`` is not smooth (quadrature hints).
        name: label for reports.
    """

    fn: Callable
    kind: str = "generic"
    param: Optional[float] = None
    centering: Optional[float] = None
    breakpoints: tuple = ()
    name: str = "f"

    def __call__(self, x):
        if self.kind == "monomial":
            return x ** self.param
        if self.kind == "tail_indicator":
            if np.ndim(x) == 0:
                return 1.0 if x >= self.param else 0.0
            return (np.asarray(x) >= self.param).astype(float)
        return self.fn(x)

    @property
    def exact(self) -> bool:
        """True if segment integrals are available in closed form."""
        return self.kind in ("monomial", "tail_indicator")

    def with_centering(self, m: float) -> "Observable":
        return Observable(self.fn, self.kind, self.param, float(m), self.breakpoints,
                          self.name)

    def centered(self, m: Optional[float] = None) -> Callable:
        """``x -> f(x) - m`` using the stored centering when ``m`` is None."""
        m = self.centering if m is None else m
        if m is None:
            raise DomainError(f"observable {self.name!r} has no centering")
        return lambda x: self(x) - m


def monomial(p: int, centering=None) -> Observable:
    if int(p) != p or p < 1:
        raise DomainError(f"monomial power must be a positive integer, got {p!r}")
    p = int(p)
    return Observable(lambda x: x ** p, "monomial", p, centering, (), f"x^{p}")


def tail_indicator(a: float, centering=None) -> Observable:
    """``1_{[a, inf)}``, closed at ``a``."""
    a = float(a)
    return Observable(lambda x: (np.asarray(x) >= a).astype(float), "tail_indicator",
                      a, centering, (a,), f"1[x>={a:g}]")


def generic(fn: Callable, name="f", breakpoints=(), centering=None) -> Observable:
    return Observable(fn, "generic", None, centering, tuple(breakpoints), name)


@dataclass(frozen=True)
class PathAverage:
    value: float
    total_time: float
    segment_count: int


def _segments(chain: EventChain):
    if len(chain.times) < 2:
        raise DomainError("chain has no segments")
    x0, d, tau = chain.segments()
    return x0, d.astype(float), tau


def _power_sum(x0, x1, p):
    # (x1^{p+1} - x0^{p+1}) / (x1 - x0) without the cancellation
    acc = np.zeros_like(x0)
    for j in range(p + 1):
        acc += x1 ** j * x0 ** (p - j)
    return acc


def _moment_integrals(x0, d, tau, p):
    x1 = x0 + d * tau
    return tau * _power_sum(x0, x1, p) / (p + 1)


def _tail_integrals(x0, d, tau, a):
    x1 = x0 + d * tau
    lo = np.minimum(x0, x1)
    hi = np.maximum(x0, x1)
    out = np.where(a <= lo, tau, np.maximum(hi - a, 0.0))
    return np.where(a >= hi, 0.0, out)


def _gl_integrals(f, x0, d, tau, order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    # points: (n_segments, order)
    s = 0.5 * (1.0 + nodes)[None, :] * tau[:, None]
    pts = x0[:, None] + d[:, None] * s
    try:
        vals = np.asarray(f(pts), dtype=float)
        if vals.shape != pts.shape:
            raise ValueError
    except (TypeError, ValueError):
        vals = np.vectorize(lambda v: float(f(v)))(pts)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.argmax(bad.any(axis=1)))
        raise EvaluationError(f"observable not finite on segment {k}", where=k)
    return 0.5 * tau * (vals @ weights)


def _segment_integrals(f: Observable, x0, d, tau, order=DEFAULT_ORDER, exact=True):
    if exact and f.kind == "monomial":
        return _moment_integrals(x0, d, tau, f.param)
    if exact and f.kind == "tail_indicator":
        return _tail_integrals(x0, d, tau, f.param)
    return _gl_integrals(f, x0, d, tau, order)


def _average(chain, integrals, tau):
    return PathAverage(math.fsum(integrals) / math.fsum(tau), chain.t_end, len(tau))


def average_exact_moment(chain: EventChain, p: int) -> PathAverage:
    """Exact ``(1/T) int_0^T X(s)^p ds``."""
    if int(p) != p or p < 1:
        raise DomainError("p must be a positive integer")
    x0, d, tau = _segments(chain)
    return _average(chain, _moment_integrals(x0, d, tau, int(p)), tau)


def average_exact_tail(chain: EventChain, a: float) -> PathAverage:
    """Exact fraction of time spent in ``[a, inf)``."""
    x0, d, tau = _segments(chain)
    return _average(chain, _tail_integrals(x0, d, tau, float(a)), tau)


def average_quadrature(chain: EventChain, f, order: int = DEFAULT_ORDER) -> PathAverage:
    """Gauss-Legendre time average, exact for polynomials of degree ``<= 2 order - 1``.

    Raises:
        DomainError: for indicator observables, whose jump ruins the rule's
            accuracy; use :func:`average_exact_tail` instead.
    """
    if isinstance(f, Observable) and f.kind == "tail_indicator":
        raise DomainError("use average_exact_tail for indicator observables")
    if order < 1:
        raise DomainError("quadrature order must be >= 1")
    x0, d, tau = _segments(chain)
    return _average(chain, _gl_integrals(f, x0, d, tau, int(order)), tau)


def path_average(chain: EventChain, f: Observable, order: int = DEFAULT_ORDER) -> PathAverage:
    """Dispatch to the exact formula when one exists, else quadrature."""
    if f.kind == "monomial":
        return average_exact_moment(chain, f.param)
    if f.kind == "tail_indicator":
        return average_exact_tail(chain, f.param)
    return average_quadrature(chain, f, order)


def time_integral(chain: EventChain, f: Observable, times, order: int = DEFAULT_ORDER):
    """``int_0^t f(X(s)) ds`` for each ``t`` in ``times`` (must be within the horizon)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(times > chain.t_end):
        raise DomainError("time outside the simulated horizon")
    x0, d, tau = _segments(chain)
    seg = _segment_integrals(f, x0, d, tau, order)
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    k = np.searchsorted(chain.times, times, side="right") - 1
    k = np.minimum(k, len(tau) - 1)
    partial = _segment_integrals(f, x0[k], d[k], times - chain.times[k], order)
    return cum[k] + partial


def running_average_series(chain: EventChain, f: Observable, checkpoints: Sequence[float],
                           order: int = DEFAULT_ORDER):
    """``pi_T(f)`` at each checkpoint ``T``, in one pass over the chain.

    Returns:
        list of ``(T, value)`` pairs.
    """
    cps = np.asarray(checkpoints, dtype=float)
    if cps.ndim != 1 or len(cps) == 0:
        raise DomainError("checkpoints must be a non-empty list")
    if np.any(np.diff(cps) <= 0):
        raise DomainError("checkpoints must be strictly increasing")
    if cps[0] <= 0 or cps[-1] > chain.t_end:
        raise DomainError(f"checkpoints must lie in (0, {chain.t_end}]")
    vals = time_integral(chain, f, cps, order) / cps
    return list(zip(cps.tolist(), vals.tolist()))


def write_series_csv(path, checkpoints, estimates) -> None:
    """One replicate's series as ``T,estimate`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T", "estimate"])
        for t, v in zip(checkpoints, estimates):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])


def write_series_stats_csv(path, checkpoints, means, var_scaled) -> None:
    """Across-replicate summary ``T,mean,var_scaled`` with ``var_scaled = T Var``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T", "mean", "var_scaled"])
        for t, m, v in zip(checkpoints, means, var_scaled):
            w.writerow([f"{t:.17g}", f"{m:.17g}", f"{v:.17g}"])
