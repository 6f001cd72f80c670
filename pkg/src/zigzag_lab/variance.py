"""Asymptotic variance of Zig-Zag ergodic averages.

Three routes to ``sigma_g^2`` for a centered observable ``g``:

* the psi formula ``2 int (|U'| + 2 gamma) psi^2 pi`` with
  ``psi(x) = (1/pi(x)) int_x^inf g pi``;
* the renewal formula for unimodal targets with canonical rates, built from
  excursions between crossings of the mode;
* the Langevin-diffusion value ``2 int psi^2 pi`` for comparison.

Plus an empirical renewal estimator that cuts a simulated path at the mode
crossings.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ergodic import Observable, time_integral
from .errors import (
    DomainError,
    InsufficientDataError,
    QuadratureError,
    ValidityError,
)
from .quadrature import (
    DEFAULT_SETTINGS,
    QuadratureSettings,
    integrate,
    integrate_line,
)
from .sampler import EventChain
from .targets import SwitchingRate, TargetModel, excess_none

__all__ = [
    "PsiFunction",
    "VarianceReport",
    "RenewalCycles",
    "centering",
    "variance_under_pi",
    "psi",
    "sigma2_psi",
    "sigma2_renewal",
    "sigma2_langevin",
    "variance_report",
    "renewal_cycles",
    "renewal_variance_empirical",
    "write_report_csv",
    "MIN_CYCLES",
]

MIN_CYCLES = 100
CENTERING_CHECK = 1e-8
_EXP_FLOOR = -745.0


def _breaks(target, g):
    return tuple(g.breakpoints) + (target.mode,)


def _log_weight(target):
    """``x -> -(U(x) - U(mode))``."""
    u0 = float(target.potential(target.mode))
    return lambda x: u0 - float(target.potential(x))


def _pi(target):
    lw = _log_weight(target)
    lk = math.log(target.normalization) + float(target.potential(target.mode))

    def dens(x):
        v = lw(x) - lk
        return math.exp(v) if v > _EXP_FLOOR else 0.0

    return dens


def centering(target: TargetModel, g: Observable, settings=DEFAULT_SETTINGS) -> float:
    """``pi(g)`` by quadrature; a stored centering is cross-checked at 1e-8.

    Raises:
        ValidityError: the stored centering disagrees with quadrature.
    """
    if not math.isfinite(target.normalization):
        raise DomainError("target is improper")
    dens = _pi(target)
    tight = QuadratureSettings(abs_tol=1e-13, rel_tol=1e-12,
                               max_subdivisions=settings.max_subdivisions)
    res = integrate_line(lambda x: g(x) * dens(x) if dens(x) > 0 else 0.0,
                         _breaks(target, g), target.mode, target.scale, tight,
                         check_divergence=True)
    if res.divergent:
        raise QuadratureError(f"pi({g.name}) does not exist", residual=res.error)
    m = res.value
    if g.centering is not None:
        if abs(g.centering - m) > CENTERING_CHECK * max(1.0, abs(m)):
            raise ValidityError(
                f"stored centering {g.centering!r} of {g.name} disagrees with "
                f"quadrature value {m!r}")
        return float(g.centering)
    return m


def variance_under_pi(target, g: Observable, m=None, settings=DEFAULT_SETTINGS) -> float:
    """``Var_pi(g)``; ``inf`` if the second moment diverges."""
    if m is None:
        m = centering(target, g, settings)
    dens = _pi(target)
    res = integrate_line(lambda x: (g(x) - m) ** 2 * dens(x) if dens(x) > 0 else 0.0,
                         _breaks(target, g), target.mode, target.scale, settings,
                         check_divergence=True)
    return math.inf if res.divergent else res.value


class PsiFunction:
    """``psi(x) = exp(U(x)) int_x^inf (g - m) exp(-U)``.

    Because ``int (g - m) pi = 0`` the same function equals
    ``-exp(U(x)) int_{-inf}^x (g - m) exp(-U)``; the tail on the far side of
    the mode is used so that the integrand decays away from ``x``.
    """

    def __init__(self, target: TargetModel, g: Observable, settings=DEFAULT_SETTINGS,
                 m: Optional[float] = None):
        self.target = target
        self.g = g
        self.settings = settings
        self.m = centering(target, g, settings) if m is None else float(m)
        self.errors = []

    def _local_scale(self, x):
        du = abs(float(self.target.grad(x)))
        far = max(self.target.scale, abs(x - self.target.mode))
        return min(1.0 / du, far) if du > 0 else far

    def __call__(self, x: float) -> float:
        t, g, m = self.target, self.g, self.m
        x = float(x)
        ux = float(t.potential(x))

        def integrand(xi):
            e = ux - float(t.potential(xi))
            if e < _EXP_FLOOR:
                return 0.0
            return (g(xi) - m) * math.exp(e)

        brk = tuple(g.breakpoints)
        ell = self._local_scale(x)
        if x >= t.mode:
            r = integrate(integrand, x, math.inf, brk, ell, self.settings)
            val = r.value
        else:
            r = integrate(integrand, -math.inf, x, brk, ell, self.settings)
            val = -r.value
        self.errors.append(r.error)
        return val

    def max_error(self) -> float:
        return max(self.errors, default=0.0)


def psi(target: TargetModel, g: Observable, settings=DEFAULT_SETTINGS) -> PsiFunction:
    """Build the psi evaluator for observable ``g`` (centered internally)."""
    return PsiFunction(target, g, settings)


def _weighted_psi_integral(target, ps, weight, g, settings):
    dens = _pi(target)

    def integrand(x):
        p = dens(x)
        if p == 0.0:
            return 0.0
        w = weight(x)
        if w == 0.0:
            return 0.0
        v = ps(x)
        return w * v * v * p

    res = integrate_line(integrand, _breaks(target, g), target.mode, target.scale,
                         settings, check_divergence=True)
    return res


def sigma2_psi(target: TargetModel, rate: Optional[SwitchingRate], g: Observable,
               settings=DEFAULT_SETTINGS, details=False):
    """``2 int (|U'| + 2 gamma) psi^2 pi``; ``inf`` when the integral diverges.

    With ``details=True`` returns ``(value, error_estimate)``.
    """
    ex = rate.excess if rate is not None else excess_none()
    if rate is not None and rate.target is not target:
        raise DomainError("rate was built for a different target")
    ps = psi(target, g, settings)
    res = _weighted_psi_integral(
        target, ps, lambda x: abs(float(target.grad(x))) + 2.0 * float(ex(x)), g,
        settings)
    val = math.inf if res.divergent else 2.0 * res.value
    err = 2.0 * res.error + ps.max_error()
    return (val, err) if details else val


def sigma2_langevin(target: TargetModel, g: Observable, settings=DEFAULT_SETTINGS,
                    details=False):
    """``2 int psi^2 pi``; ``inf`` when psi is not square integrable."""
    ps = psi(target, g, settings)
    res = _weighted_psi_integral(target, ps, lambda x: 1.0, g, settings)
    val = math.inf if res.divergent else 2.0 * res.value
    err = 2.0 * res.error + ps.max_error()
    return (val, err) if details else val


def check_unimodal(target: TargetModel, cutoff: float = 50.0, n: int = 2001):
    """``U' >= 0`` right of the mode and ``<= 0`` left of it, on a grid."""
    c, s = target.mode, target.scale
    for x in c + s * np.linspace(-cutoff, cutoff, n):
        if x == c:
            continue
        du = float(target.grad(float(x)))
        if (x > c and du < 0) or (x < c and du > 0):
            raise ValidityError(
                f"{target.name} is not unimodal around {c:g}: U'({x:.6g}) = {du:.3g}")


def sigma2_renewal(target: TargetModel, g: Observable, settings=DEFAULT_SETTINGS,
                   details=False):
    """Renewal-cycle formula for unimodal targets and canonical rates.

    Coordinates are centered at the mode ``c`` and ``U`` is shifted so that
    ``U(c) = 0``::

        [2 int |U'| e^{-U} G(t)^2 dt - 4 (int_c^inf e^{-U} g)^2] / int e^{-U}

    with ``G(t) = int_c^t g``. Inner integrals use nested adaptive quadrature.

    Raises:
        ValidityError: target not unimodal around its mode.
    """
    check_unimodal(target)
    m = centering(target, g, settings)
    c, s = target.mode, target.scale
    lw = _log_weight(target)
    brk = tuple(g.breakpoints)
    errs = []

    def gc(x):
        return g(x) - m

    def G(t):
        r = integrate(gc, c, t, brk, s, settings)
        errs.append(r.error)
        return r.value

    def outer(t):
        e = lw(t)
        if e < _EXP_FLOOR:
            return 0.0
        du = abs(float(target.grad(t)))
        if du == 0.0:
            return 0.0
        v = G(t)
        return du * math.exp(e) * v * v

    a_res = integrate_line(outer, brk + (c,), c, s, settings, check_divergence=True)
    b_res = integrate(lambda t: gc(t) * math.exp(lw(t)) if lw(t) > _EXP_FLOOR else 0.0,
                      c, math.inf, brk, s, settings)
    z = target.normalization * math.exp(float(target.potential(c)))
    if a_res.divergent:
        val = math.inf
    else:
        val = (2.0 * a_res.value - 4.0 * b_res.value ** 2) / z
    err = (2.0 * a_res.error + 8.0 * abs(b_res.value) * b_res.error
           + 2.0 * max(errs, default=0.0)) / z
    return (val, err) if details else val


@dataclass
class VarianceReport:
    target: str
    observable: str
    sigma2_renewal: float
    sigma2_psi: float
    sigma2_langevin: float
    var_pi: float
    quad_error: float
    finite: dict = field(default_factory=dict)

    def flags(self) -> str:
        return ";".join(f"{k}={v}" for k, v in self.finite.items())


def _status(v):
    if isinstance(v, float) and math.isnan(v):
        return "n/a"
    return "finite" if math.isfinite(v) else "divergent"


def variance_report(target: TargetModel, rate: Optional[SwitchingRate], g: Observable,
                    settings=DEFAULT_SETTINGS) -> VarianceReport:
    """All three variance formulas plus ``Var_pi(g)``.

    The renewal formula is reported as ``nan`` ("n/a") when its preconditions
    (unimodal target, canonical rates) do not hold.
    """
    canonical = rate is None or rate.canonical
    err = 0.0
    if canonical:
        try:
            ren, e = sigma2_renewal(target, g, settings, details=True)
            err += e
        except ValidityError:
            ren = math.nan
    else:
        ren = math.nan
    sp, e = sigma2_psi(target, rate, g, settings, details=True)
    err += e
    sl, e = sigma2_langevin(target, g, settings, details=True)
    err += e
    vp = variance_under_pi(target, g, settings=settings)
    return VarianceReport(target.name, g.name, ren, sp, sl, vp, err,
                          {"renewal": _status(ren), "psi": _status(sp),
                           "langevin": _status(sl), "var_pi": _status(vp)})


def write_report_csv(path, reports) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["target", "observable", "sigma2_renewal", "sigma2_psi",
                    "sigma2_langevin", "var_pi", "quad_error", "flags"])
        for r in reports:
            w.writerow([r.target, r.observable, f"{r.sigma2_renewal:.17g}",
                        f"{r.sigma2_psi:.17g}", f"{r.sigma2_langevin:.17g}",
                        f"{r.var_pi:.17g}", f"{r.quad_error:.17g}", r.flags()])


# -- empirical renewal estimator -----------------------------------------------

@dataclass
class RenewalCycles:
    """Per-cycle quantities: ``y_plus``, ``y_minus`` (integrals of the centered
    observable over the upward and downward excursions) and cycle lengths."""

    y_plus: np.ndarray
    y_minus: np.ndarray
    length: np.ndarray

    @property
    def count(self) -> int:
        return len(self.length)

    @property
    def y(self) -> np.ndarray:
        return self.y_plus + self.y_minus


def _crossings(chain: EventChain, level: float):
    x0, d, tau = chain.segments()
    x1 = x0 + d * tau
    up = (d > 0) & (x0 < level) & (x1 >= level)
    down = (d < 0) & (x0 > level) & (x1 <= level)
    idx = np.flatnonzero(up | down)
    times = chain.times[idx] + np.abs(level - x0[idx])
    signs = d[idx].astype(int)
    return times, signs


def renewal_cycles(chain: EventChain, g: Observable, m: float, level: float = 0.0,
                   order: int = 8) -> RenewalCycles:
    """Cut the path at crossings of ``level`` and integrate ``g - m`` per excursion.

    A cycle starts at an upward crossing, contains one downward crossing and
    ends at the next upward crossing.
    """
    times, signs = _crossings(chain, level)
    if len(times) and np.any(signs[1:] == signs[:-1]):
        raise DomainError("crossings do not alternate; target not unimodal around level")
    start = int(np.argmax(signs > 0)) if np.any(signs > 0) else len(signs)
    times = times[start:]
    n = (len(times) - 1) // 2
    if n <= 0:
        return RenewalCycles(np.empty(0), np.empty(0), np.empty(0))
    times = times[: 2 * n + 1]
    ints = time_integral(chain, g, times, order) - m * times
    y_plus = ints[1::2] - ints[0:-1:2]
    y_minus = ints[2::2] - ints[1::2]
    return RenewalCycles(y_plus, y_minus, times[2::2] - times[0:-1:2])


def renewal_variance_empirical(chain: EventChain, g: Observable, m: Optional[float] = None,
                               level: float = 0.0, min_cycles: int = MIN_CYCLES) -> float:
    """Regenerative estimate ``mean(Y^2) / mean(cycle length)``.

    Args:
        chain: canonical Zig-Zag path for a unimodal target with mode ``level``.
        g: observable; ``m`` (or ``g.centering``) is its mean under pi.

    Raises:
        InsufficientDataError: fewer than ``min_cycles`` complete cycles.
    """
    m = g.centering if m is None else m
    if m is None:
        raise DomainError("renewal estimator needs the centering pi(g)")
    cyc = renewal_cycles(chain, g, m, level)
    if cyc.count < min_cycles:
        raise InsufficientDataError(
            f"only {cyc.count} complete renewal cycles, need {min_cycles}")
    y = cyc.y
    return float(np.mean(y * y) / np.mean(cyc.length))
