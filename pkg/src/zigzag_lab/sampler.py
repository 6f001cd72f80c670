"""Event-chain simulation of the one-dimensional Zig-Zag process.

Two exact simulation schemes:

* direct inversion: the next switch is ``tau = H(-log u)`` where ``H`` is the
  generalized inverse of the integrated rate along the current ray;
* Poisson thinning: candidates come from a dominating intensity ``Lambda``
  (constant or affine in time) and are accepted with probability
  ``lambda / Lambda``. The bound is re-anchored at every candidate, accepted
  or not.

The loops are numba kernels taking the rate functions as arguments. For
user-supplied Python callables the identical loop runs uncompiled
(``kernel.py_func``), so both paths consume random numbers in the same order.
"""

import csv
import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numba as nb
import numpy as np

from .errors import (
    BoundViolationError,
    CapabilityError,
    DomainError,
    NoSwitchError,
)
from .quadrature import QuadratureSettings, integrate
from .rng import as_generator
from .targets import SwitchingRate, _check_theta, lambda_rate

__all__ = [
    "EventChain",
    "InverseIntensity",
    "BoundingIntensity",
    "EVENT_KINDS",
    "switching_time_direct",
    "simulate_direct",
    "simulate_thinned",
    "make_gaussian_inverse",
    "make_student_inverse",
    "constant_bound",
    "affine_bound",
    "positions_at",
    "write_trajectory_csv",
]

START, SWITCH, REJECTED, HORIZON = 0, 1, 2, 3
EVENT_KINDS = {START: "start", SWITCH: "switch", REJECTED: "proposal_rejected",
               HORIZON: "horizon"}

MAX_PROPOSALS = 10**9
_RATIO_SLACK = 1e-12

# kernel status codes
_OK, _VIOLATION, _NO_SWITCH, _CAP = 0, 1, 2, 3


@dataclass(frozen=True, eq=False)
class EventChain:
    """Sampler output: event times, positions and outgoing directions.

    ``directions[k]`` is the velocity on ``[times[k], times[k+1])``. ``kinds``
    uses the codes of :data:`EVENT_KINDS`. Rejected thinning proposals are
    included when the simulation was run with ``keep_rejected=True``.
    """

    times: np.ndarray
    positions: np.ndarray
    directions: np.ndarray
    kinds: np.ndarray
    proposals: int
    accepted: int
    grad_evals: int

    def __len__(self):
        return len(self.times)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def n_segments(self) -> int:
        return len(self.times) - 1

    def segments(self):
        """``(start_position, direction, duration)`` arrays, one entry per segment."""
        return self.positions[:-1], self.directions[:-1], np.diff(self.times)

    def switch_times(self):
        return self.times[self.kinds == SWITCH]


# -- direct inversion ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InverseIntensity:
    """Integrated rate ``G(t; x, theta)`` along a ray and its inverse ``H``.

    ``kernel`` is an optional compiled ``H(z, x, theta, params)``.
    """

    H: Callable
    G: Callable
    kernel: Optional[Callable] = None
    params: np.ndarray = None
    name: str = "custom"


@nb.njit(nogil=True, cache=True)
def _gauss_H(z, x, th, p):
    v = p[0]
    a = th * x
    if a <= 0.0:
        return -a + math.sqrt(2.0 * v * z)
    # -a + sqrt(a^2 + 2 v z) without cancellation
    return 2.0 * v * z / (a + math.sqrt(a * a + 2.0 * v * z))


@nb.njit(nogil=True, cache=True)
def _gauss_G(t, x, th, p):
    v = p[0]
    a = th * x
    if a >= 0.0:
        return (a * t + 0.5 * t * t) / v
    s = t + a
    if s <= 0.0:
        return 0.0
    return 0.5 * s * s / v


@nb.njit(nogil=True, cache=True)
def _student_H(z, x, th, p):
    nu = p[0]
    a = th * x
    w = 2.0 * z / (1.0 + nu)
    if a <= 0.0:
        return -a + math.sqrt(nu * math.expm1(w))
    # exp(w/2) sqrt(a^2 + nu - nu exp(-w)) - a, rationalized
    c = nu + a * a
    e = c * math.expm1(w)
    return e / (math.sqrt(a * a + e) + a)


@nb.njit(nogil=True, cache=True)
def _student_G(t, x, th, p):
    nu = p[0]
    a = th * x
    if a >= 0.0:
        s = a + t
        return 0.5 * (nu + 1.0) * math.log1p((s * s - a * a) / (nu + a * a))
    s = t + a
    if s <= 0.0:
        return 0.0
    return 0.5 * (nu + 1.0) * math.log1p(s * s / nu)


def _python_inverse(kernel_H, kernel_G, params, name):
    return InverseIntensity(
        H=lambda z, x, theta: kernel_H(float(z), float(x), float(theta), params),
        G=lambda t, x, theta: kernel_G(float(t), float(x), float(theta), params),
        kernel=kernel_H,
        params=params,
        name=name,
    )


def make_gaussian_inverse(variance: float) -> InverseIntensity:
    """Inverse integrated canonical rate for ``N(0, variance)``."""
    if not variance > 0:
        raise DomainError("variance must be positive")
    return _python_inverse(_gauss_H, _gauss_G, np.array([float(variance)]),
                           f"gaussian(var={variance:g})")


def make_student_inverse(dof: float) -> InverseIntensity:
    """Inverse integrated canonical rate for the Student-t with ``dof`` degrees of freedom."""
    if not dof > 0:
        raise DomainError("degrees of freedom must be positive")
    return _python_inverse(_student_H, _student_G, np.array([float(dof)]),
                           f"student_t(nu={dof:g})")


def switching_time_direct(inv: InverseIntensity, x: float, theta, u: float) -> float:
    """Next switching time ``H(-log u; x, theta)`` for a uniform draw ``u`` in (0, 1)."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"u must lie in (0, 1), got {u!r}")
    th = _check_theta(theta)
    tau = inv.H(-math.log(u), x, th)
    if not math.isfinite(tau):
        raise NoSwitchError(f"no switch in finite time from x={x!r}, theta={th}")
    return tau


@functools.lru_cache(maxsize=256)
def _validate_inverse(rate: SwitchingRate, inv: InverseIntensity, tol: float = 1e-8):
    """Spot-check ``G(t2) - G(t1) = integral of lambda`` at 16 random rays.

    The integral form is insensitive to the kinks of ``lambda``, unlike a
    finite-difference check of ``G' = lambda``.
    """
    rng = np.random.default_rng(20240611)
    s = rate.target.scale
    settings = QuadratureSettings(abs_tol=1e-13, rel_tol=1e-12)
    for _ in range(16):
        x = float(rng.uniform(-3 * s, 3 * s))
        th = 1 if rng.random() < 0.5 else -1
        t1, t2 = np.sort(rng.uniform(0, 3 * s, size=2))
        ref = integrate(lambda r: lambda_rate(rate, x + th * r, th), t1, t2,
                        breakpoints=(-th * x,), scale=s, settings=settings).value
        got = inv.G(t2, x, th) - inv.G(t1, x, th)
        if abs(got - ref) > tol * max(1.0, abs(ref)):
            raise DomainError(
                f"inverse intensity {inv.name!r} inconsistent with the switching rate "
                f"at x={x:.6g}, theta={th}: dG={got!r} vs integral={ref!r}"
            )
    return True


@nb.njit(nogil=True)
def _grow(arr, n):
    out = np.empty(2 * arr.shape[0], dtype=arr.dtype)
    out[:n] = arr[:n]
    return out


@nb.njit(nogil=True)
def _direct_kernel(H, params, x0, th0, t_max, max_switches, rng):
    cap = 1024
    T = np.empty(cap)
    X = np.empty(cap)
    D = np.empty(cap, dtype=np.int8)
    E = np.empty(cap, dtype=np.int8)
    t = 0.0
    x = x0
    th = th0
    T[0] = t
    X[0] = x
    D[0] = th
    E[0] = 0
    n = 1
    switches = 0
    status = 0
    while switches < max_switches:
        z = -math.log(1.0 - rng.random())
        tau = H(z, x, float(th), params)
        if not tau < math.inf:
            if t_max < math.inf:
                tau = math.inf
            else:
                status = 2
                break
        if n + 1 >= T.shape[0]:
            T = _grow(T, n)
            X = _grow(X, n)
            D = _grow(D, n)
            E = _grow(E, n)
        if t + tau >= t_max:
            T[n] = t_max
            X[n] = x + th * (t_max - t)
            D[n] = th
            E[n] = 3
            n += 1
            break
        t += tau
        x += th * tau
        th = -th
        T[n] = t
        X[n] = x
        D[n] = th
        E[n] = 1
        n += 1
        switches += 1
    return T[:n], X[:n], D[:n], E[:n], switches, status


def _check_horizon(t_max, max_switches):
    if max_switches is None:
        max_switches = -1
    if t_max is None:
        t_max = math.inf
    if not t_max > 0:
        raise DomainError(f"time horizon must be positive, got {t_max!r}")
    if max_switches < 0 and math.isinf(t_max):
        raise DomainError("give a finite time horizon or a maximum number of switches")
    if max_switches < 0:
        max_switches = np.iinfo(np.int64).max
    return float(t_max), int(max_switches)


def simulate_direct(rate: SwitchingRate, inv: InverseIntensity, x0: float, theta0,
                    t_max: float = math.inf, max_switches: Optional[int] = None,
                    seed=0, validate: bool = True) -> EventChain:
    """Zig-Zag event chain by direct inversion of the integrated switching rate.

    Args:
        rate: switching rate (must match ``inv``).
        inv: integrated rate and its inverse along rays.
        x0, theta0: initial state.
        t_max: stop at this time, keeping the final partial segment.
        max_switches: stop right after this many switches.
        seed: int seed or ``numpy.random.Generator``.
        validate: spot-check that ``inv`` integrates ``rate``.

    Returns:
        EventChain where every event after the first is a switch (or the
        final horizon marker); ``proposals == accepted == grad_evals``.
    """
    th0 = _check_theta(theta0)
    t_max, max_switches = _check_horizon(t_max, max_switches)
    if validate:
        _validate_inverse(rate, inv)
    rng = as_generator(seed)
    if inv.kernel is not None:
        out = _direct_kernel(inv.kernel, inv.params, float(x0), th0, t_max,
                             max_switches, rng)
    else:
        H = inv.H
        out = _direct_kernel.py_func(lambda z, x, th, p: H(z, x, int(th)), None,
                                     float(x0), th0, t_max, max_switches, rng)
    T, X, D, E, switches, status = out
    if status == _NO_SWITCH:
        raise NoSwitchError(f"no switch in finite time from x={X[-1]!r}")
    return EventChain(T, X, D, E, int(switches), int(switches), int(switches))


# -- thinning -----------------------------------------------------------------

@nb.njit(nogil=True, cache=True)
def _invert_bound(z, a, kind, K, L, G):
    """Inverse of the integrated bound ``int_0^t Lambda`` where
    ``Lambda(s) = K + G`` (kind 0) or ``max(0, a + L s) + G`` (kind 1)."""
    if kind == 0:
        r = K + G
        if r > 0.0:
            return z / r
        return math.inf
    if L <= 0.0:
        r = max(a, 0.0) + G
        if r > 0.0:
            return z / r
        return math.inf
    if a >= 0.0:
        b = a + G
        return 2.0 * z / (b + math.sqrt(b * b + 2.0 * L * z))
    t0 = -a / L
    m0 = G * t0
    if z <= m0:
        return z / G
    if G == 0.0 and z == 0.0:
        return 0.0
    zz = z - m0
    return t0 + 2.0 * zz / (G + math.sqrt(G * G + 2.0 * L * zz))


@nb.njit(nogil=True, cache=True)
def _bound_value(tau, a, kind, K, L, G):
    if kind == 0:
        return K + G
    return max(0.0, a + L * tau) + G


@nb.njit(nogil=True)
def _thinned_kernel(grad, tp, gam, gp, kind, K, L, gmode, window, x0, th0, t_max,
                    max_switches, keep_rejected, max_proposals, rng):
    cap = 1024
    T = np.empty(cap)
    X = np.empty(cap)
    D = np.empty(cap, dtype=np.int8)
    E = np.empty(cap, dtype=np.int8)
    t = 0.0
    x = x0
    th = th0
    T[0] = t
    X[0] = x
    D[0] = th
    E[0] = 0
    n = 1
    proposals = 0
    accepted = 0
    status = 0
    max_ratio = 0.0
    bad_ratio = 0.0
    # only the affine bound needs U' at the start; afterwards the candidate's
    # gradient is re-used as the next anchor
    gevals = 0
    a = 0.0
    if kind == 1:
        a = th * grad(x, tp)
        gevals = 1
    while accepted < max_switches:
        if proposals >= max_proposals:
            status = 3
            break
        if gmode == 0:
            G = 0.0
        elif gmode == 1:
            G = gam(x, gp)
        else:
            G = max(gam(x, gp), gam(x + th * window, gp))
        z = -math.log(1.0 - rng.random())
        tau = _invert_bound(z, a, kind, K, L, G)
        reanchor = gmode == 2 and tau > window
        step = window if reanchor else tau
        if not step < math.inf and t_max == math.inf:
            status = 2
            break
        if n + 1 >= T.shape[0]:
            T = _grow(T, n)
            X = _grow(X, n)
            D = _grow(D, n)
            E = _grow(E, n)
        if t + step >= t_max:
            T[n] = t_max
            X[n] = x + th * (t_max - t)
            D[n] = th
            E[n] = 3
            n += 1
            break
        t += step
        x += th * step
        du = grad(x, tp)
        gevals += 1
        if reanchor:
            a = th * du
            continue
        proposals += 1
        lam = max(0.0, th * du)
        if gmode != 0:
            lam += gam(x, gp)
        Lam = _bound_value(tau, a, kind, K, L, G)
        if Lam > 0.0:
            ratio = lam / Lam
        elif lam > 0.0:
            ratio = math.inf
        else:
            ratio = 0.0
        if ratio > max_ratio:
            max_ratio = ratio
        if ratio > 1.0 + 1e-12:
            status = 1
            bad_ratio = ratio
            T[n] = t
            X[n] = x
            D[n] = th
            E[n] = 2
            n += 1
            break
        if rng.random() * Lam < lam:
            th = -th
            accepted += 1
            T[n] = t
            X[n] = x
            D[n] = th
            E[n] = 1
            n += 1
        elif keep_rejected:
            T[n] = t
            X[n] = x
            D[n] = th
            E[n] = 2
            n += 1
        a = th * du
    return (T[:n], X[:n], D[:n], E[:n], proposals, accepted, gevals, status,
            max_ratio, bad_ratio)


@dataclass(frozen=True, eq=False)
class BoundingIntensity:
    """Dominating intensity for thinning.

    ``kind == "constant"``: ``Lambda = K`` with ``|U'| <= K``.
    ``kind == "affine"``: ``Lambda(t; x, theta) = max(0, theta U'(x) + L t)``
    with ``|U''| <= L``.

    The excess rate is added on top: exactly when constant; for a convex
    excess rate by its maximum over ``[x, x + theta * window]``, which the
    sampler re-evaluates at least every ``window`` time units.
    """

    rate: SwitchingRate
    kind: str
    value: float
    window: Optional[float] = None

    def _excess_bound(self, x, theta):
        ex = self.rate.excess
        if ex.is_zero:
            return 0.0
        if ex.is_constant:
            return float(ex(x))
        return max(float(ex(x)), float(ex(x + theta * self.window)))

    def intensity(self, t, x, theta):
        """``Lambda(t; x, theta)``; for convex excess only valid on ``[0, window]``."""
        th = _check_theta(theta)
        G = self._excess_bound(x, th)
        if self.kind == "constant":
            return self.value + G
        return max(0.0, th * float(self.rate.target.grad(x)) + self.value * t) + G

    def inverse(self, z, x, theta):
        """``H~(z)``: generalized inverse of ``int_0^t Lambda(s; x, theta) ds``."""
        th = _check_theta(theta)
        G = self._excess_bound(x, th)
        a = th * float(self.rate.target.grad(x))
        kind = 0 if self.kind == "constant" else 1
        return _invert_bound(float(z), a, kind, self.value, self.value, G)

    def check_domination(self, n_x=81, n_t=26):
        """Verify ``Lambda >= lambda`` along rays on a grid; raise on failure."""
        s = self.rate.target.scale
        span = self.window if self.window is not None else 5.0 * s
        for x in np.linspace(-10 * s, 10 * s, n_x):
            for th in (-1, 1):
                for t in np.linspace(0.0, span, n_t):
                    lam = lambda_rate(self.rate, x + th * t, th)
                    Lam = self.intensity(t, x, th)
                    if lam > Lam * (1 + _RATIO_SLACK) + 1e-15:
                        raise BoundViolationError(t, float(x), th,
                                                  lam / Lam if Lam > 0 else math.inf)
        return True

    def _kernel_args(self):
        ex = self.rate.excess
        if ex.is_zero:
            gmode = 0
        elif ex.is_constant:
            gmode = 1
        elif ex.convex:
            gmode = 2
        else:
            raise CapabilityError("thinning needs a constant or convex excess rate")
        kind = 0 if self.kind == "constant" else 1
        window = self.window if self.window is not None else math.inf
        return kind, self.value, gmode, window


def _default_window(rate):
    if rate.excess.is_constant:
        return None
    return 0.5 * rate.target.scale


def constant_bound(rate: SwitchingRate, K: Optional[float] = None, window=None,
                   validate: bool = True) -> BoundingIntensity:
    """``Lambda = K`` (plus the excess bound); ``K`` defaults to ``target.grad_bound``."""
    if K is None:
        K = rate.target.grad_bound
        if K is None:
            raise CapabilityError(f"{rate.target.name} has no gradient bound")
    b = BoundingIntensity(rate, "constant", float(K), window or _default_window(rate))
    if validate:
        b.check_domination()
    return b


def affine_bound(rate: SwitchingRate, L: Optional[float] = None, window=None,
                 validate: bool = True) -> BoundingIntensity:
    """``Lambda = max(0, theta U'(x) + L t)``; ``L`` defaults to ``target.hessian_bound``."""
    if L is None:
        L = rate.target.hessian_bound
        if L is None:
            raise CapabilityError(f"{rate.target.name} has no Hessian bound")
    b = BoundingIntensity(rate, "affine", float(L), window or _default_window(rate))
    if validate:
        b.check_domination()
    return b


def simulate_thinned(rate: SwitchingRate, bound: BoundingIntensity, x0: float, theta0,
                     t_max: float = math.inf, max_switches: Optional[int] = None,
                     seed=0, keep_rejected: bool = True,
                     max_proposals: int = MAX_PROPOSALS) -> EventChain:
    """Zig-Zag event chain by Poisson thinning.

    Every candidate costs one evaluation of ``U'``, which is re-used as the
    anchor of the next bound. The affine bound also needs ``U'`` at the start
    point, and window re-anchoring (convex excess rates) costs an extra
    evaluation without being a proposal.

    Raises:
        BoundViolationError: a candidate had ``lambda / Lambda > 1 + 1e-12``.
        NoSwitchError: zero bound intensity and no time horizon.
        RuntimeError: more than ``max_proposals`` candidates.
    """
    if bound.rate is not rate and (bound.rate.target is not rate.target
                                   or bound.rate.excess is not rate.excess):
        raise DomainError("bound was built for a different switching rate")
    th0 = _check_theta(theta0)
    t_max, max_switches = _check_horizon(t_max, max_switches)
    kind, value, gmode, window = bound._kernel_args()
    rng = as_generator(seed)
    grad, _, tp = rate.target.sampler_functions()
    gam, _, gp = rate.excess.sampler_functions()
    args = (grad, tp, gam, gp, kind, value, value, gmode, window, float(x0), th0,
            t_max, max_switches, bool(keep_rejected), int(max_proposals), rng)
    if rate.target.is_compiled and (rate.excess.kernel is not None):
        out = _thinned_kernel(*args)
    else:
        out = _thinned_kernel.py_func(*args)
    T, X, D, E, proposals, accepted, gevals, status, max_ratio, bad = out
    if status == _VIOLATION:
        raise BoundViolationError(float(T[-1]), float(X[-1]), int(D[-1]), float(bad))
    if status == _NO_SWITCH:
        raise NoSwitchError(f"bound intensity vanishes along the ray from x={X[-1]!r}")
    if status == _CAP:
        raise RuntimeError(f"proposal cap {max_proposals} reached")
    chain = EventChain(T, X, D, E, int(proposals), int(accepted), int(gevals))
    object.__setattr__(chain, "max_ratio", float(max_ratio))
    return chain


# -- helpers ------------------------------------------------------------------

def positions_at(chain: EventChain, times) -> np.ndarray:
    """Interpolated ``X(t)`` for ``0 <= t <= chain.t_end``."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(times > chain.t_end):
        raise DomainError("requested times outside the simulated horizon")
    k = np.searchsorted(chain.times, times, side="right") - 1
    k = np.clip(k, 0, len(chain.times) - 1)
    return chain.positions[k] + chain.directions[k] * (times - chain.times[k])


def write_trajectory_csv(chain: EventChain, path) -> None:
    """Dump the chain as ``t,x,theta,event_kind`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "theta", "event_kind"])
        for t, x, d, e in zip(chain.times, chain.positions, chain.directions,
                              chain.kinds):
            w.writerow([f"{t:.17g}", f"{x:.17g}", int(d), EVENT_KINDS[int(e)]])
