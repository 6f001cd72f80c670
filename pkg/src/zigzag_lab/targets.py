"""Target distributions and Zig-Zag switching rates.

A target is described by its potential ``U = -log(density)`` (up to an additive
constant) and ``U'``. The switching rate is

    lambda(x, theta) = max(0, theta * U'(x)) + gamma(x)

with a non-negative excess rate ``gamma``; ``gamma = 0`` gives the canonical
rates. Built-in families also carry numba-compiled kernels
``fn(x, params) -> float`` that the samplers call in nopython mode; custom
targets fall back to the same algorithms in pure Python.
"""

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numba as nb
import numpy as np

from .errors import DomainError, EvaluationError, NormalizationError, QuadratureError
from .quadrature import QuadratureSettings, integrate_line

__all__ = [
    "Direction",
    "TargetModel",
    "ExcessRate",
    "SwitchingRate",
    "lambda_rate",
    "make_gaussian",
    "make_student_t",
    "make_custom",
    "make_flat",
    "excess_none",
    "excess_constant",
    "excess_quadratic",
    "excess_custom",
    "parse_excess",
    "model_from_config",
]


class Direction(enum.IntEnum):
    NEG = -1
    POS = 1

    def __neg__(self):
        return Direction(-int(self))


def _check_theta(theta) -> int:
    t = int(theta)
    if t not in (-1, 1):
        raise DomainError(f"direction must be -1 or +1, got {theta!r}")
    return t


# -- compiled kernels: fn(x, params) ------------------------------------------

@nb.njit(nogil=True, cache=True)
def _gauss_grad(x, p):
    return x / p[0]


@nb.njit(nogil=True, cache=True)
def _gauss_potential(x, p):
    return 0.5 * x * x / p[0]


@nb.njit(nogil=True, cache=True)
def _student_grad(x, p):
    nu = p[0]
    return (nu + 1.0) * x / (nu + x * x)


@nb.njit(nogil=True, cache=True)
def _student_potential(x, p):
    nu = p[0]
    return 0.5 * (nu + 1.0) * math.log1p(x * x / nu)


@nb.njit(nogil=True, cache=True)
def _flat_grad(x, p):
    return 0.0


@nb.njit(nogil=True, cache=True)
def _flat_potential(x, p):
    return 0.0


@nb.njit(nogil=True, cache=True)
def _gamma_zero(x, p):
    return 0.0


@nb.njit(nogil=True, cache=True)
def _gamma_const(x, p):
    return p[0]


@nb.njit(nogil=True, cache=True)
def _gamma_quadratic(x, p):
    return p[0] * (1.0 + x * x)


@nb.njit(nogil=True, cache=True)
def _gamma_quadratic_prime(x, p):
    return 2.0 * p[0] * x


# -- targets ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TargetModel:
    """Target density ``pi(x) = exp(-U(x)) / normalization``.

    Attributes:
        name: identifier used in reports.
        potential: ``U``.
        grad: ``U'``.
        normalization: ``k = integral of exp(-U)``; ``inf`` for improper
            (simulation-only) targets.
        hessian_bound: global ``L`` with ``|U''| <= L`` (enables affine thinning).
        grad_bound: global ``K`` with ``|U'| <= K`` (enables constant thinning).
        scale: characteristic length, used by quadrature tail maps.
        mode: location of the minimum of ``U``.
        family: ``"gaussian"``, ``"student_t"``, ``"flat"`` or ``"custom"``.
        param: the family parameter (variance or degrees of freedom).
        kernel_grad, kernel_potential, kernel_params: compiled versions of
            ``grad`` and ``potential`` for the samplers, or None.
    """

    name: str
    potential: Callable
    grad: Callable
    normalization: float
    hessian_bound: Optional[float] = None
    grad_bound: Optional[float] = None
    scale: float = 1.0
    mode: float = 0.0
    family: str = "custom"
    param: Optional[float] = None
    kernel_grad: Optional[Callable] = None
    kernel_potential: Optional[Callable] = None
    kernel_params: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def density(self, x):
        """Normalized density ``pi(x)``."""
        return math.exp(-self.potential(x)) / self.normalization

    @property
    def is_compiled(self) -> bool:
        return self.kernel_grad is not None

    def sampler_functions(self):
        """``(grad, potential, params)`` usable by the sampler kernels."""
        if self.is_compiled:
            return self.kernel_grad, self.kernel_potential, self.kernel_params
        g, u = self.grad, self.potential
        return (lambda x, p: float(g(x))), (lambda x, p: float(u(x))), self.kernel_params


def make_gaussian(variance: float) -> TargetModel:
    """``N(0, variance)``: ``U = x^2 / (2 variance)``."""
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance!r}")
    v = float(variance)
    return TargetModel(
        name=f"gaussian(var={v:g})",
        potential=lambda x: 0.5 * x * x / v,
        grad=lambda x: x / v,
        normalization=math.sqrt(2.0 * math.pi * v),
        hessian_bound=1.0 / v,
        grad_bound=None,
        scale=math.sqrt(v),
        family="gaussian",
        param=v,
        kernel_grad=_gauss_grad,
        kernel_potential=_gauss_potential,
        kernel_params=np.array([v]),
    )


def make_student_t(dof: float) -> TargetModel:
    """Student-t with ``dof`` degrees of freedom, ``pi ~ (1 + x^2/dof)^{-(dof+1)/2}``."""
    if not dof > 0:
        raise DomainError(f"degrees of freedom must be positive, got {dof!r}")
    nu = float(dof)
    norm = math.exp(
        0.5 * math.log(nu * math.pi) + math.lgamma(nu / 2) - math.lgamma((nu + 1) / 2)
    )
    return TargetModel(
        name=f"student_t(nu={nu:g})",
        potential=lambda x: 0.5 * (nu + 1.0) * np.log1p(x * x / nu),
        grad=lambda x: (nu + 1.0) * x / (nu + x * x),
        normalization=norm,
        # |U''| = (nu+1)|nu - x^2|/(nu + x^2)^2 peaks at x = 0
        hessian_bound=(nu + 1.0) / nu,
        # max of (nu+1)x/(nu+x^2) is attained at x = sqrt(nu)
        grad_bound=(nu + 1.0) / (2.0 * math.sqrt(nu)),
        scale=math.sqrt(nu),
        family="student_t",
        param=nu,
        kernel_grad=_student_grad,
        kernel_potential=_student_potential,
        kernel_params=np.array([nu]),
    )


def make_flat() -> TargetModel:
    """Improper target ``U = 0``; only meaningful with a positive excess rate."""
    return TargetModel(
        name="flat",
        potential=lambda x: 0.0 * x,
        grad=lambda x: 0.0 * x,
        normalization=math.inf,
        hessian_bound=0.0,
        grad_bound=0.0,
        family="flat",
        kernel_grad=_flat_grad,
        kernel_potential=_flat_potential,
    )


def make_custom(u, u_prime, bounds=None, name="custom", scale=1.0, mode=0.0,
                tol=1e-10) -> TargetModel:
    """Target from user callables ``u`` and ``u_prime``.

    Args:
        u, u_prime: potential and its derivative, finite on the real line.
        bounds: optional dict with ``grad_bound`` and/or ``hessian_bound``.
        scale: length scale for the quadrature tail map.
        mode: minimizer of ``u`` (used to split integrals).
        tol: absolute tolerance for the normalization integral.

    Raises:
        NormalizationError: if ``exp(-u)`` is not integrable or quadrature fails.
    """
    bounds = dict(bounds or {})

    def weight(x):
        try:
            return math.exp(-u(x))
        except OverflowError:
            return math.inf

    settings = QuadratureSettings(abs_tol=tol, rel_tol=1e-12)
    try:
        res = integrate_line(weight, center=mode, scale=scale, settings=settings,
                             check_divergence=True)
    except (QuadratureError, OverflowError) as exc:
        raise NormalizationError(f"exp(-U) not integrable: {exc}",
                                 residual=getattr(exc, "residual", None)) from exc
    if res.divergent or not math.isfinite(res.value) or res.value <= 0:
        raise NormalizationError("exp(-U) not integrable (divergent tails)",
                                 residual=res.error)
    return TargetModel(
        name=name,
        potential=u,
        grad=u_prime,
        normalization=res.value,
        hessian_bound=bounds.get("hessian_bound"),
        grad_bound=bounds.get("grad_bound"),
        scale=float(scale),
        mode=float(mode),
        family="custom",
    )


# -- excess rates -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExcessRate:
    """Excess switching rate ``gamma(x) >= 0``.

    ``kind`` is ``"none"``, ``"constant"``, ``"quadratic"`` (``a (1 + x^2)``)
    or ``"custom"``. ``convex`` lets the thinning sampler bound ``gamma`` on a
    window by its endpoint values. ``fd_derivative`` flags a finite-difference
    derivative.
    """

    kind: str
    coefficient: float
    fn: Callable
    derivative: Callable
    kernel: Optional[Callable] = None
    kernel_derivative: Optional[Callable] = None
    convex: bool = True
    fd_derivative: bool = False

    def __call__(self, x):
        return self.fn(x)

    @property
    def is_zero(self) -> bool:
        return self.kind == "none"

    @property
    def is_constant(self) -> bool:
        return self.kind in ("none", "constant")

    @property
    def minimum(self) -> float:
        """Global infimum of gamma for the built-in families."""
        if self.kind in ("none", "constant", "quadratic"):
            return self.coefficient
        raise DomainError("minimum unknown for a custom excess rate")

    def scaled(self, factor: float) -> "ExcessRate":
        """``factor * gamma``, e.g. ``gamma / epsilon`` for the diffusive scaling."""
        if not factor > 0:
            raise DomainError("scale factor must be positive")
        if self.kind == "constant":
            return excess_constant(self.coefficient * factor)
        if self.kind == "quadratic":
            return excess_quadratic(self.coefficient * factor)
        if self.kind == "none":
            return self
        fn, d = self.fn, self.derivative
        return replace(self, fn=lambda x: factor * fn(x),
                       derivative=lambda x: factor * d(x))

    def sampler_functions(self):
        """``(gamma, gamma', params)`` for the sampler kernels."""
        params = np.array([self.coefficient])
        if self.kernel is not None:
            return self.kernel, self.kernel_derivative, params
        fn, d = self.fn, self.derivative
        return (lambda x, p: float(fn(x))), (lambda x, p: float(d(x))), params


def excess_none() -> ExcessRate:
    return ExcessRate("none", 0.0, lambda x: 0.0 * x, lambda x: 0.0 * x,
                      _gamma_zero, _gamma_zero)


def excess_constant(c: float) -> ExcessRate:
    if not c >= 0:
        raise DomainError(f"constant excess rate must be >= 0, got {c!r}")
    c = float(c)
    return ExcessRate("constant", c, lambda x: c + 0.0 * x, lambda x: 0.0 * x,
                      _gamma_const, _gamma_zero)


def excess_quadratic(a: float) -> ExcessRate:
    """``gamma(x) = a (1 + x^2)``."""
    if not a >= 0:
        raise DomainError(f"quadratic excess coefficient must be >= 0, got {a!r}")
    a = float(a)
    return ExcessRate("quadratic", a, lambda x: a * (1.0 + x * x),
                      lambda x: 2.0 * a * x, _gamma_quadratic, _gamma_quadratic_prime)


def excess_custom(fn, derivative=None, convex=False) -> ExcessRate:
    """User excess rate; without ``derivative`` a central difference (h=1e-6) is used."""
    fd = derivative is None
    if fd:
        h = 1e-6

        def derivative(x):
            return (fn(x + h) - fn(x - h)) / (2 * h)

    return ExcessRate("custom", math.nan, fn, derivative, convex=convex,
                      fd_derivative=fd)


def parse_excess(spec: str) -> ExcessRate:
    """Parse ``none``, ``const:<c>`` or ``quadratic:<a>``."""
    spec = (spec or "none").strip()
    if spec == "none":
        return excess_none()
    kind, _, val = spec.partition(":")
    try:
        v = float(val)
    except ValueError:
        raise DomainError(f"bad gamma specification {spec!r}") from None
    if kind in ("const", "constant"):
        return excess_constant(v)
    if kind == "quadratic":
        return excess_quadratic(v)
    raise DomainError(f"unknown gamma family {kind!r}")


# -- switching rates ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SwitchingRate:
    target: TargetModel
    excess: ExcessRate = field(default_factory=excess_none)

    @property
    def canonical(self) -> bool:
        return self.excess.is_zero

    def __call__(self, x, theta):
        return lambda_rate(self, x, theta)


def lambda_rate(rate: SwitchingRate, x: float, theta) -> float:
    """``max(0, theta U'(x)) + gamma(x)``."""
    th = _check_theta(theta)
    du = rate.target.grad(x)
    if not math.isfinite(du):
        raise EvaluationError(f"U'({x!r}) is not finite", where=x)
    return max(0.0, th * du) + float(rate.excess(x))


def model_from_config(target="gaussian", nu=1.0, gamma="none") -> SwitchingRate:
    """Build a switching rate from CLI-style parameters.

    ``nu`` is the standard deviation for ``gaussian`` and the degrees of freedom
    for ``student_t``.
    """
    if target == "gaussian":
        t = make_gaussian(float(nu) ** 2)
    elif target in ("student_t", "student"):
        t = make_student_t(float(nu))
    else:
        raise DomainError(f"unknown target {target!r}")
    return SwitchingRate(t, parse_excess(gamma) if isinstance(gamma, str) else gamma)
