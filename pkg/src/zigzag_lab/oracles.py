"""Closed-form reference values for the Gaussian and Student-t examples.

Gaussian targets are ``N(0, nu^2)`` (``nu`` is the standard deviation);
Student-t targets have ``nu`` degrees of freedom. Observables are the centered
moments ``x^k - m_k`` and tail indicators ``1_{[a, inf)} - p_a``.
"""

import enum
import math

from .errors import ValidityError

__all__ = [
    "OracleCase",
    "closed_form_oracle",
    "hyp2f1_series",
    "double_factorial",
    "ORACLES",
    "gaussian_moment",
    "gaussian_var",
    "gaussian_sigma2",
    "gaussian_psi_l2",
    "gaussian_langevin",
    "gaussian_tail_prob",
    "gaussian_tail_sigma2",
    "gaussian_switching_rate",
    "gaussian_ess_ratio",
    "student_normalization",
    "student_moment",
    "student_odd_sigma2",
    "student_tail_prob",
    "student_tail_sigma2",
    "student_tail_sigma2_nu2",
    "student_switching_rate",
]

_SQRT2PI = math.sqrt(2.0 * math.pi)
HYP2F1_MAX_TERMS = 100_000


class OracleCase(str, enum.Enum):
    GAUSSIAN_MOMENT = "gaussian_moment"
    GAUSSIAN_VAR = "gaussian_var"
    GAUSSIAN_SIGMA2 = "gaussian_sigma2"
    GAUSSIAN_LANGEVIN = "gaussian_langevin"
    GAUSSIAN_PSI_L2 = "gaussian_psi_l2"
    GAUSSIAN_TAIL_PROB = "gaussian_tail_prob"
    GAUSSIAN_TAIL_SIGMA2 = "gaussian_tail_sigma2"
    GAUSSIAN_SWITCHING_RATE = "gaussian_switching_rate"
    GAUSSIAN_ESS_RATIO = "gaussian_ess_ratio"
    STUDENT_MOMENT = "student_moment"
    STUDENT_ODD_SIGMA2 = "student_odd_sigma2"
    STUDENT_NORMALIZATION = "student_normalization"
    STUDENT_TAIL_PROB = "student_tail_prob"
    STUDENT_TAIL_SIGMA2 = "student_tail_sigma2"
    STUDENT_TAIL_SIGMA2_NU2 = "student_tail_sigma2_nu2"
    STUDENT_SWITCHING_RATE = "student_switching_rate"


def _lfact(n):
    return math.lgamma(n + 1.0)


def _ldfact_odd(n):
    """log n!! for odd n >= -1, via (2j-1)!! = (2j)! / (2^j j!)."""
    if n <= 0:
        return 0.0
    j = (n + 1) // 2
    return _lfact(2 * j) - j * math.log(2.0) - _lfact(j)


def double_factorial(n: int) -> float:
    """``n!!`` for ``n >= -1``, computed in log space."""
    if n < -1:
        raise ValidityError("double factorial needs n >= -1")
    if n <= 0:
        return 1.0
    if n % 2:
        return math.exp(_ldfact_odd(n))
    j = n // 2
    return math.exp(j * math.log(2.0) + _lfact(j))


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValidityError(f"moment order must be a positive integer, got {k!r}")
    return int(k)


def _check_pos(name, v):
    if not v > 0:
        raise ValidityError(f"{name} must be positive, got {v!r}")
    return float(v)


# -- Gaussian -----------------------------------------------------------------

def gaussian_moment(k, nu=1.0):
    """``m_k = nu^k (k-1)!!`` for even ``k``, 0 for odd ``k``."""
    k = _check_k(k)
    nu = _check_pos("nu", nu)
    if k % 2:
        return 0.0
    return nu ** k * double_factorial(k - 1)


def _gaussian_var_coef(k):
    if k % 2:
        return double_factorial(2 * k - 1)
    return double_factorial(2 * k - 1) - double_factorial(k - 1) ** 2


def gaussian_var(k, nu=1.0):
    """``Var_pi(x^k)`` under ``N(0, nu^2)``."""
    k = _check_k(k)
    return _check_pos("nu", nu) ** (2 * k) * _gaussian_var_coef(k)


def _gaussian_sigma2_coef(k):
    # sigma^2 = coef * nu^{2k+1} / sqrt(2 pi)
    if k % 2:
        h = (k - 1) // 2
        first = 2.0 * math.exp(_lfact(k)) / (k + 1)
        second = 0.5 * math.exp(2.0 * _lfact(h))
        return 2.0 ** (k + 2) * (first - second)
    h = k // 2
    a = 8.0 * math.exp(2.0 * _lfact(k) - k * math.log(2.0) - 2.0 * _lfact(h))
    b = 8.0 * math.exp(_lfact(k)) * (2.0 ** k - k - 2) / (k + 1)
    return a + b


def gaussian_sigma2(k, nu=1.0):
    """Zig-Zag asymptotic variance of ``x^k - m_k`` under ``N(0, nu^2)``, canonical rates."""
    k = _check_k(k)
    nu = _check_pos("nu", nu)
    return _gaussian_sigma2_coef(k) * nu ** (2 * k + 1) / _SQRT2PI


# int psi^2 pi = c_k nu^{2k+2}, from psi = nu^2, nu^2 x, nu^2 (x^2 + 2 nu^2),
# nu^2 x (x^2 + 3 nu^2)
_PSI_L2_COEF = {1: 1.0, 2: 1.0, 3: 11.0, 4: 42.0}


def gaussian_psi_l2(k, nu=1.0):
    """``int psi^2 pi = c_k nu^{2k+2}`` for ``x^k - m_k``, ``k <= 4``."""
    k = _check_k(k)
    if k not in _PSI_L2_COEF:
        raise ValidityError("closed form tabulated only for k <= 4")
    return _PSI_L2_COEF[k] * _check_pos("nu", nu) ** (2 * k + 2)


def gaussian_langevin(k, nu=1.0):
    """Langevin asymptotic variance ``2 int psi^2 pi = 2 c_k nu^{2k+2}``, ``k <= 4``.

    The diffusion has generator ``f'' - U' f'``; for ``k = 1`` it is an
    Ornstein-Uhlenbeck process whose time integral has asymptotic variance
    ``2 nu^4``.
    """
    return 2.0 * gaussian_psi_l2(k, nu)


def gaussian_tail_prob(a, nu=1.0):
    """``p_a = 1 - Phi(a / nu)``."""
    nu = _check_pos("nu", nu)
    return 0.5 * math.erfc(a / (nu * math.sqrt(2.0)))


def gaussian_tail_sigma2(a, nu=1.0):
    """Asymptotic variance of ``1_{[a, inf)} - p_a`` under ``N(0, nu^2)``."""
    nu = _check_pos("nu", nu)
    p = gaussian_tail_prob(a, nu)
    num = (-4.0 * a * (1.0 - p) * p * nu * _SQRT2PI
           + 4.0 * (1.0 - 2.0 * p) * nu ** 2 * math.exp(-a * a / (2.0 * nu ** 2))
           + (8.0 - 2.0 * math.pi) * p * p * nu ** 2)
    return num / (_SQRT2PI * nu)


def gaussian_switching_rate(nu=1.0):
    """``N_S = (2 pi nu^2)^{-1/2}`` for canonical rates."""
    return 1.0 / (_SQRT2PI * _check_pos("nu", nu))


def gaussian_ess_ratio(k):
    """``ESS / N(T) = Var_pi(g) / (sigma_g^2 N_S)``, independent of ``nu``."""
    k = _check_k(k)
    return 2.0 * math.pi * _gaussian_var_coef(k) / _gaussian_sigma2_coef(k)


# -- Student-t ----------------------------------------------------------------

def student_normalization(nu):
    """``z = int (1 + x^2/nu)^{-(nu+1)/2} dx``."""
    nu = _check_pos("nu", nu)
    return math.exp(0.5 * math.log(nu * math.pi) + math.lgamma(nu / 2)
                    - math.lgamma((nu + 1) / 2))


def student_moment(k, nu):
    """``m_k`` for ``k < nu`` (0 for odd ``k``)."""
    k = _check_k(k)
    nu = _check_pos("nu", nu)
    if not k < nu:
        raise ValidityError(f"moment m_{k} exists only for k < nu (nu={nu:g})")
    if k % 2:
        return 0.0
    return math.exp((k + 1) / 2 * math.log(nu) + math.lgamma((k + 1) / 2)
                    + math.lgamma((nu - k) / 2) - 0.5 * math.log(math.pi * nu)
                    - math.lgamma(nu / 2))


def student_odd_sigma2(k, nu):
    """Zig-Zag asymptotic variance of ``x^k`` (odd ``k``), requires ``k < (nu - 1)/2``."""
    k = _check_k(k)
    nu = _check_pos("nu", nu)
    if k % 2 == 0:
        raise ValidityError("closed form available only for odd k")
    if not k < (nu - 1) / 2:
        raise ValidityError(f"needs k < (nu - 1)/2, got k={k}, nu={nu:g}")
    lsq = 0.5 * math.log(math.pi * nu)
    # first term: 2 int |U'| e^{-U} (t^{k+1}/(k+1))^2 / z after integrating by parts
    first = 4.0 * math.exp((k + 1) * math.log(nu) + _lfact(k)
                           + math.lgamma((nu - 2 * k - 1) / 2) - lsq
                           - math.lgamma(nu / 2)) / (1 + k)
    second = math.exp((k + 1) * math.log(nu) + 2 * math.lgamma((1 + k) / 2)
                      + 2 * math.lgamma((nu - k) / 2) - lsq - math.lgamma(nu / 2)
                      - math.lgamma((nu + 1) / 2))
    return first - second


def hyp2f1_series(a, b, c, z, max_terms=HYP2F1_MAX_TERMS):
    """Gauss hypergeometric ``2F1(a, b; c; z)`` for ``z < 1`` by power series.

    For ``z < -0.5`` the Pfaff transformation
    ``2F1(a, b; c; z) = (1 - z)^{-a} 2F1(a, c - b; c; z / (z - 1))`` maps the
    argument into ``(1/3, 1)``, where the series still converges (and
    terminates when ``c - b`` is a non-positive integer).
    """
    if z < -0.5:
        return (1.0 - z) ** (-a) * hyp2f1_series(a, c - b, c, z / (z - 1.0), max_terms)
    if not z < 1.0:
        raise ValidityError("series needs z < 1")
    total = 1.0
    term = 1.0
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if term == 0.0 or abs(term) < 1e-17 * abs(total):
            return total
    raise ValidityError(f"2F1 series did not converge in {max_terms} terms (z={z:g})")


def student_tail_prob(a, nu):
    """``p_a = pi(x >= a)`` through hypergeometric representations.

    With ``x = nu / (nu + a^2)``:

    * ``x >= 1/2``: ``1/2 - a c 2F1(1/2, (nu+1)/2; 3/2; -a^2/nu)``, the 2F1
      taken through Pfaff as ``x^{(nu+1)/2} 2F1(1, (nu+1)/2; 3/2; 1 - x)`` so
      every series term is positive;
    * otherwise, or when that difference would cancel (``p_a < 0.05``),
      ``I_x(nu/2, 1/2) / 2`` with
      ``I_x(p, q) = x^p (1-x)^q 2F1(p+q, 1; p+1; x) / (p B(p, q))``.
    """
    nu = _check_pos("nu", nu)
    if a < 0:
        return 1.0 - student_tail_prob(-a, nu)
    x = nu / (nu + a * a)
    b = 0.5 * (nu + 1)
    if x >= 0.5:
        f = x ** b * hyp2f1_series(1.0, b, 1.5, 1.0 - x)
        v = 0.5 - a * math.exp(math.lgamma(b) - math.lgamma(nu / 2)) * f / \
            math.sqrt(math.pi * nu)
        if v >= 0.05:
            return v
    p = 0.5 * nu
    log_beta = math.lgamma(p) + math.lgamma(0.5) - math.lgamma(p + 0.5)
    log_pref = p * math.log(x) + 0.5 * math.log1p(-x) - math.log(p) - log_beta
    return 0.5 * math.exp(log_pref) * hyp2f1_series(p + 0.5, 1.0, p + 1.0, x)


def student_tail_sigma2(a, nu):
    """Zig-Zag asymptotic variance of ``1_{[a, inf)} - p_a``; needs ``nu > 1``, ``a >= 0``."""
    nu = _check_pos("nu", nu)
    if not nu > 1:
        raise ValidityError(f"needs nu > 1 (unimodal CLT regime), got nu={nu:g}")
    if a < 0:
        raise ValidityError("closed form stated for a >= 0")
    z = student_normalization(nu)
    p = student_tail_prob(a, nu)
    return (4.0 * (1.0 - 2.0 * p) * nu / (z * (nu - 1.0)) * (1.0 + a * a / nu) ** ((1.0 - nu) / 2)
            - 4.0 * a * (1.0 - p) * p
            + 8.0 * p * p * nu / (z * (nu - 1.0))
            - z * p * p)


def student_tail_sigma2_nu2(a):
    """Simplified ``nu = 2`` version of :func:`student_tail_sigma2`."""
    if a < 0:
        raise ValidityError("closed form stated for a >= 0")
    r2 = math.sqrt(2.0)
    return (r2 + 2 * a + r2 * a * a - a * math.sqrt(4 + 2 * a * a)) / (2 + a * a)


def student_switching_rate(nu):
    """``N_S = Gamma((nu+1)/2) / (sqrt(nu pi) Gamma(nu/2))`` for canonical rates."""
    return 1.0 / student_normalization(nu)


ORACLES = {
    OracleCase.GAUSSIAN_MOMENT: gaussian_moment,
    OracleCase.GAUSSIAN_VAR: gaussian_var,
    OracleCase.GAUSSIAN_SIGMA2: gaussian_sigma2,
    OracleCase.GAUSSIAN_LANGEVIN: gaussian_langevin,
    OracleCase.GAUSSIAN_PSI_L2: gaussian_psi_l2,
    OracleCase.GAUSSIAN_TAIL_PROB: gaussian_tail_prob,
    OracleCase.GAUSSIAN_TAIL_SIGMA2: gaussian_tail_sigma2,
    OracleCase.GAUSSIAN_SWITCHING_RATE: gaussian_switching_rate,
    OracleCase.GAUSSIAN_ESS_RATIO: gaussian_ess_ratio,
    OracleCase.STUDENT_MOMENT: student_moment,
    OracleCase.STUDENT_ODD_SIGMA2: student_odd_sigma2,
    OracleCase.STUDENT_NORMALIZATION: student_normalization,
    OracleCase.STUDENT_TAIL_PROB: student_tail_prob,
    OracleCase.STUDENT_TAIL_SIGMA2: student_tail_sigma2,
    OracleCase.STUDENT_TAIL_SIGMA2_NU2: student_tail_sigma2_nu2,
    OracleCase.STUDENT_SWITCHING_RATE: student_switching_rate,
}


def closed_form_oracle(case, **params) -> float:
    """Evaluate a named closed form, e.g. ``closed_form_oracle("gaussian_sigma2", k=1, nu=2)``.

    Raises:
        ValidityError: parameters outside the formula's range.
    """
    try:
        fn = ORACLES[OracleCase(case)]
    except ValueError:
        raise ValidityError(f"unknown oracle case {case!r}") from None
    return float(fn(**params))
