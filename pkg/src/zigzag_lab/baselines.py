"""Reference estimators: exact IID sampling and random-walk Metropolis."""

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import CapabilityError, DomainError, TuningError
from .rng import as_generator, stream
from .targets import TargetModel

__all__ = ["RwmhChain", "sample_iid", "run_rwmh", "tune_rwmh"]


def sample_iid(target: TargetModel, n: int, seed=0) -> np.ndarray:
    """``n`` exact draws from a built-in target.

    Gaussian via standard normals; Student-t as ``Z / sqrt(chi2_nu / nu)``.

    Raises:
        CapabilityError: no exact sampler for this target.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    rng = as_generator(seed)
    if target.family == "gaussian":
        return math.sqrt(target.param) * rng.standard_normal(n)
    if target.family == "student_t":
        nu = target.param
        z = rng.standard_normal(n)
        return z / np.sqrt(rng.chisquare(nu, n) / nu)
    raise CapabilityError(f"no exact sampler for {target.name}")


@dataclass(frozen=True, eq=False)
class RwmhChain:
    samples: np.ndarray
    step_size: float
    acceptance_rate: float
    grad_evals: int = 0

    @property
    def density_evals(self) -> int:
        """Cost unit: one potential evaluation per step."""
        return len(self.samples)


@nb.njit(nogil=True)
def _rwmh_kernel(pot, p, x0, step, n, rng):
    out = np.empty(n)
    x = x0
    ux = pot(x, p)
    acc = 0
    for i in range(n):
        y = x + step * rng.standard_normal()
        uy = pot(y, p)
        # accept with probability min(1, exp(U(x) - U(y)))
        if ux - uy >= 0.0 or rng.random() < math.exp(ux - uy):
            x = y
            ux = uy
            acc += 1
        out[i] = x
    return out, acc


def run_rwmh(target: TargetModel, step_size: float, n: int, x0: float = 0.0,
             seed=0) -> RwmhChain:
    """Random-walk Metropolis with ``N(0, step_size^2)`` increments.

    ``samples[i]`` is the state after step ``i + 1``; the start is excluded.
    """
    if not step_size > 0:
        raise DomainError("step_size must be positive")
    if n < 0:
        raise DomainError("n must be non-negative")
    rng = as_generator(seed)
    _, pot, p = target.sampler_functions()
    kernel = _rwmh_kernel if target.is_compiled else _rwmh_kernel.py_func
    out, acc = kernel(pot, p, float(x0), float(step_size), int(n), rng)
    return RwmhChain(out, float(step_size), acc / n if n else math.nan)


def tune_rwmh(target: TargetModel, target_acceptance: float = 0.44, seed=0,
              pilot_steps: int = 10_000, max_pilots: int = 20, tol: float = 0.02) -> float:
    """Step size whose pilot acceptance rate is within ``tol`` of the target.

    Bisection on ``log(step)`` between ``1e-3`` and ``1e3`` times the target
    scale, one pilot run of ``pilot_steps`` per evaluation, at most
    ``max_pilots`` runs in total (including the two bracketing runs).

    Raises:
        TuningError: target outside ``(0.1, 0.9)``, no bracket, or no
            convergence within the pilot budget.
    """
    if not 0.1 < target_acceptance < 0.9:
        raise TuningError(f"target acceptance {target_acceptance} outside (0.1, 0.9)")
    pilots = 0

    def acceptance(log_step):
        nonlocal pilots
        rng = stream(seed, pilots)
        pilots += 1
        return run_rwmh(target, math.exp(log_step), pilot_steps, target.mode, rng).acceptance_rate

    lo = math.log(1e-3 * target.scale)
    hi = math.log(1e3 * target.scale)
    if not acceptance(lo) > target_acceptance > acceptance(hi):
        raise TuningError("acceptance rate not bracketed by the search interval")
    while pilots < max_pilots:
        mid = 0.5 * (lo + hi)
        a = acceptance(mid)
        if abs(a - target_acceptance) <= tol:
            return math.exp(mid)
        if a > target_acceptance:
            lo = mid
        else:
            hi = mid
    raise TuningError(f"no step within {tol} of {target_acceptance} after {pilots} pilots")
