"""Acceptance suite: ten numbered criteria under a ``full`` or ``quick`` profile.

Each criterion returns a :class:`CriterionResult`; failures are reported, never
raised. Closed forms are looked up through ``oracles.closed_form_oracle`` so a
corrupted oracle table is caught by the suite.
"""

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List

import numpy as np
from scipy import stats

from .baselines import tune_rwmh
from .diffusion import compare_distributions
from .ergodic import monomial, tail_indicator
from .errors import BoundViolationError, ZigZagError
from .ess import ess_batch_means, ess_per_switch, switching_rate_analytic
from .experiments import (ExperimentConfig, run_experiment, stationary_start, tail_clt,
                          variance_vs_cost)
from .oracles import closed_form_oracle
from .rng import map_replicates, stream, thread_count
from .sampler import (affine_bound, constant_bound, make_gaussian_inverse,
                      make_student_inverse, positions_at, simulate_direct, simulate_thinned)
from .targets import (SwitchingRate, excess_constant, excess_quadratic, make_gaussian,
                      make_student_t)
from .variance import sigma2_langevin, sigma2_psi, sigma2_renewal, variance_under_pi

__all__ = ["CriterionResult", "Profile", "PROFILES", "CRITERIA", "run_criterion",
           "verify_all", "ESS_TABLE"]

ESS_TABLE = (1.5708, 1.5708, 1.1781, 1.32278, 1.22073, 1.33459)
SWITCH_RATES = {"gaussian": 0.39894, "student_t": 0.35355}


@dataclass(frozen=True)
class Profile:
    name: str
    replicates: int          # criteria 3, 4, 9
    paths: int               # criterion 5
    ks_tol: float            # criterion 5
    clt_tol_gauss: float     # criterion 3
    clt_tol_student: float   # criterion 4
    ess_switches: int        # criterion 6
    ess_batches: int
    ess_tol: float
    ns_runs: int             # criterion 7
    ns_horizon: float
    ns_tol: float
    ks_runs: int             # criterion 8
    stationary_samples: int
    stationary_tol: float
    proposals: int
    budget_s: float          # criterion 10


PROFILES = {
    "full": Profile("full", 10_000, 10_000, 0.05, 0.05, 0.10, 1_000_000, 10_000, 0.05,
                    10, 1e5, 0.01, 10_000, 10_000, 0.02, 10_000_000, 1800.0),
    "quick": Profile("quick", 1_000, 1_000, 0.10, 0.15, 0.30, 100_000, 1_000, 0.15,
                     1, 1e5, 0.03, 2_000, 2_000, 0.045, 1_000_000, 180.0),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _rel(a, b):
    return abs(a - b) / abs(b)


# -- criteria -----------------------------------------------------------------

def c1_gaussian_table(p: Profile):
    worst = 0.0
    for nu in (1.0, 2.0):
        t = make_gaussian(nu * nu)
        for k in (1, 2, 3, 4):
            g = monomial(k)
            ref = closed_form_oracle("gaussian_sigma2", k=k, nu=nu)
            ref_l = closed_form_oracle("gaussian_langevin", k=k, nu=nu)
            ref_l2 = closed_form_oracle("gaussian_psi_l2", k=k, nu=nu)
            sl = sigma2_langevin(t, g)
            worst = max(worst, _rel(sigma2_psi(t, None, g), ref),
                        _rel(sigma2_renewal(t, g), ref), _rel(sl, ref_l),
                        _rel(0.5 * sl, ref_l2))
    ok = worst <= 1e-6
    return ok, f"max rel err {worst:.2e} (tol 1e-6); langevin = 2 int psi^2 pi", 10.0


def c2_equivalence(p: Profile):
    cases = []
    for nu in (1.0, 2.0):
        t = make_gaussian(nu * nu)
        cases += [(t, monomial(1)), (t, monomial(2, centering=nu * nu)), (t, monomial(3)),
                  (t, tail_indicator(1.0))]
    for nu in (4.0, 6.0):
        t = make_student_t(nu)
        cases += [(t, monomial(1)), (t, tail_indicator(1.0))]
    worst = 0.0
    for t, g in cases:
        r, s = sigma2_renewal(t, g), sigma2_psi(t, None, g)
        worst = max(worst, abs(r - s) / max(1.0, abs(s)))
    return worst <= 1e-6, f"{len(cases)} cases, max |renewal-psi|/max(1,v) {worst:.2e}", 60.0


def _gaussian_setup(nu):
    t = make_gaussian(nu * nu)
    return SwitchingRate(t), make_gaussian_inverse(nu * nu)


def _student_setup(nu):
    t = make_student_t(nu)
    return SwitchingRate(t), make_student_inverse(nu)


def c3_gaussian_tail(p: Profile, seed=301):
    parts, ok = [], True
    for i, nu in enumerate((1.0, 2.0, 4.0)):
        rate, inv = _gaussian_setup(nu)
        _, vs = tail_clt(rate, inv, tail_indicator(1.0), [1000.0], p.replicates, seed,
                         thread_count(), key=i)
        ref = closed_form_oracle("gaussian_tail_sigma2", a=1.0, nu=nu)
        err = _rel(vs[-1], ref)
        ok &= err <= p.clt_tol_gauss
        parts.append(f"nu={nu:g}: {vs[-1]:.4f} vs {ref:.4f} ({100 * err:.1f}%)")
    return ok, "; ".join(parts) + f" tol {100 * p.clt_tol_gauss:.0f}%", 300.0


def c4_student_tail(p: Profile, seed=401):
    rate, inv = _student_setup(2.0)
    _, vs = tail_clt(rate, inv, tail_indicator(5.0), [1000.0], p.replicates, seed,
                     thread_count(), key=0)
    ref = closed_form_oracle("student_tail_sigma2_nu2", a=5.0)
    err = _rel(vs[-1], ref)
    rate1, inv1 = _student_setup(1.0)
    _, v1 = tail_clt(rate1, inv1, tail_indicator(5.0), [100.0, 1000.0], p.replicates, seed,
                     thread_count(), key=1)
    ok = err <= p.clt_tol_student and v1[1] > v1[0]
    return ok, (f"nu=2: {vs[-1]:.4f} vs {ref:.4f} ({100 * err:.1f}%, tol "
                f"{100 * p.clt_tol_student:.0f}%); nu=1 var_scaled T=1e2 {v1[0]:.3f} -> "
                f"T=1e3 {v1[1]:.3f}"), 300.0


def c5_diffusion(p: Profile, seed=501):
    rep = compare_distributions(make_gaussian(1.0), excess_quadratic(1.0), [10.0, 0.1],
                                [1.0, 10.0, 20.0, 50.0], p.paths, seed, x0=2.0,
                                threads=thread_count())
    k01, k10 = rep.ks(0.1, 50.0), rep.ks(10.0, 50.0)
    ok = k01 < p.ks_tol and k01 < k10 - p.ks_tol
    others = ", ".join(f"t={t:g}: {rep.ks(0.1, t):.3f}/{rep.ks(10.0, t):.3f}"
                       for t in (1.0, 10.0, 20.0))
    return ok, (f"t=50: KS(0.1)={k01:.4f} KS(10)={k10:.4f} need KS(0.1)<{p.ks_tol} and "
                f"<KS(10)-{p.ks_tol}; KS(0.1)/KS(10) at {others}"), 600.0


def c6_ess(p: Profile, seed=601):
    t = make_gaussian(1.0)
    ratios = [ess_per_switch(t, monomial(k)) for k in range(1, 7)]
    err_tab = max(abs(r - e) for r, e in zip(ratios, ESS_TABLE))
    err_or = max(abs(closed_form_oracle("gaussian_ess_ratio", k=k) - e)
                 for k, e in zip(range(1, 7), ESS_TABLE))
    rate, inv = _gaussian_setup(1.0)
    x0, th = stationary_start(t, stream(seed, 0))
    ch = simulate_direct(rate, inv, x0, th, max_switches=p.ess_switches, seed=stream(seed, 1))
    g = monomial(1)
    emp = ess_batch_means(ch, g, variance_under_pi(t, g), p.ess_batches)
    target = 0.5 * math.pi * ch.accepted
    err = _rel(emp, target)
    ok = err_tab <= 1e-3 and err_or <= 1e-3 and err <= p.ess_tol
    return ok, (f"table max abs err {err_tab:.1e} (oracle {err_or:.1e}); empirical ESS "
                f"{emp:.0f} vs {target:.0f} ({100 * err:.2f}%, tol {100 * p.ess_tol:.0f}%)"), math.inf


def c7_switch_rate(p: Profile, seed=701):
    parts, ok = [], True
    for i, (name, setup, nu) in enumerate((("gaussian", _gaussian_setup, 1.0),
                                           ("student_t", _student_setup, 2.0))):
        rate, inv = setup(nu)
        ns = switching_rate_analytic(rate.target)

        def one(r):
            rng = stream(seed, i, r)
            x0, th = stationary_start(rate.target, rng)
            return simulate_direct(rate, inv, x0, th, t_max=p.ns_horizon, seed=rng).accepted

        counts = map_replicates(one, p.ns_runs, thread_count())
        emp = sum(counts) / (p.ns_runs * p.ns_horizon)
        err = _rel(emp, ns)
        ok &= err <= p.ns_tol and abs(ns - SWITCH_RATES[name]) <= 1e-5
        parts.append(f"{name}: analytic {ns:.5f} empirical {emp:.5f} ({100 * err:.2f}%)")
    return ok, "; ".join(parts) + f" tol {100 * p.ns_tol:.0f}%", math.inf


def _round_trip_error():
    worst = 0.0
    invs = [make_gaussian_inverse(v) for v in (0.25, 1.0, 4.0)]
    invs += [make_student_inverse(nu) for nu in (1.0, 2.0, 4.0, 9.5)]
    for inv in invs:
        for x in np.linspace(-20.0, 20.0, 41):
            for th in (-1, 1):
                for z in (1e-8, 1e-3, 0.1, 1.0, 3.0, 10.0, 50.0):
                    t = inv.H(z, x, th)
                    worst = max(worst, abs(inv.G(t, x, th) - z) / max(1.0, z))
    return worst


def _ks_crit(n, m, alpha=0.01):
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n + m) / (n * m))


def c8_sampler(p: Profile, seed=801):
    rt = _round_trip_error()
    n = p.ks_runs
    crit = _ks_crit(n, n)
    ks_pairs = []
    cases = (("gaussian", _gaussian_setup(1.0), affine_bound),
             ("student_t", _student_setup(3.0), constant_bound))
    for j, (name, (rate, inv), make_bound) in enumerate(cases):
        bound = make_bound(rate)

        def one(i):
            a = simulate_direct(rate, inv, 0.5, 1, t_max=2.0, seed=stream(seed, j, 0, i))
            b = simulate_thinned(rate, bound, 0.5, 1, t_max=2.0, seed=stream(seed, j, 1, i),
                                 keep_rejected=False)
            return positions_at(a, [2.0])[0], positions_at(b, [2.0])[0]

        xs = np.array(map_replicates(one, n, thread_count()))
        ks_pairs.append(stats.ks_2samp(xs[:, 0], xs[:, 1]).statistic)

    m = p.stationary_samples
    stat = []
    rate, inv = _gaussian_setup(1.0)
    ch = simulate_direct(rate, inv, 0.0, 1, t_max=5.0 * m, seed=stream(seed, 10))
    stat.append(stats.kstest(positions_at(ch, 5.0 * np.arange(1, m + 1)),
                             "norm").statistic)
    rate_c = SwitchingRate(make_gaussian(1.0), excess_constant(0.5))
    ch = simulate_thinned(rate_c, affine_bound(rate_c), 0.0, 1, t_max=5.0 * m,
                          seed=stream(seed, 11), keep_rejected=False)
    stat.append(stats.kstest(positions_at(ch, 5.0 * np.arange(1, m + 1)),
                             "norm").statistic)
    rate_t = SwitchingRate(make_student_t(4.0))
    ch = simulate_thinned(rate_t, constant_bound(rate_t), 0.0, 1, t_max=10.0 * m,
                          seed=stream(seed, 12), keep_rejected=False)
    stat.append(stats.kstest(positions_at(ch, 10.0 * np.arange(1, m + 1)),
                             stats.t(4.0).cdf).statistic)

    proposals, violation, worst_ratio = _domination(p.proposals, seed)
    ok = (rt <= 1e-10 and max(ks_pairs) < crit and max(stat) < p.stationary_tol
          and not violation and proposals >= p.proposals)
    return ok, (f"round-trip {rt:.1e}; thinning-vs-direct KS "
                f"{'/'.join(f'{v:.4f}' for v in ks_pairs)} < {crit:.4f}; stationarity KS "
                f"{'/'.join(f'{v:.4f}' for v in stat)} < {p.stationary_tol}; "
                f"{proposals} proposals, max ratio {worst_ratio:.6f}"), 300.0


def _domination(budget: int, seed: int):
    gauss = make_gaussian(1.0)
    rates = [(SwitchingRate(gauss), affine_bound),
             (SwitchingRate(gauss, excess_constant(1.0)), affine_bound),
             (SwitchingRate(gauss, excess_quadratic(1.0)), affine_bound)]
    rates += [(SwitchingRate(make_student_t(nu)), constant_bound) for nu in (1.0, 2.0, 4.0)]
    rates += [(SwitchingRate(make_student_t(2.0), excess_constant(0.5)), constant_bound)]
    share = budget // len(rates) + 1
    total, worst = 0, 0.0
    for i, (rate, make_bound) in enumerate(rates):
        bound = make_bound(rate)
        done, r = 0, 0
        while done < share:
            try:
                ch = simulate_thinned(rate, bound, 0.0, 1, max_switches=100_000,
                                      seed=stream(seed, 20, i, r), keep_rejected=False)
            except BoundViolationError:
                return total + done, True, math.inf
            done += ch.proposals
            worst = max(worst, ch.max_ratio)
            r += 1
        total += done
    return total, False, worst


def c9_baselines(p: Profile, seed=901):
    rate, inv = _gaussian_setup(1.0)
    step = tune_rwmh(rate.target, seed=seed)
    v = variance_vs_cost(rate, inv, 1, [1000], p.replicates, seed, thread_count(),
                         rwmh_step=step)
    zz, iid, rw = (float(v[m][0]) for m in ("zigzag", "iid", "rwmh"))
    ok = zz < iid < rw and rw / iid > 3.0
    return ok, (f"cost 1e3: Var ZZ {zz:.3e} < IID {iid:.3e} < RWMH {rw:.3e}, "
                f"RWMH/IID {rw / iid:.2f} (> 3), step {step:.3f}"), math.inf


def _determinism(seed=1001) -> bool:
    base = {"experiment": "fig3_gaussian_tail", "nu": "1", "replicates": "200",
            "horizon": "50", "checkpoints": "10,50", "master_seed": str(seed)}
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for threads in (1, 3):
            out = Path(tmp) / f"t{threads}"
            run_experiment(ExperimentConfig.from_mapping(
                {**base, "threads": str(threads), "output_dir": str(out)}))
            blobs.append({f.name: f.read_bytes() for f in sorted(out.glob("*.csv"))})
    return blobs[0] == blobs[1] and len(blobs[0]) > 0


CRITERIA: Dict[int, tuple] = {
    1: ("gaussian moments table", c1_gaussian_table),
    2: ("variance formula equivalence", c2_equivalence),
    3: ("gaussian tail CLT", c3_gaussian_tail),
    4: ("student-t tail CLT", c4_student_tail),
    5: ("diffusion limit", c5_diffusion),
    6: ("ESS table", c6_ess),
    7: ("switching rate", c7_switch_rate),
    8: ("sampler correctness", c8_sampler),
    9: ("baseline ordering", c9_baselines),
}


def run_criterion(number: int, profile="full") -> CriterionResult:
    """Run one of criteria 1-9; exceptions become failures."""
    p = PROFILES[profile] if isinstance(profile, str) else profile
    name, fn = CRITERIA[number]
    start = time.perf_counter()
    try:
        ok, detail, limit = fn(p)
    except (ZigZagError, ArithmeticError, ValueError, RuntimeError) as exc:
        ok, detail, limit = False, f"error: {type(exc).__name__}: {exc}", math.inf
    secs = time.perf_counter() - start
    if ok and secs > limit:
        ok, detail = False, detail + f"; runtime {secs:.1f}s over {limit:.0f}s"
    return CriterionResult(number, name, bool(ok), detail, secs)


def criterion_10(results: List[CriterionResult], profile="full") -> CriterionResult:
    """Total runtime within the profile budget and byte-deterministic outputs."""
    p = PROFILES[profile] if isinstance(profile, str) else profile
    start = time.perf_counter()
    same = _determinism()
    secs = time.perf_counter() - start
    total = sum(r.seconds for r in results) + secs
    ok = same and total < p.budget_s
    return CriterionResult(10, "runtime and determinism", ok,
                           f"{p.name} profile total {total:.0f}s (budget {p.budget_s:.0f}s, "
                           f"{thread_count()} threads); CSV bytes identical across "
                           f"thread counts: {same}", secs)


def verify_all(profile="full", echo: Callable[[str], None] = print) -> List[CriterionResult]:
    """Run every criterion, echoing one status line each."""
    results = []
    for n in sorted(CRITERIA):
        r = run_criterion(n, profile)
        echo(r.line())
        results.append(r)
    r = criterion_10(results, profile)
    echo(r.line())
    results.append(r)
    passed = sum(r.passed for r in results)
    echo(f"{passed}/{len(results)} criteria passed")
    return results
