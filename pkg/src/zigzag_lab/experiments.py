"""Named, seeded experiments that write CSV artifacts plus a manifest.

Configuration is flat ``key = value`` text with ``#`` comments. List-valued
keys take comma-separated values. Every replicate draws from its own stream
``stream(master_seed, index, ...)`` and results are reduced in index order, so
the CSV bytes depend only on the configuration, never on ``threads``.
"""

import csv
import math
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numba
import numpy as np
import scipy

from . import __version__, oracles
from .baselines import run_rwmh, sample_iid, tune_rwmh
from .diffusion import compare_distributions, write_histogram_csv, write_ks_csv
from .ergodic import (Observable, monomial, running_average_series, tail_indicator,
                      time_integral, write_series_stats_csv)
from .errors import ZigZagError
from .ess import (EssReport, ess_batch_means, ess_per_switch, switching_rate_analytic,
                  write_ess_csv)
from .rng import map_replicates, stream, thread_count
from .sampler import SWITCH, make_gaussian_inverse, make_student_inverse, simulate_direct
from .targets import SwitchingRate, TargetModel, make_gaussian, make_student_t, parse_excess
from .variance import variance_report, variance_under_pi, write_report_csv

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "EXPERIMENTS",
    "parse_config_text",
    "load_config",
    "run_experiment",
    "stationary_start",
    "tail_clt",
    "variance_vs_cost",
    "write_cost_csv",
]


class ConfigError(ZigZagError, ValueError):
    """Unknown experiment, unknown key or malformed value."""


# -- configuration ------------------------------------------------------------

def _floats(v):
    return [float(s) for s in str(v).split(",") if s.strip()]


def _ints(v):
    return [int(float(s)) for s in str(v).split(",") if s.strip()]


def _int(v):
    return int(float(v))


_KEYS: Dict[str, Callable] = {
    "experiment": str,
    "replicates": _int,
    "horizon": float,
    "master_seed": _int,
    "output_dir": str,
    "threads": _int,
    "nu": _floats,
    "a": float,
    "k": _ints,
    "checkpoints": _floats,
    "costs": _ints,
    "epsilons": _floats,
    "times": _floats,
    "gamma": str,
    "x0": float,
    "switches": _int,
    "batches": _int,
    "step": float,
}

# per-experiment defaults; keys absent here are rejected for that experiment
_DEFAULTS: Dict[str, dict] = {
    "fig3_gaussian_tail": dict(nu="1,2,4", a=1.0, replicates=10_000, horizon=1000.0,
                               checkpoints="10,20,50,100,200,500,1000"),
    "fig4_student_tail": dict(nu="1,2", a=5.0, replicates=10_000, horizon=1000.0,
                              checkpoints="10,20,50,100,200,500,1000"),
    "fig5_diffusion": dict(nu="1", gamma="quadratic:1", epsilons="10,1,0.1",
                           times="1,10,20,50", replicates=10_000, x0=2.0, step=0.0),
    "fig6_gaussian_moments": dict(nu="2", k="1,2", costs="10,30,100,300,1000",
                                  replicates=10_000),
    "fig7_student_moment": dict(nu="4,6,8", k="1", costs="10,30,100,300,1000",
                                replicates=10_000),
    "table_gaussian_moments": dict(nu="1,2", k="1,2,3,4", replicates=1),
    "table_ess": dict(nu="1", k="1,2,3,4,5,6", switches=1_000_000, batches=10_000,
                      replicates=1),
}

_COMMON = dict(master_seed=20240611, output_dir="results", threads=1)


@dataclass
class ExperimentConfig:
    """Validated configuration; ``params`` holds the typed experiment keys."""

    experiment: str
    master_seed: int
    output_dir: str
    threads: int
    replicates: int
    params: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        mapping = {str(k).strip().replace("-", "_"): v for k, v in mapping.items()}
        name = str(mapping.get("experiment", "")).strip().replace("-", "_")
        mapping["experiment"] = name
        if name not in _DEFAULTS:
            raise ConfigError(f"unknown experiment {name!r}; choose from "
                              + ", ".join(sorted(_DEFAULTS)))
        merged = {**_COMMON, **_DEFAULTS[name], **mapping}
        allowed = set(_COMMON) | set(_DEFAULTS[name]) | {"experiment"}
        typed = {}
        for key, val in merged.items():
            if key not in allowed:
                raise ConfigError(f"key {key!r} does not apply to {name}")
            try:
                typed[key] = _KEYS[key](val)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value {val!r} for {key!r}") from None
        if typed["replicates"] < 1:
            raise ConfigError("replicates must be >= 1")
        common = {k: typed.pop(k) for k in ("experiment", "master_seed", "output_dir",
                                            "threads", "replicates")}
        common["threads"] = thread_count(common["threads"])
        raw = {k: str(v) for k, v in merged.items()}
        return cls(params=typed, raw=raw, **common)


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; blank lines ignored."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {n}: expected key = value")
        out[key.strip()] = val.strip()
    return out


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        mapping = parse_config_text(fh.read())
    mapping.update(overrides or {})
    return ExperimentConfig.from_mapping(mapping)


# -- shared building blocks ---------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:g}"


def _gaussian(nu: float):
    """Target, canonical rate and inverse for ``N(0, nu^2)``."""
    t = make_gaussian(nu * nu)
    return t, SwitchingRate(t), make_gaussian_inverse(nu * nu)


def _student(nu: float):
    t = make_student_t(nu)
    return t, SwitchingRate(t), make_student_inverse(nu)


def stationary_start(target: TargetModel, rng):
    """``x0 ~ pi`` and a uniform direction."""
    x0 = float(sample_iid(target, 1, rng)[0])
    return x0, (1 if rng.random() < 0.5 else -1)


def tail_clt(rate: SwitchingRate, inv, g: Observable, checkpoints, replicates: int,
             seed: int, threads: int = 1, key: int = 0):
    """Running averages of ``g`` over stationary replicates.

    Returns:
        ``(means, var_scaled)`` per checkpoint, ``var_scaled = T Var``.
    """
    cps = np.asarray(checkpoints, dtype=float)
    simulate_direct(rate, inv, 0.0, 1, max_switches=1, seed=0)  # validates inv once

    def one(i):
        rng = stream(seed, key, i)
        x0, th = stationary_start(rate.target, rng)
        ch = simulate_direct(rate, inv, x0, th, t_max=float(cps[-1]), seed=rng,
                             validate=False)
        return [v for _, v in running_average_series(ch, g, cps)]

    arr = np.array(map_replicates(one, replicates, threads))
    var = arr.var(axis=0, ddof=1) if replicates > 1 else np.full(len(cps), math.nan)
    return arr.mean(axis=0), cps * var


def variance_vs_cost(rate: SwitchingRate, inv, k: int, costs, replicates: int, seed: int,
                     threads: int = 1, rwmh_step: Optional[float] = None, key: int = 0,
                     methods=("zigzag", "iid", "rwmh")) -> Dict[str, np.ndarray]:
    """Across-replicate variance of the estimate of ``E[x^k]`` at matched cost.

    Cost is switches for Zig-Zag, draws for IID and density evaluations for
    RWMH. Zig-Zag estimates are path averages up to the ``c``-th switch.

    Returns:
        ``{method: variances}`` aligned with ``costs``.
    """
    costs = np.asarray(costs, dtype=int)
    target = rate.target
    g = monomial(k)
    cmax = int(costs.max())
    if "rwmh" in methods and rwmh_step is None:
        rwmh_step = tune_rwmh(target, seed=seed)
    if "zigzag" in methods:
        simulate_direct(rate, inv, 0.0, 1, max_switches=1, seed=0)

    def one(i):
        rng = stream(seed, key, i)
        x0, th = stationary_start(target, rng)
        row = {}
        if "zigzag" in methods:
            ch = simulate_direct(rate, inv, x0, th, max_switches=cmax, seed=rng,
                                 validate=False)
            sw = ch.times[ch.kinds == SWITCH]
            t_c = sw[costs - 1]
            row["zigzag"] = time_integral(ch, g, t_c) / t_c
        if "iid" in methods:
            draws = sample_iid(target, cmax, rng) ** k
            row["iid"] = np.cumsum(draws)[costs - 1] / costs
        if "rwmh" in methods:
            s = run_rwmh(target, rwmh_step, cmax, x0, rng).samples ** k
            row["rwmh"] = np.cumsum(s)[costs - 1] / costs
        return row

    rows = map_replicates(one, replicates, threads)
    return {m: np.array([r[m] for r in rows]).var(axis=0, ddof=1) for m in methods}


def write_cost_csv(path, costs, variances: Dict[str, np.ndarray]) -> None:
    """``method,cost,var_estimate`` rows."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "cost", "var_estimate"])
        for m, vs in variances.items():
            for c, v in zip(costs, vs):
                w.writerow([m, int(c), f"{v:.17g}"])


# -- experiments --------------------------------------------------------------

def _checkpoints(cfg):
    cps = [c for c in cfg.params["checkpoints"] if c <= cfg.params["horizon"]]
    if not cps or cps[-1] != cfg.params["horizon"]:
        cps.append(cfg.params["horizon"])
    return cps


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in r])


def _fig3(cfg, out: Path) -> List[str]:
    p = cfg.params
    cps = _checkpoints(cfg)
    files, summary = [], []
    for i, nu in enumerate(p["nu"]):
        _, rate, inv = _gaussian(nu)
        means, vs = tail_clt(rate, inv, tail_indicator(p["a"]), cps, cfg.replicates,
                             cfg.master_seed, cfg.threads, key=i)
        name = f"fig3_gaussian_tail_nu{_fmt(nu)}.csv"
        write_series_stats_csv(out / name, cps, means, vs)
        files.append(name)
        summary.append((nu, p["a"], oracles.gaussian_tail_sigma2(p["a"], nu), float(vs[-1])))
    _write_rows(out / "fig3_summary.csv", ["nu", "a", "sigma2_theory", "var_scaled"], summary)
    return files + ["fig3_summary.csv"]


def _student_tail_theory(a, nu):
    try:
        return oracles.student_tail_sigma2(a, nu)
    except ZigZagError:
        return math.inf


def _fig4(cfg, out: Path) -> List[str]:
    p = cfg.params
    cps = _checkpoints(cfg)
    files, summary = [], []
    for i, nu in enumerate(p["nu"]):
        _, rate, inv = _student(nu)
        means, vs = tail_clt(rate, inv, tail_indicator(p["a"]), cps, cfg.replicates,
                             cfg.master_seed, cfg.threads, key=i)
        name = f"fig4_student_tail_nu{_fmt(nu)}.csv"
        write_series_stats_csv(out / name, cps, means, vs)
        files.append(name)
        summary.append((nu, p["a"], _student_tail_theory(p["a"], nu), float(vs[-1])))
    _write_rows(out / "fig4_summary.csv", ["nu", "a", "sigma2_theory", "var_scaled"], summary)
    return files + ["fig4_summary.csv"]


def _fig5(cfg, out: Path) -> List[str]:
    p = cfg.params
    nu = p["nu"][0]
    target = make_gaussian(nu * nu)
    rep = compare_distributions(target, parse_excess(p["gamma"]), p["epsilons"], p["times"],
                                cfg.replicates, cfg.master_seed, x0=p["x0"],
                                step=p["step"] or None, threads=cfg.threads)
    files = ["fig5_ks.csv"]
    write_ks_csv(out / files[0], rep)
    for e in rep.epsilon_values:
        for j, t in enumerate(rep.times):
            name = f"fig5_hist_eps{_fmt(e)}_t{_fmt(t)}.csv"
            write_histogram_csv(out / name, rep.zigzag_samples[e][:, j], rep.sde_samples[:, j])
            files.append(name)
    return files


def _cost_experiment(cfg, out: Path, prefix: str, make) -> List[str]:
    p = cfg.params
    files = []
    key = 0
    for nu in p["nu"]:
        _, rate, inv = make(nu)
        for k in p["k"]:
            res = variance_vs_cost(rate, inv, k, p["costs"], cfg.replicates,
                                   cfg.master_seed, cfg.threads, key=key)
            key += 1
            name = f"{prefix}_nu{_fmt(nu)}_k{k}.csv"
            write_cost_csv(out / name, p["costs"], res)
            files.append(name)
    return files


def _fig6(cfg, out):
    return _cost_experiment(cfg, out, "fig6_gaussian_moments", _gaussian)


def _fig7(cfg, out):
    return _cost_experiment(cfg, out, "fig7_student_moment", _student)


def _table_moments(cfg, out: Path) -> List[str]:
    reports, rows = [], []
    for nu in cfg.params["nu"]:
        target, rate, _ = _gaussian(nu)
        for k in cfg.params["k"]:
            r = variance_report(target, rate, monomial(k))
            reports.append(r)
            rows.append((nu, k, r.sigma2_psi, oracles.gaussian_sigma2(k, nu),
                         r.sigma2_langevin, oracles.gaussian_langevin(k, nu)))
    write_report_csv(out / "table_gaussian_moments.csv", reports)
    _write_rows(out / "table_gaussian_moments_oracle.csv",
                ["nu", "k", "sigma2", "sigma2_closed_form", "sigma2_langevin",
                 "sigma2_langevin_closed_form"], rows)
    return ["table_gaussian_moments.csv", "table_gaussian_moments_oracle.csv"]


def _table_ess(cfg, out: Path) -> List[str]:
    p = cfg.params
    reports, rows = [], []
    for i, nu in enumerate(p["nu"]):
        target, rate, inv = _gaussian(nu)
        n_s = switching_rate_analytic(target)
        x0, th = stationary_start(target, stream(cfg.master_seed, i, 0))
        ch = simulate_direct(rate, inv, x0, th, max_switches=p["switches"],
                             seed=stream(cfg.master_seed, i, 1))
        for k in p["k"]:
            g = monomial(k)
            per = ess_per_switch(target, g)
            reports.append(EssReport(target.name, g.name, n_s, per, per * ch.accepted,
                                     int(ch.accepted), int(ch.proposals)))
            emp = ess_batch_means(ch, g, variance_under_pi(target, g), p["batches"])
            rows.append((nu, k, int(ch.accepted), per * ch.accepted, emp))
    write_ess_csv(out / "table_ess.csv", reports)
    _write_rows(out / "table_ess_empirical.csv",
                ["nu", "k", "switches", "ess_theory", "ess_batch_means"], rows)
    return ["table_ess.csv", "table_ess_empirical.csv"]


EXPERIMENTS: Dict[str, Callable] = {
    "fig3_gaussian_tail": _fig3,
    "fig4_student_tail": _fig4,
    "fig5_diffusion": _fig5,
    "fig6_gaussian_moments": _fig6,
    "fig7_student_moment": _fig7,
    "table_gaussian_moments": _table_moments,
    "table_ess": _table_ess,
}


def _versions() -> dict:
    return {"zigzag_lab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def _write_manifest(path: Path, cfg: ExperimentConfig, files, status, wall):
    lines = [f"experiment = {cfg.experiment}", f"master_seed = {cfg.master_seed}",
             f"threads = {cfg.threads}", f"replicates = {cfg.replicates}"]
    lines += [f"config.{k} = {v}" for k, v in sorted(cfg.raw.items())]
    lines += [f"version.{k} = {v}" for k, v in _versions().items()]
    lines += [f"wall_time_s = {wall:.3f}", f"status = {status}"]
    lines += [f"file = {f}" for f in files]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run one experiment into ``cfg.output_dir``.

    ``manifest.txt`` is written even when the experiment fails; the error is
    re-raised afterwards.

    Returns:
        path of the manifest.

    Raises:
        OSError: output directory or files could not be written.
    """
    out = Path(cfg.output_dir)
    os.makedirs(out, exist_ok=True)
    start = time.perf_counter()
    files: List[str] = []
    status = "failed"
    try:
        files = EXPERIMENTS[cfg.experiment](cfg, out)
        status = "ok"
    except Exception as exc:
        status = f"failed: {type(exc).__name__}: {exc}"
        raise
    finally:
        manifest = out / "manifest.txt"
        try:
            _write_manifest(manifest, cfg, files, status, time.perf_counter() - start)
        except OSError:
            if status == "ok":
                raise
    return manifest
