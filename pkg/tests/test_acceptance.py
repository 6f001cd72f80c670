"""Acceptance criteria at their stated tolerances, full profile.

Each test prints one ``[PASS]``/``[FAIL]`` line. Criterion 10 reuses the
runtimes of criteria 1-9 and also times a complete quick-profile run.
"""

import time

import pytest

from zigzag_lab import acceptance, oracles
from zigzag_lab.acceptance import criterion_10, run_criterion, verify_all

_RESULTS = {}


def _result(n):
    if n not in _RESULTS:
        _RESULTS[n] = run_criterion(n, "full")
    return _RESULTS[n]


@pytest.mark.slow
@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(number, capsys):
    r = _result(number)
    # bypass capture so the status line lands in the plain test log
    with capsys.disabled():
        print("\n" + r.line(), flush=True)
    assert r.passed, r.line()


@pytest.mark.slow
def test_criterion_10(capsys):
    results = [_result(n) for n in range(1, 10)]
    r = criterion_10(results, "full")
    start = time.perf_counter()
    lines = []
    verify_all("quick", echo=lines.append)
    quick = time.perf_counter() - start
    with capsys.disabled():
        print("\n" + r.line(), flush=True)
        print(f"[{'PASS' if quick < 180 else 'FAIL'}] criterion 10 quick profile: "
              f"{quick:.0f}s (budget 180s)", flush=True)
    assert r.passed, r.line()
    assert quick < 180


def test_corrupted_oracle_is_caught(monkeypatch):
    real = oracles.gaussian_sigma2
    monkeypatch.setitem(oracles.ORACLES, oracles.OracleCase.GAUSSIAN_SIGMA2,
                        lambda k, nu: real(k, nu) * (1 + 1e-4))
    r = run_criterion(1, "full")
    assert not r.passed
    assert acceptance.PROFILES["quick"].replicates * 10 == acceptance.PROFILES["full"].replicates
