"""Cross-checks of the closed forms against enumeration and simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from vsrp import oracles, theory


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _within_se(events: int, trials: int, p: float, k: float = 3.0) -> tuple[bool, float]:
    emp = events / trials
    se = math.sqrt(max(p * (1 - p), 1e-300) / trials)
    z = (emp - p) / se
    return abs(z) <= k, z


def check_enumeration() -> Check:
    worst = 0.0
    for K in range(1, 13):
        for gamma in (0.05, 0.1, 0.3, 1.0 / K):
            for eps in (0.01, 0.5, 1.0):
                a = theory.ternary_detect_rate(eps, K, gamma)
                b = oracles.enumerate_detect_rate(eps, K, gamma)
                worst = max(worst, abs(a - b))
    return Check("binomial sum matches 2^K enumeration", worst <= 1e-12, f"max abs diff {worst:.2e}")


def check_poisson_truncation() -> Check:
    worst = 0.0
    for lam in (0.1, 0.5, 1.0, 3.0, 10.0):
        for eps in (0.01, 0.5, 1.0):
            a = theory.poisson_detect_rate(eps, lam, rel_tol=1e-14)
            b = theory.poisson_detect_rate(eps, lam, rel_tol=1e-10)
            worst = max(worst, abs(a - b))
    return Check("Poisson series truncation converged", worst < 1e-9, f"max diff {worst:.2e}")


def check_support_constant() -> Check:
    d10 = abs(theory.support_constant(10) - math.e)
    d100 = abs(theory.support_constant(100) - math.e)
    return Check("support constant near e", d10 <= 0.1 and d100 <= 0.01,
                 f"|c(10)-e|={d10:.4f}, |c(100)-e|={d100:.4f}")


def check_alpha() -> Check:
    a = theory.solve_alpha(0.05, 2)
    return Check("alpha root at (0.05, 2)", abs(a - 0.5508) <= 1e-3, f"alpha={a:.6f}")


def check_tie_dominance() -> Check:
    bad = []
    for K in (2, 3, 5, 10, 20, 50, 100, 200, 500, 1000):
        for delta in (0.05, 0.01, 0.001):
            tc = theory.tie_sample_complexity(K, delta)
            if tc.closed_form < tc.exact:
                bad.append((K, delta))
    return Check("tie closed form dominates exact M", not bad, f"violations: {bad}")


def check_fp_simulation(trials: int, seed: int) -> Check:
    K, gamma, M, eps = 10, 0.1, 30, 0.5
    events = oracles.simulate_zero_coordinate(K, gamma, M, eps, trials, np.random.default_rng(seed))
    p = theory.fp_exact_ternary(eps, K, gamma, M)
    ok, z = _within_se(events, trials, p)
    return Check("false-positive closed form vs simulation", ok, f"p={p:.5f}, emp={events / trials:.5f}, z={z:+.2f}")


def check_fn_simulation(trials: int, seed: int) -> Check:
    K, gamma, M, eps = 10, 0.1, 100, 0.5
    events = oracles.simulate_nonzero_coordinate(K, gamma, M, eps, trials, np.random.default_rng(seed))
    p = theory.fn_bounds(eps, gamma, M, K).exact_ternary
    ok, z = _within_se(events, trials, p)
    return Check("false-negative closed form vs simulation", ok, f"p={p:.5f}, emp={events / trials:.5f}, z={z:+.2f}")


def check_tie_simulation(trials: int, seed: int) -> Check:
    K, gamma, M = 10, 0.1, 100
    counts = oracles.simulate_clean_counts(K, gamma, M, trials, np.random.default_rng(seed))
    p = theory.tie_error_probability(K, gamma, M)
    ok, z = _within_se(int(np.count_nonzero(counts < 2)), trials, p)
    return Check("tie error closed form vs simulation", ok, f"p={p:.5f}, z={z:+.2f}")


def run_all(trials: int = 20_000, seed: int = 0) -> list[Check]:
    checks: list[Callable[[], Check]] = [
        check_enumeration,
        check_poisson_truncation,
        check_support_constant,
        check_alpha,
        check_tie_dominance,
        lambda: check_fp_simulation(trials, seed),
        lambda: check_fn_simulation(trials, seed + 1),
        lambda: check_tie_simulation(trials, seed + 2),
    ]
    return [c() for c in checks]
