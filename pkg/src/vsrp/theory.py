"""Closed-form error probabilities and sample-complexity planners.

All logarithms are natural. Probabilities of the form ``(1 - q) ** M`` are
evaluated as ``exp(M * log1p(-q))`` to stay accurate for small q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

__all__ = [
    "cauchy_abs_cdf",
    "fp_worst_bound",
    "fp_data_bound",
    "ternary_detect_rate",
    "poisson_detect_rate",
    "fp_exact_ternary",
    "fn_bounds",
    "support_constant",
    "support_sample_complexity",
    "support_sample_complexity_approx",
    "ternary_support_sample_complexity",
    "tie_error_probability",
    "tie_sample_complexity",
    "alpha_equation",
    "solve_alpha",
    "noisy_fp_worst_bound",
    "noisy_fp_data_bound",
    "noisy_support_sample_complexity",
    "BoundQuery",
]

_TWO_OVER_PI = 2.0 / math.pi


def _need(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def _check_prob_open(delta, name="delta"):
    _need(0.0 < delta < 1.0, f"{name} must lie in (0, 1), got {delta}")


def _check_gamma(gamma):
    _need(0.0 < gamma <= 1.0, f"gamma must lie in (0, 1], got {gamma}")


def _check_M(M):
    _need(int(M) == M and M >= 1, f"M must be a positive integer, got {M}")


def _power_complement(q: float, M: float) -> float:
    """(1 - q) ** M for q in [0, 1]."""
    if q >= 1.0:
        return 0.0
    return math.exp(M * math.log1p(-q))


def cauchy_abs_cdf(t: float) -> float:
    """P(|C| <= t) for a standard Cauchy C; equals 1 at t = inf."""
    _need(t >= 0, f"t must be non-negative, got {t}")
    if math.isinf(t):
        return 1.0
    return _TWO_OVER_PI * math.atan(t)


def _cdf_over_sqrt(epsilon: float, k: np.ndarray) -> np.ndarray:
    """(2/pi) atan(epsilon / sqrt(k)) with the k = 0 entry set to 1."""
    k = np.asarray(k, dtype=float)
    out = np.ones_like(k)
    pos = k > 0
    out[pos] = _TWO_OVER_PI * np.arctan(epsilon / np.sqrt(k[pos]))
    return out


def fp_worst_bound(K: int, gamma: float, M: int) -> float:
    _need(K >= 1, "K must be >= 1")
    _check_gamma(gamma)
    _check_M(M)
    return _power_complement(gamma * (1.0 - gamma) ** K, M)


def fp_data_bound(epsilon: float, gamma: float, M: int, signal_energy: float, sigma: float = 0.0) -> float:
    """Jensen bound on the false-positive probability given sum_t x_t^2.

    ``sigma > 0`` adds measurement-noise variance to the interference.
    """
    _need(epsilon >= 0, "epsilon must be non-negative")
    _need(sigma >= 0, "sigma must be non-negative")
    _need(signal_energy >= 0, "signal_energy must be non-negative")
    _check_gamma(gamma)
    _check_M(M)
    spread = math.sqrt(sigma * sigma + gamma * signal_energy)
    c = 1.0 if spread == 0 else cauchy_abs_cdf(epsilon / spread)
    if epsilon == 0:
        c = 0.0
    return _power_complement(gamma * c, M)


noisy_fp_data_bound = fp_data_bound


def ternary_detect_rate(epsilon: float, K: int, gamma: float, sigma: float = 0.0) -> float:
    """gamma*K * E[(2/pi) atan(eps / sqrt(Z + sigma^2))], Z ~ Binomial(K, gamma).

    Without noise the Z = 0 term contributes its full probability mass.
    """
    _need(epsilon >= 0, "epsilon must be non-negative")
    _need(sigma >= 0, "sigma must be non-negative")
    _need(K >= 1, "K must be >= 1")
    _check_gamma(gamma)
    k = np.arange(K + 1)
    pmf = stats.binom.pmf(k, K, gamma)
    return float(gamma * K * np.dot(pmf, _cdf_over_sqrt(epsilon, k + sigma * sigma)))


def poisson_detect_rate(epsilon: float, lam: float, rel_tol: float = 1e-14) -> float:
    """Poisson limit of :func:`ternary_detect_rate` at lam = gamma * K.

    Sums the series until lam times the remaining Poisson tail mass drops
    below ``rel_tol`` of the running total.
    """
    _need(lam > 0, "lambda must be positive")
    _need(epsilon >= 0, "epsilon must be non-negative")
    log_pmf = -lam
    total = lam * math.exp(log_pmf)
    k = 0
    while True:
        tail = stats.poisson.sf(k, lam)
        if lam * tail < rel_tol * total:
            break
        k += 1
        log_pmf += math.log(lam) - math.log(k)
        total += lam * math.exp(log_pmf) * _TWO_OVER_PI * math.atan(epsilon / math.sqrt(k))
    return total


def fp_exact_ternary(epsilon: float, K: int, gamma: float, M: int, sigma: float = 0.0) -> float:
    """Exact false-positive probability of a zero coordinate, ternary signal."""
    _check_M(M)
    return _power_complement(ternary_detect_rate(epsilon, K, gamma, sigma) / K, M)


class FalseNegative(NamedTuple):
    exact_ternary: float
    loose: float


def fn_bounds(epsilon: float, gamma: float, M: int, K: int, x_value: float = 1.0) -> FalseNegative:
    """Probability that a nonzero coordinate is declared zero.

    ``exact_ternary`` takes the other K - 1 nonzeros as unit magnitude, so
    the interference energy is Binomial(K - 1, gamma); ``loose`` is the
    signal-free upper bound.
    """
    _need(epsilon >= 0, "epsilon must be non-negative")
    _need(K >= 1, "K must be >= 1")
    _need(x_value != 0, "x_value must be nonzero")
    _check_gamma(gamma)
    _check_M(M)
    x = abs(float(x_value))
    k = np.arange(K)
    pmf = stats.binom.pmf(k, K - 1, gamma)
    inside = np.empty(K)
    # no interference: the ratio is x itself
    inside[0] = 1.0 if x <= epsilon else 0.0
    root = np.sqrt(k[1:].astype(float))
    inside[1:] = (np.arctan((epsilon + x) / root) - np.arctan((x - epsilon) / root)) / math.pi
    q = float(np.dot(pmf, inside))
    exact = 1.0 - _power_complement(gamma * q, M)
    loose = 1.0 - _power_complement(_TWO_OVER_PI * gamma * math.atan(epsilon), M)
    return FalseNegative(exact, loose)


def support_constant(K: int) -> float:
    """1 / (K log(1 / (1 - (1/K)(1 - 1/K)^K))); tends to e as K grows."""
    _need(K >= 2, "K must be >= 2")
    p = (1.0 / K) * (1.0 - 1.0 / K) ** K
    return 1.0 / (K * -math.log1p(-p))


def support_sample_complexity(N: int, K: int, delta: float) -> int:
    """Measurements for exact support detection at gamma = 1/K, epsilon -> 0.

    K = 1 is rejected: (1 - 1/K)^K vanishes and the expression degenerates.
    """
    _need(K >= 2, "K must be >= 2 (the K = 1 expression is degenerate)")
    _need(N >= K, "need N >= K")
    _check_prob_open(delta)
    p = (1.0 / K) * (1.0 - 1.0 / K) ** K
    return math.ceil(math.log(N / delta) / -math.log1p(-p))


def support_sample_complexity_approx(N: int, K: int, delta: float) -> float:
    _need(K >= 1 and N >= K, "need N >= K >= 1")
    _check_prob_open(delta)
    return math.e * K * math.log(N / delta)


def ternary_support_sample_complexity(N: int, K: int, delta: float, epsilon: float, gamma: float) -> int:
    """ceil(K / H * log(N / delta)) with H = :func:`ternary_detect_rate`."""
    _need(N >= K, "need N >= K")
    _check_prob_open(delta)
    return math.ceil(K / ternary_detect_rate(epsilon, K, gamma) * math.log(N / delta))


def tie_error_probability(K: int, gamma: float, M: int) -> float:
    """P(fewer than two interference-free measurements) for a nonzero coordinate."""
    _need(K >= 1, "K must be >= 1")
    _check_gamma(gamma)
    _need(int(M) == M and M >= 2, f"M must be an integer >= 2, got {M}")
    p = gamma * (1.0 - gamma) ** (K - 1)
    if p >= 1.0:
        return 0.0
    return _power_complement(p, M) + M * p * _power_complement(p, M - 1)


class TieComplexity(NamedTuple):
    exact: int
    closed_form: int


def tie_sample_complexity(K: int, delta: float) -> TieComplexity:
    """Smallest M with K * tie_error <= delta at gamma = 1/K, and the closed form."""
    _need(K >= 2, "K must be >= 2")
    _need(0.0 < delta <= 0.05, f"delta must lie in (0, 0.05], got {delta}")
    gamma = 1.0 / K

    def ok(m):
        return K * tie_error_probability(K, gamma, m) <= delta

    hi = 2
    while not ok(hi):
        hi *= 2
    lo = max(1, hi // 2)
    # ok(hi) holds; lo is 1 or fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    closed = math.ceil(1.551 * math.e * K * math.log(K / delta))
    return TieComplexity(hi, closed)


def alpha_equation(delta: float, K: int, alpha: float) -> float:
    """Left side of the inequality whose unit root fixes the 1 + alpha margin."""
    p = (1.0 / K) * (1.0 - 1.0 / K) ** (K - 1)
    r = (delta / K) ** alpha
    return r + (1.0 + alpha) * math.log(K / delta) * r / (math.log1p(-p) * (1.0 - 1.0 / p))


def solve_alpha(delta: float, K: int, tol: float = 1e-8) -> float:
    """Root of alpha_equation(delta, K, alpha) = 1 by bisection on [1/log 40, 4]."""
    _need(K >= 2, "K must be >= 2")
    _need(0.0 < delta <= 0.05, f"delta must lie in (0, 0.05], got {delta}")
    lo, hi = 1.0 / math.log(40.0), 4.0
    f_lo = alpha_equation(delta, K, lo) - 1.0
    f_hi = alpha_equation(delta, K, hi) - 1.0
    if f_lo * f_hi > 0:
        raise ValueError(f"no sign change on [{lo:.4f}, {hi}] for delta={delta}, K={K}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = alpha_equation(delta, K, mid) - 1.0
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def noisy_fp_worst_bound(epsilon: float, sigma: float, K: int, gamma: float, M: int) -> float:
    _need(sigma > 0, "sigma must be positive")
    _need(epsilon >= 0, "epsilon must be non-negative")
    _need(K >= 1, "K must be >= 1")
    _check_gamma(gamma)
    _check_M(M)
    c = cauchy_abs_cdf(epsilon / sigma)
    return _power_complement(gamma * c * (1.0 - gamma) ** K, M)


def noisy_support_sample_complexity(N: int, K: int, delta: float, epsilon: float, sigma: float) -> int:
    """ceil(e K log(N/delta) / ((2/pi) atan(eps/sigma))).

    Follows from the noisy worst-case bound at gamma = 1/K. The arctan
    factor divides, so more noise always asks for more measurements.
    """
    _need(sigma > 0, "sigma must be positive")
    _need(epsilon > 0, "epsilon must be positive")
    _need(N >= K >= 1, "need N >= K >= 1")
    _check_prob_open(delta)
    return math.ceil(math.e * K * math.log(N / delta) / cauchy_abs_cdf(epsilon / sigma))


@dataclass
class BoundQuery:
    """Parameter bundle for the ``bounds`` command."""

    N: int = 2000
    K: int = 10
    M: int = 200
    gamma: float | None = None
    epsilon: float = 0.0
    delta: float = 0.05
    sigma: float = 0.0
    signal_energy: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.gamma is None:
            self.gamma = 1.0 / self.K
        if self.signal_energy is None:
            self.signal_energy = float(self.K)
        if self.lam is None:
            self.lam = self.gamma * self.K
        _check_gamma(self.gamma)
        _need(self.epsilon >= 0 and self.sigma >= 0, "epsilon and sigma must be non-negative")

    def evaluate(self, what: str) -> list[tuple[str, float]]:
        if what == "fp-worst":
            rows = [("fp_worst_bound", fp_worst_bound(self.K, self.gamma, self.M))]
            if self.sigma > 0:
                rows.append(("noisy_fp_worst_bound",
                             noisy_fp_worst_bound(self.epsilon, self.sigma, self.K, self.gamma, self.M)))
            rows.append(("fp_data_bound",
                         fp_data_bound(self.epsilon, self.gamma, self.M, self.signal_energy, self.sigma)))
            return rows
        if what == "fp-ternary":
            return [("fp_exact_ternary", fp_exact_ternary(self.epsilon, self.K, self.gamma, self.M))]
        if what == "fn":
            fn = fn_bounds(self.epsilon, self.gamma, self.M, self.K)
            return [("fn_exact_ternary", fn.exact_ternary), ("fn_loose", fn.loose)]
        if what == "support-m":
            rows = [
                ("support_m_exact", support_sample_complexity(self.N, self.K, self.delta)),
                ("support_m_approx", support_sample_complexity_approx(self.N, self.K, self.delta)),
                ("support_constant", support_constant(self.K)),
            ]
            if self.epsilon > 0:
                rows.append(("support_m_ternary", ternary_support_sample_complexity(
                    self.N, self.K, self.delta, self.epsilon, self.gamma)))
            if self.sigma > 0 and self.epsilon > 0:
                rows.append(("support_m_noisy", noisy_support_sample_complexity(
                    self.N, self.K, self.delta, self.epsilon, self.sigma)))
            return rows
        if what == "tie-m":
            tc = tie_sample_complexity(self.K, self.delta)
            return [("tie_m_exact", tc.exact), ("tie_m_closed_form", tc.closed_form),
                    ("tie_error_probability", tie_error_probability(self.K, self.gamma, self.M))]
        if what == "alpha":
            return [("alpha", solve_alpha(self.delta, self.K))]
        if what == "h":
            return [("h", poisson_detect_rate(self.epsilon, self.lam)),
                    ("1/h", 1.0 / poisson_detect_rate(self.epsilon, self.lam))]
        if what == "H":
            v = ternary_detect_rate(self.epsilon, self.K, self.gamma)
            return [("H", v), ("1/H", 1.0 / v)]
        raise ValueError(f"unknown quantity {what!r}")
