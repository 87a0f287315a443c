"""Independent reference computations for the closed forms in :mod:`vsrp.theory`.

Nothing here calls into ``theory``: expectations are enumerated pattern by
pattern and probabilities are estimated by simulating the measurement model
coordinate by coordinate.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "enumerate_detect_rate",
    "simulate_zero_coordinate",
    "simulate_nonzero_coordinate",
    "simulate_clean_counts",
]


def enumerate_detect_rate(epsilon: float, K: int, gamma: float) -> float:
    """gamma*K * E[P(|C| <= eps / sqrt(#present))] over all 2^K presence patterns."""
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=K):
        n = sum(pattern)
        weight = gamma**n * (1.0 - gamma) ** (K - n)
        if n == 0:
            inner = 1.0
        else:
            inner = 2.0 / math.pi * math.atan(epsilon / math.sqrt(n))
        total += weight * inner
    return gamma * K * total


def _interference(rng, n_cols, K, gamma, sigma):
    """Numerator sum_t x_t s_tj r_tj (+ noise) for n_cols measurements, x_t = +-1."""
    present = rng.random((n_cols, K)) < gamma
    signs = rng.choice((-1.0, 1.0), size=(n_cols, K))
    s = rng.standard_normal((n_cols, K))
    num = np.sum(present * signs * s, axis=1)
    if sigma > 0:
        num = num + rng.normal(0.0, sigma, n_cols)
    return num


def _min_abs_per_trial(vals: np.ndarray, counts: np.ndarray) -> np.ndarray:
    out = np.full(counts.size, np.inf)
    has = counts > 0
    if vals.size:
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        out[has] = np.minimum.reduceat(np.abs(vals), starts[has])
    return out


def simulate_zero_coordinate(K, gamma, M, epsilon, trials, rng, sigma=0.0, batch=20_000):
    """Count trials where a zero coordinate has every ratio above epsilon.

    Only the measurements containing the coordinate and the K nonzero
    entries of a +-1 signal are simulated; all other entries multiply zeros.
    A coordinate in no measurement counts as an event.
    """
    events = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        counts = rng.binomial(M, gamma, size=b)
        n_cols = int(counts.sum())
        num = _interference(rng, n_cols, K, gamma, sigma)
        z = num / rng.standard_normal(n_cols)
        events += int(np.count_nonzero(_min_abs_per_trial(z, counts) > epsilon))
        done += b
    return events


def simulate_nonzero_coordinate(K, gamma, M, epsilon, trials, rng, x_value=1.0, batch=20_000):
    """Count trials where a nonzero coordinate has some ratio within epsilon of 0."""
    events = 0
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        counts = rng.binomial(M, gamma, size=b)
        n_cols = int(counts.sum())
        num = _interference(rng, n_cols, K - 1, gamma, 0.0)
        z = x_value + num / rng.standard_normal(n_cols)
        events += int(np.count_nonzero(_min_abs_per_trial(z, counts) <= epsilon))
        done += b
    return events


def simulate_clean_counts(K, gamma, M, trials, rng, batch=2_000):
    """Per trial, how many of M measurements hold coordinate i and no other nonzero."""
    out = np.empty(trials, dtype=np.int64)
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        mine = rng.random((b, M)) < gamma
        others = rng.random((b, M, K - 1)) < gamma if K > 1 else np.zeros((b, M, 0), bool)
        clean = mine & ~others.any(axis=2)
        out[done:done + b] = clean.sum(axis=1)
        done += b
    return out
