import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from vsrp import theory
from vsrp.decoder import (
    CoordinateStatus,
    DecoderConfig,
    RatioColumn,
    abs_min_estimate,
    decode,
    ratio_statistics,
    support_detect,
    tie_estimate,
)
from vsrp.harness import generate_ternary_signal
from vsrp.sensing import MeasurementSet, Signal, generate_design, measure, subtract_contribution

Z, R, U = CoordinateStatus.ZERO, CoordinateStatus.RECOVERED, CoordinateStatus.UNDETERMINED


def col(*z):
    return RatioColumn(0, np.arange(len(z)), np.array(z, dtype=float))


def planted(N, K, M, seed, gamma=None):
    x = generate_ternary_signal(N, K, seed)
    d = generate_design(N, M, gamma or 1 / K, seed + 1)
    return x, d, measure(x, d)


# absolute minimum and tie estimators on hand-written columns

def test_abs_min_threshold():
    assert abs_min_estimate(col(3.0, -0.2, 7.5), 0.5) == (-0.2, True)
    assert abs_min_estimate(col(3.0, -0.2, 7.5), 0.1) == (-0.2, False)


@pytest.mark.parametrize("eps", [0.0, 1.0, 1e9])
def test_abs_min_empty_column(eps):
    assert abs_min_estimate(col(), eps) == (None, False)


def test_tie_within_tolerance():
    v = tie_estimate(col(1.0, 1.0 + 1e-13, -4.7, 2.2), DecoderConfig(tie_tol=1e-10))
    assert v == pytest.approx(1.0, abs=1e-12)


def test_no_tie():
    assert tie_estimate(col(-4.7, 2.2, 9.1), DecoderConfig()) is None
    assert tie_estimate(col(5.0), DecoderConfig()) is None


def test_largest_cluster_wins_and_equal_clusters_refuse():
    cfg = DecoderConfig()
    assert tie_estimate(col(2.0, 2.0, 2.0, -1.0, -1.0, 7.0), cfg) == 2.0
    assert tie_estimate(col(2.0, 2.0, -1.0, -1.0, 7.0), cfg) is None


def test_min_tie_size():
    cfg = DecoderConfig(min_tie_size=3)
    assert tie_estimate(col(4.0, 4.0, 1.0), cfg) is None
    assert tie_estimate(col(4.0, 4.0, 4.0, 1.0), cfg) == 4.0


def test_tolerance_is_relative_for_large_values():
    cfg = DecoderConfig(tie_tol=1e-10)
    assert tie_estimate(col(1e6, 1e6 + 5e-5), cfg) == pytest.approx(1e6)
    assert tie_estimate(col(1e6, 1e6 + 5e-3), cfg) is None


@settings(max_examples=60, deadline=None)
@given(
    value=st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
    noise=st.lists(st.floats(-1e3, 1e3), min_size=0, max_size=8),
    reps=st.integers(2, 4),
    seed=st.integers(0, 1000),
)
def test_tie_order_free_and_finds_planted_value(value, noise, reps, seed):
    # noise values far from each other and from the planted one
    spread = [v for v in noise if abs(v - value) > 1e-6 * max(1, abs(value))]
    spread = [v for n, v in enumerate(spread) if all(abs(v - w) > 1e-6 * max(1, abs(v)) for w in spread[:n])]
    z = np.array([value] * reps + spread)
    np.random.default_rng(seed).shuffle(z)
    assert tie_estimate(RatioColumn(0, np.arange(z.size), z), DecoderConfig()) == pytest.approx(value)


def test_config_validation():
    for bad in (dict(epsilon=-1), dict(tie_tol=-1), dict(max_iterations=0), dict(min_tie_size=1)):
        with pytest.raises(ValueError):
            DecoderConfig(**bad)


# ratio statistics

def test_ratios_of_zero_signal_are_zero():
    d = generate_design(50, 40, 0.3, seed=1)
    m = measure(Signal.zeros(50), d)
    for i in range(50):
        assert np.all(ratio_statistics(d, m, i).z == 0.0)


def test_single_coordinate_ratios_equal_value():
    d = generate_design(1, 30, 1.0, seed=2)
    c = 0.7310585786300049
    zs = ratio_statistics(d, measure(Signal([c]), d), 0).z
    assert zs.size == 30
    assert np.all(np.abs(zs - c) <= 2 * np.spacing(c))


def test_ratios_list_every_column_holding_coordinate():
    d = generate_design(30, 50, 0.3, seed=3)
    m = MeasurementSet(np.random.default_rng(3).normal(size=50))
    for i in range(30):
        rc = ratio_statistics(d, m, i)
        expect = [j for j in range(50) if i in d.column(j)[0]]
        assert rc.measurements.tolist() == expect
        for j, z in zip(rc.measurements, rc.z):
            rows, vals = d.column(j)
            assert z == m.y[j] / vals[rows == i][0]


def test_clean_columns_give_exact_value():
    # the number of ratios equal to x_i matches a direct count of columns that hold i and no other nonzero
    N, K, M, gamma = 100, 5, 50, 0.2
    x, d, m = planted(N, K, M, seed=10, gamma=gamma)
    supp = set(x.support.tolist())
    for i in supp:
        clean = 0
        for j in range(M):
            rows = set(d.column(j)[0].tolist())
            if i in rows and not (rows & supp) - {i}:
                clean += 1
        z = ratio_statistics(d, m, i).z
        assert np.count_nonzero(np.abs(z - x.values[i]) <= 1e-12) == clean


# support detection

def test_support_detect_zero_signal():
    N, M, gamma = 200, 20, 0.05
    d = generate_design(N, M, gamma, seed=4)
    found = support_detect(d, measure(Signal.zeros(N), d), 0.0)
    assert found.tolist() == np.flatnonzero(np.bincount(d.rows, minlength=N) == 0).tolist()


@pytest.mark.parametrize("gamma", [1.0, 0.5, 0.2])
def test_support_detect_single_nonzero(gamma):
    N, M, i = 40, 25, 13
    d = generate_design(N, M, gamma, seed=5)
    found = set(support_detect(d, measure(Signal.from_entries(N, [(i, -1.5)]), d), 0.0).tolist())
    cols = [set(d.column(j)[0].tolist()) for j in range(M)]
    expect = {t for t in range(N) if not any(t in c and i not in c for c in cols)}
    assert i in found
    assert found == expect


def test_support_detect_never_misses_at_zero_threshold():
    N, K = 2000, 10
    M = math.ceil(math.e * K * math.log(N / 0.05))
    assert M == 289
    hits = 0
    for t in range(100):
        x, d, m = planted(N, K, M, seed=1000 + 7 * t)
        hits += set(x.support.tolist()) <= set(support_detect(d, m, 0.0).tolist())
    assert hits >= 95


def test_zero_detection_exact_in_floating_point():
    x, d, m = planted(500, 8, 120, seed=77)
    supp = set(x.support.tolist())
    found = set(support_detect(d, m, 0.0).tolist())
    for i in range(500):
        if i in supp:
            continue
        has_clean = any(i in set(d.column(j)[0].tolist()) and not set(d.column(j)[0].tolist()) & supp
                        for j in range(d.M))
        if has_clean:
            assert i not in found


def test_support_fp_rate_matches_closed_form():
    # one fixed zero coordinate per independent instance keeps trials independent
    N, K, gamma, M, eps = 200, 10, 0.1, 20, 0.5
    trials = 3000
    events = 0
    rng = np.random.default_rng(8)
    for t in range(trials):
        x = np.zeros(N)
        x[1:K + 1] = rng.choice((-1.0, 1.0), size=K)
        d = generate_design(N, M, gamma, seed=int(rng.integers(2**63)))
        events += 0 in support_detect(d, measure(Signal(x), d), eps)
    p = theory.fp_exact_ternary(eps, K, gamma, M)
    se = math.sqrt(p * (1 - p) / trials)
    assert abs(events / trials - p) <= 3 * se


# full decoding

def test_decode_zero_signal():
    N = 300
    d = generate_design(N, 30, 0.05, seed=6)
    res = decode(d, measure(Signal.zeros(N), d))
    absent = np.bincount(d.rows, minlength=N) == 0
    assert np.all(res.statuses[absent] == U)
    assert np.all(res.statuses[~absent] == Z)
    assert np.all(res.estimate.values == 0)
    assert res.iterations_used == 1


def test_decode_explained_measurements_all_zero():
    x, d, m = planted(400, 6, 150, seed=12)
    res = decode(d, m)
    again = decode(d, res.residual)
    assert again.iterations_used == 1
    covered = np.bincount(d.rows, minlength=d.N) > 0
    assert np.all(again.statuses[covered] == Z)


def test_decode_exact_recovery_rate():
    N, K, delta = 2000, 10, 0.05
    M = math.ceil(1.551 * math.e * K * math.ceil(math.log(K / delta)))
    assert M == 253
    ok = 0
    for t in range(100):
        x, d, m = planted(N, K, M, seed=5000 + 3 * t)
        res = decode(d, m)
        ok += res.count(U) == 0 and np.array_equal(res.estimate.values, x.values)
    assert ok >= 95


def test_tie_never_wrong_across_instances():
    N, K, M = 2000, 10, 600
    checked = 0
    for t in range(100):
        x, d, m = planted(N, K, M, seed=9000 + 11 * t)
        res = decode(d, m, DecoderConfig(max_iterations=1))
        for i in res.recovered:
            assert abs(res.estimate.values[i] - x.values[i]) <= max(1e-9, 1e-9 * abs(x.values[i]))
            checked += 1
    assert checked >= 900


def test_decode_round_accounting():
    x, d, m = planted(1500, 30, 500, seed=21)
    res = decode(d, m)
    decided_before = 0
    for r in res.rounds:
        assert r.entries_touched == d.nnz
        decided = d.N - r.undetermined
        assert decided >= decided_before
        decided_before = decided
    assert res.entries_touched == d.nnz * res.iterations_used
    assert res.count(Z) + res.count(R) + res.count(U) == d.N


def test_residual_consistent_with_estimate():
    x, d, m = planted(1500, 30, 350, seed=22)
    res = decode(d, m)
    again = subtract_contribution(m, d, res.estimate).y
    scale = np.maximum(1.0, np.abs(m.y))
    assert np.all(np.abs(res.residual.y - again) <= 1e-10 * scale)


def test_decode_respects_iteration_cap():
    x, d, m = planted(2000, 40, 400, seed=23)
    assert decode(d, m, DecoderConfig(max_iterations=1)).iterations_used == 1
    assert decode(d, m, DecoderConfig(max_iterations=2)).iterations_used <= 2


def test_mismatched_measurements_rejected():
    d = generate_design(10, 5, 0.5, seed=0)
    with pytest.raises(ValueError):
        decode(d, MeasurementSet(np.zeros(6)))
    with pytest.raises(ValueError):
        support_detect(d, MeasurementSet(np.zeros(4)))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), K=st.integers(1, 15), M=st.integers(5, 200))
def test_decode_never_claims_wrong_values(seed, K, M):
    x, d, m = planted(300, K, M, seed=seed)
    res = decode(d, m)
    rec = res.recovered
    assert np.all(np.abs(res.estimate.values[rec] - x.values[rec]) <= 1e-9)
    zeros = res.statuses == Z
    assert np.all(x.values[zeros] == 0)
