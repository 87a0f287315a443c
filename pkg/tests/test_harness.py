import io
import math
from dataclasses import replace

import numpy as np
import pytest

from vsrp import harness, theory
from vsrp.harness import CellResult, ExperimentSpec, GridResult


def fake_grid(k_values, m_values, rates, trials=100):
    spec = ExperimentSpec(N=500, k_values=k_values, m_values=m_values, trials=trials)
    cells = []
    for r, K in enumerate(k_values):
        for c, M in enumerate(m_values):
            cells.append(CellResult(K, M, 1 / K, trials, round(rates[r][c] * trials), 0, 0, 0, 1))
    return GridResult(spec, cells)


# signals

def test_ternary_signal_full_and_empty():
    full = harness.generate_ternary_signal(20, 20, seed=1)
    assert np.all(np.abs(full.values) == 1)
    assert harness.generate_ternary_signal(20, 0, seed=1).K == 0
    with pytest.raises(ValueError):
        harness.generate_ternary_signal(5, 6, seed=1)


def test_ternary_signal_uniform():
    N, K, n = 100, 10, 10_000
    inclusion = np.zeros(N)
    plus = total = 0
    for s in range(n):
        x = harness.generate_ternary_signal(N, K, seed=s).values
        nz = x != 0
        assert nz.sum() == K
        inclusion += nz
        plus += int(np.sum(x > 0))
        total += K
    p = K / N
    assert np.all(np.abs(inclusion / n - p) <= 4 * math.sqrt(p * (1 - p) / n))
    assert abs(plus / total - 0.5) <= 4 * math.sqrt(0.25 / total)


# trials

def test_trial_seeds_distinct_and_stable():
    a = harness.trial_seeds(0, 10, 200, 3)
    assert a == harness.trial_seeds(0, 10, 200, 3)
    assert len(set(a)) == 3
    others = {harness.trial_seeds(0, 10, 200, t) for t in range(50)}
    others |= {harness.trial_seeds(1, 10, 200, 3), harness.trial_seeds(0, 11, 200, 3)}
    assert len(others) == 52


def test_trial_deterministic():
    spec = ExperimentSpec()
    a = harness.run_trial(spec, 10, 300, 7)
    b = harness.run_trial(spec, 10, 300, 7)
    assert a == b  # wall_time is excluded from comparison


def test_single_measurement_always_fails():
    spec = ExperimentSpec(trials=100)
    for K in (2, 10):
        assert harness.run_cell(spec, K, 1).successes == 0


def test_generous_m_succeeds():
    K = 5
    M = 2 * theory.tie_sample_complexity(K, 0.001).exact
    cell = harness.run_cell(ExperimentSpec(trials=100), K, M)
    assert cell.success_rate >= 0.99


def test_support_criterion():
    spec = ExperimentSpec(criterion="support", trials=30)
    cell = harness.run_cell(spec, 10, 600)
    assert cell.successes == 30
    assert cell.mean_fn == 0
    low = harness.run_cell(spec, 10, 60)
    assert low.successes < 30 and low.mean_fp > 0 and low.mean_fn == 0


def test_noisy_trials_run():
    spec = ExperimentSpec(trials=5, sigma=0.01, epsilon=0.5)
    cell = harness.run_cell(spec, 5, 300)
    assert 0 <= cell.successes <= 5


@pytest.mark.parametrize("bad", [
    dict(trials=0), dict(k_values=(3000,)), dict(m_values=(0,)), dict(criterion="x"),
    dict(gamma_rule=1.5), dict(epsilon=-1), dict(max_iterations=0),
])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        ExperimentSpec(**bad)


def test_fixed_gamma_rule():
    spec = ExperimentSpec(gamma_rule="0.2")
    assert spec.gamma_for(10) == 0.2 and spec.gamma_for(40) == 0.2
    assert ExperimentSpec().gamma_for(40) == 1 / 40


# grids

def test_one_cell_grid():
    spec = ExperimentSpec(k_values=(5,), m_values=(400,), trials=20)
    g = harness.run_grid(spec, jobs=1)
    assert len(g.cells) == 1 and g.cells[0].trials == 20
    assert 0 <= g.cells[0].successes <= 20


def test_grid_parallel_equals_serial():
    spec = ExperimentSpec(k_values=(2, 10), m_values=(100, 250), trials=10)
    seen = []
    a = harness.run_grid(spec, jobs=1)
    b = harness.run_grid(spec, jobs=2, progress=lambda n, t: seen.append((n, t)))
    assert a.cells == b.cells
    assert sorted(seen) == [(n, 4) for n in range(1, 5)]


def test_jobs_from_environment(monkeypatch):
    monkeypatch.setenv(harness.JOBS_ENV, "3")
    assert harness._jobs_default() == 3
    monkeypatch.setenv(harness.JOBS_ENV, "junk")
    assert harness._jobs_default() == 1


def test_grid_rates_rise_with_m():
    spec = ExperimentSpec(k_values=(10,), m_values=(20, 150, 300), trials=40)
    rates = harness.run_grid(spec).rate_matrix()[0]
    assert rates[0] <= rates[1] <= rates[2]
    assert rates[0] < 0.5 < rates[2]


# CSV

def test_csv_round_trip(tmp_path):
    spec = ExperimentSpec(k_values=(2, 5), m_values=(60, 120, 180), trials=8)
    g = harness.run_grid(spec)
    path = harness.emit_csv(g, tmp_path / "g.csv")
    rows = harness.read_csv(path)
    assert len(rows) == 6
    assert list(rows[0]) == harness.CSV_HEADER
    for row, cell in zip(rows, g.cells):
        assert (row["K"], row["M"], row["successes"], row["trials"]) == (cell.K, cell.M, cell.successes, cell.trials)
        assert row["success_rate"] == cell.success_rate
        assert row["gamma"] == cell.gamma


def test_csv_header_only_for_empty_grid(tmp_path):
    g = harness.run_grid(ExperimentSpec(k_values=(), m_values=()))
    path = harness.emit_csv(g, tmp_path / "e.csv")
    assert path.read_text() == ",".join(harness.CSV_HEADER) + "\n"


def test_csv_to_stream():
    g = fake_grid((2, 4), (10, 20), [[0, 1], [0, 0.5]])
    buf = io.StringIO()
    harness.write_csv(g, buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 5 and lines[0].startswith("N,K,M")


# contours

def test_contour_absent_when_uniform():
    g = fake_grid((2, 4), (10, 20, 30), [[1, 1, 1], [1, 1, 1]])
    assert harness.contour_lines(g, 0.5) == []


def test_contour_midpoint():
    g = fake_grid((2, 4), (10, 20), [[0, 1], [0, 1]])
    lines = harness.contour_lines(g, 0.5)
    pts = np.vstack(lines)
    assert np.allclose(pts[:, 0], 15.0)
    assert set(np.round(pts[:, 1], 9)) == {2.0, 4.0}


def test_contour_interpolates_linearly():
    g = fake_grid((2, 4), (100, 200), [[0.2, 1.0], [0.0, 0.6]])
    pts = np.vstack(harness.contour_lines(g, 0.5))
    at = {round(k): m for m, k in pts}
    assert at[2] == pytest.approx(100 + 0.3 / 0.8 * 100)
    assert at[4] == pytest.approx(100 + 0.5 / 0.6 * 100)
    assert harness.threshold_m(g, 0.5) == pytest.approx({2: at[2], 4: at[4]})


def test_threshold_never_reached():
    g = fake_grid((2, 4), (100, 200), [[0.2, 1.0], [0.0, 0.1]])
    t = harness.threshold_m(g, 0.9)
    assert t[2] == pytest.approx(187.5) and math.isnan(t[4])


def test_emit_contour_files(tmp_path):
    g = fake_grid((2, 4, 8), (10, 20, 30), [[0, 1, 1], [0, 0.5, 1], [0, 0, 1]])
    svg, data = harness.emit_contour(g, tmp_path / "c.svg", levels=[0.5, 0.9])
    assert svg.read_text().lstrip().startswith("<?xml")
    rows = data.read_text().splitlines()
    assert rows[0] == "level,line,M,K" and len(rows) > 3


def test_contour_needs_two_by_two():
    g = fake_grid((2,), (10, 20), [[0, 1]])
    with pytest.raises(ValueError):
        harness.contour_lines(g, 0.5)


# Monte Carlo false-positive rate

def test_mc_fp_rate_agrees_with_theory():
    r = harness.mc_fp_rate(2000, 10, 200, 0.1, 0.5, 100_000, seed=11)
    assert abs(r.z) <= 3
    assert r.trials == 100_000 and r.events == round(r.empirical * r.trials)


def test_mc_fp_rate_huge_threshold():
    r = harness.mc_fp_rate(2000, 10, 200, 0.1, 1e9, 10_000, seed=1)
    assert r.empirical == 0 and r.theory < 1e-9 and abs(r.z) < 0.01


def test_mc_fp_rate_dense_design():
    # every measurement holds every coordinate, so interference never vanishes
    eps = 0.5
    r = harness.mc_fp_rate(50, 3, 5, 1.0, eps, 50_000, seed=2)
    expect = (1 - 2 / math.pi * math.atan(eps / math.sqrt(3))) ** 5
    assert r.theory == pytest.approx(expect, rel=1e-12)
    assert abs(r.z) <= 3


def test_mc_fp_rate_rejects_full_support():
    with pytest.raises(ValueError):
        harness.mc_fp_rate(10, 10, 5, 0.1, 0.5, 100, seed=0)


def test_spec_dict_round_trip():
    spec = ExperimentSpec(k_values=(2, 3), m_values=(10,))
    assert ExperimentSpec(**harness.spec_dict(spec)) == spec
    assert replace(spec, trials=7).trials == 7
