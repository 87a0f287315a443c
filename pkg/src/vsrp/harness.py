"""Seeded Monte Carlo experiments over (K, M) grids.

Every trial draws its signal, design and noise seeds from
``SeedSequence(master_seed, spawn_key=(K, M, trial))``, so a grid is a pure
function of its spec no matter how cells are scheduled.
"""

from __future__ import annotations

import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from vsrp import __version__, oracles, theory
from vsrp.decoder import CoordinateStatus, DecoderConfig, decode, support_detect
from vsrp.sensing import Signal, add_noise, generate_design, measure

log = logging.getLogger(__name__)

JOBS_ENV = "VSRP_JOBS"
MATCH_TOL = 1e-9

CSV_HEADER = [
    "N", "K", "M", "trials", "successes", "success_rate", "mean_fp", "mean_fn",
    "mean_undetermined", "mean_iterations", "gamma", "epsilon", "sigma", "seed",
]


@dataclass(frozen=True)
class ExperimentSpec:
    N: int = 2000
    k_values: tuple[int, ...] = (2, 5, 10, 20, 40)
    m_values: tuple[int, ...] = tuple(range(50, 1501, 50))
    trials: int = 100
    gamma_rule: str | float = "1/K"
    epsilon: float = 0.0
    sigma: float = 0.0
    master_seed: int = 0
    criterion: str = "full"
    tie_tol: float = 1e-10
    max_iterations: int = 4
    min_tie_size: int = 2

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(k < 0 or k > self.N for k in self.k_values):
            raise ValueError(f"every K must lie in [0, N={self.N}]")
        if any(m < 1 for m in self.m_values):
            raise ValueError("every M must be positive")
        if self.criterion not in ("full", "support"):
            raise ValueError(f"criterion must be 'full' or 'support', got {self.criterion!r}")
        if self.sigma < 0 or self.epsilon < 0:
            raise ValueError("sigma and epsilon must be non-negative")
        if self.gamma_rule != "1/K":
            g = float(self.gamma_rule)
            if not 0 < g <= 1:
                raise ValueError(f"gamma must lie in (0, 1], got {g}")
            object.__setattr__(self, "gamma_rule", g)
        self.decoder_config()

    def gamma_for(self, K: int) -> float:
        if self.gamma_rule == "1/K":
            return 1.0 / max(K, 1)
        return float(self.gamma_rule)

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(self.epsilon, self.tie_tol, self.max_iterations, self.min_tie_size)


@dataclass
class TrialOutcome:
    success: bool
    false_positives: int
    false_negatives: int
    undetermined: int
    iterations_used: int
    tie_violations: int = 0
    wall_time: float = field(default=0.0, compare=False)


@dataclass
class CellResult:
    K: int
    M: int
    gamma: float
    trials: int
    successes: int
    mean_fp: float
    mean_fn: float
    mean_undetermined: float
    mean_iterations: float
    tie_violations: int = 0

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @classmethod
    def aggregate(cls, K, M, gamma, outcomes: list[TrialOutcome]) -> "CellResult":
        n = len(outcomes)
        return cls(
            K=K, M=M, gamma=gamma, trials=n,
            successes=sum(o.success for o in outcomes),
            mean_fp=sum(o.false_positives for o in outcomes) / n,
            mean_fn=sum(o.false_negatives for o in outcomes) / n,
            mean_undetermined=sum(o.undetermined for o in outcomes) / n,
            mean_iterations=sum(o.iterations_used for o in outcomes) / n,
            tie_violations=sum(o.tie_violations for o in outcomes),
        )


@dataclass
class GridResult:
    spec: ExperimentSpec
    cells: list[CellResult]
    provenance: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def cell(self, K: int, M: int) -> CellResult:
        for c in self.cells:
            if c.K == K and c.M == M:
                return c
        raise KeyError((K, M))

    def rate_matrix(self) -> np.ndarray:
        """Success rates indexed [k_values index, m_values index]."""
        ks, ms = self.spec.k_values, self.spec.m_values
        out = np.full((len(ks), len(ms)), np.nan)
        for c in self.cells:
            out[ks.index(c.K), ms.index(c.M)] = c.success_rate
        return out

    @property
    def tie_violations(self) -> int:
        return sum(c.tie_violations for c in self.cells)


def default_spec(**overrides) -> ExperimentSpec:
    return ExperimentSpec(**overrides)


def trial_seeds(master_seed: int, K: int, M: int, trial_index: int) -> tuple[int, int, int]:
    """Independent (signal, design, noise) seeds for one trial."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(K), int(M), int(trial_index)))
    a, b, c = ss.generate_state(3, dtype=np.uint64)
    return int(a), int(b), int(c)


def generate_ternary_signal(N: int, K: int, seed: int) -> Signal:
    """K uniformly placed entries, each -1 or +1 with probability 1/2."""
    if not 0 <= K <= N:
        raise ValueError(f"need 0 <= K <= N, got K={K}, N={N}")
    rng = np.random.default_rng(seed)
    x = np.zeros(N)
    support = rng.choice(N, size=K, replace=False)
    x[support] = rng.choice((-1.0, 1.0), size=K)
    return Signal(x)


def _score_full(x: np.ndarray, result) -> TrialOutcome:
    st = result.statuses
    est = result.estimate.values
    nonzero = x != 0
    rec = st == CoordinateStatus.RECOVERED
    wrong = rec & (np.abs(est - x) > np.maximum(MATCH_TOL, MATCH_TOL * np.abs(x)))
    undetermined = int(np.count_nonzero(st == CoordinateStatus.UNDETERMINED))
    matches = bool(np.all(np.abs(est - x) <= MATCH_TOL))
    # a zero coordinate left undetermined still carries the right value;
    # an undetermined support coordinate is a failure
    missed = bool(np.any(nonzero & (st == CoordinateStatus.UNDETERMINED)))
    return TrialOutcome(
        success=matches and not missed,
        false_positives=int(np.count_nonzero(rec & ~nonzero)),
        false_negatives=int(np.count_nonzero((st == CoordinateStatus.ZERO) & nonzero)),
        undetermined=undetermined,
        iterations_used=result.iterations_used,
        tie_violations=int(np.count_nonzero(wrong)),
    )


def run_trial(spec: ExperimentSpec, K: int, M: int, trial_index: int) -> TrialOutcome:
    t0 = time.perf_counter()
    s_sig, s_design, s_noise = trial_seeds(spec.master_seed, K, M, trial_index)
    signal = generate_ternary_signal(spec.N, K, s_sig)
    design = generate_design(spec.N, M, spec.gamma_for(K), s_design)
    y = measure(signal, design)
    if spec.sigma > 0:
        y = add_noise(y, spec.sigma, s_noise)
    if spec.criterion == "support":
        found = support_detect(design, y, spec.epsilon)
        truth = signal.support
        fp = np.setdiff1d(found, truth).size
        fn = np.setdiff1d(truth, found).size
        out = TrialOutcome(fp == 0 and fn == 0, fp, fn, 0, 1)
    else:
        out = _score_full(signal.values, decode(design, y, spec.decoder_config()))
    out.wall_time = time.perf_counter() - t0
    return out


def run_cell(spec: ExperimentSpec, K: int, M: int) -> CellResult:
    outcomes = [run_trial(spec, K, M, t) for t in range(spec.trials)]
    return CellResult.aggregate(K, M, spec.gamma_for(K), outcomes)


def _jobs_default() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def run_grid(
    spec: ExperimentSpec,
    jobs: int | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> GridResult:
    """Evaluate every (K, M) cell; parallel runs give the same result as serial."""
    jobs = _jobs_default() if jobs is None else max(1, int(jobs))
    keys = [(K, M) for K in spec.k_values for M in spec.m_values]
    t0 = time.perf_counter()
    results: dict[tuple[int, int], CellResult] = {}
    if jobs == 1 or len(keys) <= 1:
        for n, (K, M) in enumerate(keys, 1):
            results[(K, M)] = run_cell(spec, K, M)
            if progress:
                progress(n, len(keys))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(run_cell, spec, K, M): (K, M) for K, M in keys}
            for n, fut in enumerate(as_completed(futures), 1):
                results[futures[fut]] = fut.result()
                if progress:
                    progress(n, len(keys))
    grid = GridResult(
        spec=spec,
        cells=[results[k] for k in keys],
        provenance={"master_seed": spec.master_seed, "version": __version__},
        wall_time=time.perf_counter() - t0,
    )
    if grid.tie_violations:
        log.error("%d tie estimates disagreed with the planted signal", grid.tie_violations)
    return grid


class FpRate(NamedTuple):
    empirical: float
    theory: float
    z: float
    events: int
    trials: int


def mc_fp_rate(N, K, M, gamma, epsilon, trials, seed, sigma=0.0) -> FpRate:
    """Monte Carlo false-positive frequency at a zero coordinate vs the ternary closed form.

    Simulates only the measurements holding the scored coordinate and the K
    nonzero entries of a +-1 signal, which is all the minimum ratio depends on.
    """
    if not 1 <= K < N:
        raise ValueError("need 1 <= K < N so a zero coordinate exists")
    rng = np.random.default_rng(seed)
    events = oracles.simulate_zero_coordinate(K, gamma, M, epsilon, trials, rng, sigma=sigma)
    emp = events / trials
    th = theory.fp_exact_ternary(epsilon, K, gamma, M, sigma)
    se = math.sqrt(th * (1.0 - th) / trials)
    if se == 0:
        z = 0.0 if emp == th else math.inf
    else:
        z = (emp - th) / se
    return FpRate(emp, th, z, events, trials)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_rows(result: GridResult) -> list[list[str]]:
    s = result.spec
    rows = []
    for c in result.cells:
        rows.append([_fmt(v) for v in (
            s.N, c.K, c.M, c.trials, c.successes, c.success_rate, c.mean_fp, c.mean_fn,
            c.mean_undetermined, c.mean_iterations, c.gamma, float(s.epsilon), float(s.sigma),
            s.master_seed,
        )])
    return rows


def write_csv(result: GridResult, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(csv_rows(result))


def emit_csv(result: GridResult, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        write_csv(result, fh)
    return path


def read_csv(path) -> list[dict]:
    ints = {"N", "K", "M", "trials", "successes", "seed"}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [
            {k: int(v) if k in ints else float(v) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def contour_lines(result: GridResult, level: float) -> list[np.ndarray]:
    """Polylines (columns M, K) where the linearly interpolated success rate equals ``level``."""
    import contourpy

    ks, ms = result.spec.k_values, result.spec.m_values
    if len(set(ks)) < 2 or len(set(ms)) < 2:
        raise ValueError("contours need at least two distinct K and two distinct M values")
    gen = contourpy.contour_generator(
        x=np.asarray(ms, float), y=np.asarray(ks, float), z=result.rate_matrix(),
        line_type=contourpy.LineType.Separate,
    )
    return [np.asarray(seg) for seg in gen.lines(level) if len(seg) >= 2]


def threshold_m(result: GridResult, level: float) -> dict[int, float]:
    """Per K, the interpolated M where the success rate first reaches ``level`` (nan if never)."""
    ms = np.asarray(result.spec.m_values, float)
    rates = result.rate_matrix()
    out = {}
    for r, K in enumerate(result.spec.k_values):
        row = rates[r]
        hit = np.flatnonzero(row >= level)
        if hit.size == 0:
            out[K] = math.nan
        elif hit[0] == 0:
            out[K] = ms[0]
        else:
            a, b = hit[0] - 1, hit[0]
            out[K] = ms[a] + (level - row[a]) / (row[b] - row[a]) * (ms[b] - ms[a])
    return out


def emit_contour(result: GridResult, path, levels=(0.5, 0.9, 0.99)) -> tuple[Path, Path]:
    """Write an SVG contour plot and a CSV of the contour vertices next to it."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    data_path = path.with_suffix(".contour.csv")
    lines = {lv: contour_lines(result, lv) for lv in levels}

    fig, ax = plt.subplots(figsize=(6, 4.5))
    colors = plt.cm.viridis(np.linspace(0, 0.9, len(levels)))
    for color, lv in zip(colors, levels):
        for n, seg in enumerate(lines[lv]):
            ax.plot(seg[:, 0], seg[:, 1], color=color, label=f"{lv:g}" if n == 0 else None)
    ax.set_xlabel("M")
    ax.set_ylabel("K")
    ax.set_title(f"success probability, N={result.spec.N}")
    ax.set_xlim(min(result.spec.m_values), max(result.spec.m_values))
    ax.set_ylim(min(result.spec.k_values), max(result.spec.k_values))
    if any(lines.values()):
        ax.legend(title="level")
    fig.savefig(path, format="svg")
    plt.close(fig)

    with data_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "line", "M", "K"])
        for lv in levels:
            for n, seg in enumerate(lines[lv]):
                for m, k in seg:
                    w.writerow([repr(float(lv)), n, repr(float(m)), repr(float(k))])
    return path, data_path


def spec_dict(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["k_values"] = list(spec.k_values)
    d["m_values"] = list(spec.m_values)
    return d
