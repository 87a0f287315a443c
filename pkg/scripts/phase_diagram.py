"""Success-probability grid over (K, M) with CSV, contour plot and 0.9 crossings.

    python scripts/phase_diagram.py --out results/phase
"""

import argparse
import json
import logging
from pathlib import Path

from vsrp import harness


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--k-list", type=int, nargs="+", default=[2, 5, 10, 20, 40])
    p.add_argument("--m-start", type=int, default=50)
    p.add_argument("--m-stop", type=int, default=1500)
    p.add_argument("--m-step", type=int, default=50)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--criterion", choices=["full", "support"], default="full")
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", default="results/phase")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = harness.ExperimentSpec(
        N=args.n, k_values=args.k_list, m_values=range(args.m_start, args.m_stop + 1, args.m_step),
        trials=args.trials, master_seed=args.seed, criterion=args.criterion,
    )
    grid = harness.run_grid(spec, jobs=args.jobs, progress=lambda d, t: logging.info("cell %d/%d", d, t))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    harness.emit_csv(grid, out.with_suffix(".csv"))
    harness.emit_contour(grid, out.with_suffix(".svg"))
    out.with_suffix(".json").write_text(json.dumps(
        {"spec": harness.spec_dict(spec), "provenance": grid.provenance, "wall_time": grid.wall_time}, indent=2))

    print(f"{'K':>4} {'M at 0.5':>10} {'M at 0.9':>10}")
    t5, t9 = harness.threshold_m(grid, 0.5), harness.threshold_m(grid, 0.9)
    for K in spec.k_values:
        print(f"{K:>4} {t5[K]:>10.1f} {t9[K]:>10.1f}")
    print(f"tie violations: {grid.tie_violations}; {grid.wall_time:.1f} s")


if __name__ == "__main__":
    main()
