"""Planned measurement counts next to simulated success rates at those counts.

For each K the support planner and the tie planner give an M; a short
simulation at N reports how often decoding actually succeeds there.
"""

import argparse

from vsrp import harness, theory


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--k-list", type=int, nargs="+", default=[2, 5, 10, 20, 40])
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    print(f"{'K':>4} {'support M':>10} {'eK log':>8} {'support ok':>11} "
          f"{'tie M':>6} {'closed':>7} {'full ok':>8} {'alpha':>7}")
    for K in args.k_list:
        m_sup = theory.support_sample_complexity(args.n, K, args.delta)
        m_approx = theory.support_sample_complexity_approx(args.n, K, args.delta)
        tc = theory.tie_sample_complexity(K, args.delta)
        try:
            alpha = f"{theory.solve_alpha(args.delta, K):.4f}"
        except ValueError:
            alpha = "<floor"
        sup = harness.run_cell(harness.ExperimentSpec(
            N=args.n, trials=args.trials, master_seed=args.seed, criterion="support"), K, m_sup)
        full = harness.run_cell(harness.ExperimentSpec(
            N=args.n, trials=args.trials, master_seed=args.seed), K, tc.closed_form)
        print(f"{K:>4} {m_sup:>10} {m_approx:>8.0f} {sup.success_rate:>11.2f} "
              f"{tc.exact:>6} {tc.closed_form:>7} {full.success_rate:>8.2f} {alpha:>7}")


if __name__ == "__main__":
    main()
