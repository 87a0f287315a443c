"""Plot K/H and its Poisson limit 1/h against the load lambda = gamma*K.

Each curve is the measurement multiplier per log(N/delta) for a given
threshold; the binomial and Poisson versions are drawn side by side.
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from vsrp import theory


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--eps", type=float, nargs="+", default=[0.01, 0.1, 0.2, 0.5, 1.0])
    p.add_argument("--lam-max", type=float, default=3.0)
    p.add_argument("--out", default="detect_rate_curves.svg")
    args = p.parse_args()

    lams = np.linspace(0.1, args.lam_max, 59)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    print(f"{'eps':>6} {'lambda':>7} {'1/H':>8} {'1/h':>8} {'rel gap':>8}")
    for eps in args.eps:
        inv_H = np.array([1 / theory.ternary_detect_rate(eps, args.k, lam / args.k) for lam in lams])
        inv_h = np.array([1 / theory.poisson_detect_rate(eps, lam) for lam in lams])
        line, = ax.plot(lams, inv_H, label=f"eps={eps:g}")
        ax.plot(lams, inv_h, "--", color=line.get_color())
        gap = np.abs(inv_H - inv_h) / inv_h
        k = int(np.argmax(gap))
        print(f"{eps:>6g} {lams[k]:>7.2f} {inv_H[k]:>8.4f} {inv_h[k]:>8.4f} {gap[k]:>8.4f}")
    ax.axhline(np.e, color="grey", lw=0.8)
    ax.set_xlabel("lambda")
    ax.set_ylabel("1/H (solid), 1/h (dashed)")
    ax.set_yscale("log")
    ax.set_title(f"K={args.k}")
    ax.legend()
    fig.savefig(args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
