"""Command line entry point: ``vsrp {decode,bounds,validate,experiment}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from vsrp import __version__, harness, theory, validation
from vsrp.decoder import CoordinateStatus, DecoderConfig, decode
from vsrp.sensing import add_noise, generate_design, measure, read_signal

log = logging.getLogger("vsrp")

BOUND_CHOICES = ["fp-worst", "fp-ternary", "fn", "support-m", "tie-m", "alpha", "h", "H"]


def _gamma_arg(text: str):
    if text.strip().upper() == "1/K":
        return "1/K"
    return float(text)


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _m_range(text: str) -> list[int]:
    """``start:stop:step`` with an inclusive stop."""
    parts = [int(p) for p in text.split(":")]
    if len(parts) == 2:
        parts.append(1)
    start, stop, step = parts
    if step <= 0:
        raise argparse.ArgumentTypeError("step must be positive")
    return list(range(start, stop + 1, step))


def cmd_decode(args) -> int:
    signal = read_signal(args.signal)
    if args.n is not None and args.n != signal.N:
        raise ValueError(f"--n {args.n} does not match signal file N={signal.N}")
    gamma = 1.0 / max(signal.K, 1) if args.gamma == "1/K" else args.gamma
    design = generate_design(signal.N, args.m, gamma, args.seed)
    y = measure(signal, design)
    if args.sigma > 0:
        y = add_noise(y, args.sigma, args.noise_seed)
    cfg = DecoderConfig(args.epsilon, args.tie_tol, args.max_iter)
    result = decode(design, y, cfg)

    names = {s.value: s.name.lower() for s in CoordinateStatus}
    doc = {
        "parameters": {
            "signal": str(args.signal), "N": signal.N, "K": signal.K, "M": args.m, "gamma": gamma,
            "seed": args.seed, "epsilon": args.epsilon, "tie_tol": args.tie_tol,
            "max_iterations": args.max_iter, "sigma": args.sigma, "noise_seed": args.noise_seed,
            "version": __version__,
        },
        "summary": {st.name.lower(): result.count(st) for st in CoordinateStatus},
        "iterations_used": result.iterations_used,
        "rounds": [
            {"zeros": r.zeros, "ties": r.ties, "undetermined": r.undetermined, "entries_touched": r.entries_touched}
            for r in result.rounds
        ],
        "recovered": [{"index": int(i), "value": float(result.estimate.values[i])} for i in result.recovered],
        "undetermined": [int(i) for i in result.undetermined],
        "status": [names[int(s)] for s in result.statuses],
        "exact_match": bool(np.array_equal(result.estimate.values, signal.values)),
    }
    text = json.dumps(doc, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    s = doc["summary"]
    log.info("zero=%d recovered=%d undetermined=%d in %d rounds",
             s["zero"], s["recovered"], s["undetermined"], result.iterations_used)
    return 0


def cmd_bounds(args) -> int:
    q = theory.BoundQuery(
        N=args.n, K=args.k, M=args.m,
        gamma=None if args.gamma == "1/K" else args.gamma,
        epsilon=args.epsilon, delta=args.delta, sigma=args.sigma, lam=args.lam,
    )
    rows = []
    for what in args.what:
        rows.extend(q.evaluate(what))
    width = max(len(name) for name, _ in rows)
    print(f"N={q.N} K={q.K} M={q.M} gamma={q.gamma:g} epsilon={q.epsilon:g} "
          f"delta={q.delta:g} sigma={q.sigma:g} lambda={q.lam:g}")
    for name, value in rows:
        shown = str(value) if isinstance(value, int) else f"{value:.10g}"
        print(f"  {name:<{width}}  {shown}")
    return 0


def cmd_validate(args) -> int:
    checks = validation.run_all(trials=args.trials, seed=args.seed)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return 0 if all(c.passed for c in checks) else 1


def cmd_experiment(args) -> int:
    m_values = args.m_range if args.m_range is not None else args.m_list
    spec = harness.ExperimentSpec(
        N=args.n, k_values=args.k_list, m_values=m_values, trials=args.trials,
        gamma_rule=args.gamma, epsilon=args.epsilon, sigma=args.sigma,
        master_seed=args.seed, criterion=args.criterion,
    )

    def progress(done, total):
        log.info("cell %d/%d", done, total)

    grid = harness.run_grid(spec, jobs=args.jobs, progress=progress)
    if args.out_csv:
        harness.emit_csv(grid, args.out_csv)
        log.info("wrote %s", args.out_csv)
    if args.out_contour:
        svg, data = harness.emit_contour(grid, args.out_contour, levels=args.levels)
        log.info("wrote %s and %s", svg, data)
    if not args.out_csv:
        harness.write_csv(grid, sys.stdout)
    log.info("grid finished in %.1f s", grid.wall_time)
    if grid.tie_violations:
        log.error("tie estimator disagreed with the planted signal %d times", grid.tie_violations)
        return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vsrp", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", help="measure a signal file and decode it")
    d.add_argument("--signal", required=True)
    d.add_argument("--n", type=int)
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--gamma", type=_gamma_arg, default="1/K")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--epsilon", type=float, default=0.0)
    d.add_argument("--tie-tol", type=float, default=1e-10)
    d.add_argument("--max-iter", type=int, default=4)
    d.add_argument("--sigma", type=float, default=0.0)
    d.add_argument("--noise-seed", type=int, default=0)
    d.add_argument("--output")
    d.set_defaults(func=cmd_decode)

    b = sub.add_parser("bounds", help="evaluate closed-form probabilities and planners")
    b.add_argument("--n", type=int, default=2000)
    b.add_argument("--k", type=int, default=10)
    b.add_argument("--m", type=int, default=200)
    b.add_argument("--gamma", type=_gamma_arg, default="1/K")
    b.add_argument("--epsilon", type=float, default=0.0)
    b.add_argument("--delta", type=float, default=0.05)
    b.add_argument("--sigma", type=float, default=0.0)
    b.add_argument("--lambda", dest="lam", type=float)
    b.add_argument("--what", nargs="+", choices=BOUND_CHOICES, default=["fp-worst", "support-m", "tie-m"])
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("validate", help="compare closed forms with enumeration and simulation")
    v.add_argument("--trials", type=int, default=20_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("experiment", help="run a (K, M) success-probability grid")
    e.add_argument("--n", type=int, default=2000)
    e.add_argument("--k-list", type=_int_list, default=[2, 5, 10, 20, 40])
    e.add_argument("--m-list", type=_int_list, default=list(range(50, 1501, 50)))
    e.add_argument("--m-range", type=_m_range)
    e.add_argument("--trials", type=int, default=100)
    e.add_argument("--gamma", type=_gamma_arg, default="1/K")
    e.add_argument("--epsilon", type=float, default=0.0)
    e.add_argument("--sigma", type=float, default=0.0)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--criterion", choices=["full", "support"], default="full")
    e.add_argument("--out-csv")
    e.add_argument("--out-contour")
    e.add_argument("--levels", type=_float_list, default=[0.5, 0.9, 0.99])
    e.add_argument("--jobs", type=int, help=f"worker processes (default: ${harness.JOBS_ENV} or 1)")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"vsrp {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
