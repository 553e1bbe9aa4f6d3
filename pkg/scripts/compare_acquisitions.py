"""Compare acquisition modes on the synthetic benchmark functions.

Runs the blended acquisition, its schedule-free variant, and the EI / PI /
UCB baselines with paired seeds, then prints a median-gap table and
optionally dumps the raw curves for plotting.

Usage: python scripts/compare_acquisitions.py [--fn branin] [--repeats 20]
       [--budget 100] [--n-init 10] [--seed 0] [--out curves.json]
"""

from __future__ import annotations

import argparse
import json

from dlrec.benchmark import benchmark
from dlrec.bo import AcquisitionMode


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fn", default="branin", choices=["sphere", "branin", "rastrigin"])
    parser.add_argument("--repeats", type=int, default=20)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--n-init", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="JSON file for the raw summaries")
    args = parser.parse_args()

    rows = []
    summaries = {}
    variants = [
        ("gammaei", AcquisitionMode.GAMMA_EI, False),
        ("gammaei (no omega)", AcquisitionMode.GAMMA_EI, True),
        ("ei", AcquisitionMode.EI, False),
        ("pi", AcquisitionMode.PI, False),
        ("ucb", AcquisitionMode.UCB, False),
    ]
    for label, mode, no_omega in variants:
        summary = benchmark(
            args.fn, mode, repeats=args.repeats, t=args.budget, n_init=args.n_init,
            seed=args.seed, no_omega=no_omega, compare_random=(label == "gammaei"),
        )
        summaries[label] = summary.to_dict()
        rows.append((label, summary.median_gap, summary.iqr_gap))
        if summary.random_median_gap is not None:
            rows.append(("random (paired)", summary.random_median_gap, float("nan")))

    width = max(len(label) for label, _, _ in rows)
    print(f"\n{args.fn}: final gap to optimum after {args.budget} iterations "
          f"({args.repeats} seeds)")
    print(f"{'variant'.ljust(width)}  median     IQR")
    for label, median, iqr in rows:
        print(f"{label.ljust(width)}  {median:<9.4g}  {iqr:.4g}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summaries, fh, indent=2)
        print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
