#!/usr/bin/env python3
"""Benchmark sweep over (K, M, N): seed solver vs bandit vs full-information
oracle on simulated scenarios.

Writes results.csv plus per-row replay artifacts under --out. Mirrors the
scalability experiment grid at a desk-friendly size; pass --paper-grid for
the full log-budget axis.
"""

import argparse
from pathlib import Path

from contract_learn.experiments import run_sweep, summarize_rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("bench_out"))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--paper-grid", action="store_true",
                        help="K in {25,50,100} instead of the quick {25}")
    args = parser.parse_args()

    sweep = {
        "k": [25, 50, 100] if args.paper_grid else [25],
        "m": [2, 4],
        "n": [2, 4, 7],
        "methods": ["seed", "bandit", "oracle"],
        "method_params": {"rounds": 300, "grid_size": 11},
    }
    rows = run_sweep(
        sweep, rng_seed=args.seed, repeats=args.repeats, out_dir=args.out
    )
    records = [
        {
            "method": row.method,
            "pi_T": row.pi_t,
            "pi_T_pct": row.pi_t_pct,
            "eta": row.eta,
        }
        for row in rows
    ]
    print(f"{len(rows)} rows -> {args.out / 'results.csv'}")
    print(summarize_rows(records))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
