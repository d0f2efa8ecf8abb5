"""PAAMP vs naive benchmark over horizons, plus an infeasibility probe.

Usage: python3 scripts/run_benchmark.py [--t-values 12,20] [--cell-limit 300]
                                        [--csv out.csv]
"""
import argparse
import pathlib
import sys

from paamp.analysis import benchmark
from paamp.scenario import builtin_crossing_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-values", default="12,20",
                    help="comma-separated horizons")
    ap.add_argument("--cell-limit", type=float, default=300.0,
                    help="wall-time cap per benchmark cell, seconds")
    ap.add_argument("--csv", type=pathlib.Path, default=None,
                    help="optional CSV output path")
    args = ap.parse_args()

    t_values = [int(t) for t in args.t_values.split(",")]
    table = benchmark(builtin_crossing_scenario(), t_values,
                      cell_limit=args.cell_limit)
    print(table.to_text())
    if args.csv is not None:
        args.csv.write_text(table.to_csv())
        print(f"wrote {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
