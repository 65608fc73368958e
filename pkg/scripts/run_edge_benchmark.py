#!/usr/bin/env python3
"""Sweep the jump detector over mesh/fine-grid sizes on the benchmarks.

Prints a localisation-error table for each (N, M) pair and writes the
standard benchmark artifacts for the base configuration.
"""

import argparse
import sys

import numpy as np

from fourierocp.benchmarks import BENCHMARK_SIGNALS
from fourierocp.cli import main as cli_main
from fourierocp.edges import EdgeConfig, detect_edges
from fourierocp.fourier import build_grid, interpolate


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/edges")
    parser.add_argument(
        "--pairs",
        nargs="+",
        default=["100:200", "200:400", "400:800"],
        help="N:M pairs to sweep",
    )
    args = parser.parse_args()

    for pair in args.pairs:
        n, m = (int(v) for v in pair.split(":"))
        grid = build_grid(2.0 * np.pi, n)
        config = EdgeConfig(fine_grid_size=m, epsilon_tilde=0.01, r1=1, r2=2)
        print(f"-- N={n}, M={m} (bound {2 * 2 * np.pi / m + 2 * np.pi / n:.4f})")
        for name, bench in BENCHMARK_SIGNALS.items():
            if name == "constant":
                continue
            itp = interpolate(grid, bench.signal.evaluate(grid.nodes))
            report = detect_edges(itp, config)
            mae = np.max(np.abs(report.ad_points - bench.true_switches))
            print(f"   {name:14s} max-abs error {mae:.4e}")
    return cli_main(["edge-bench", "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
