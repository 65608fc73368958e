#!/usr/bin/env python3
"""Run the mesh-refined endurance optimisation and print a summary.

Equivalent to ``fourierocp solve-uav`` but handy for iterating on solver
settings from a REPL or editor. Artifacts land in --out (default out/uav).
"""

import argparse
import sys
import time

from fourierocp.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/uav")
    parser.add_argument("--n-in", type=int, default=150)
    parser.add_argument("--n-inc", type=int, default=50)
    parser.add_argument("--max-meshes", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args()

    cli_args = [
        "solve-uav",
        "--out", args.out,
        "--n-in", str(args.n_in),
        "--n-inc", str(args.n_inc),
        "--max-meshes", str(args.max_meshes),
        "--seed", str(args.seed),
    ]
    if args.verbose:
        cli_args.append("--verbose")
    start = time.perf_counter()
    code = cli_main(cli_args)
    print(f"finished in {time.perf_counter() - start:.1f}s with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
