#!/usr/bin/env python3
"""Thrust-saturation conditioning study over a smoothing-factor sweep."""

import argparse
import sys

from fourierocp.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/sensitivity")
    parser.add_argument("--tf", type=float, default=9.96)
    parser.add_argument(
        "--lambda",
        dest="lambda_pair",
        type=float,
        nargs=2,
        default=[-0.01626, -0.01627],
    )
    parser.add_argument(
        "--sm", type=float, nargs="+", default=[1e5, 1e6, 1e7, 1e8, 1e9, 1e10]
    )
    args = parser.parse_args()
    return cli_main(
        ["sensitivity-table", "--out", args.out, "--tf", str(args.tf),
         "--lambda", str(args.lambda_pair[0]), str(args.lambda_pair[1]),
         "--sm", *[str(s) for s in args.sm]]
    )


if __name__ == "__main__":
    sys.exit(main())
