#!/usr/bin/env python3
"""Spectral convergence-rate suites: geometric quadrature decay for an
analytic test function and algebraic interpolation rates for the
finite-smoothness family."""

import argparse
import sys

from fourierocp.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/convergence")
    args = parser.parse_args()
    return cli_main(["fim-convergence", "--out", args.out])


if __name__ == "__main__":
    sys.exit(main())
