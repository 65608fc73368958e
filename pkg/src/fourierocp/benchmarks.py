"""Built-in two-level periodic benchmark signals for the edge detector.

Four 2*pi-periodic bang-bang signals of increasing difficulty (late jump
near the period boundary, offset pulse, and two double-notch shapes with
very different level gaps) plus a constant control case. Each entry
carries its true jump locations and the reference localisation error
achieved by the detector at (N, M, r1, r2) = (100, 200, 1, 2), used as a
regression bar by the test suite and the ``edge-bench`` subcommand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fourierocp.edges import PiecewiseConstant

__all__ = ["BenchmarkSignal", "BENCHMARK_SIGNALS"]

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class BenchmarkSignal:
    name: str
    signal: PiecewiseConstant
    true_switches: np.ndarray
    reference_mae: float | None


def _bang(breaks, values) -> PiecewiseConstant:
    return PiecewiseConstant(
        breakpoints=np.asarray(breaks, dtype=float),
        values=np.asarray(values, dtype=float),
        period=_TWO_PI,
    )


BENCHMARK_SIGNALS: dict[str, BenchmarkSignal] = {
    # High plateau almost the whole period, dropping just before the wrap;
    # the wrap itself is the second jump.
    "late_edge": BenchmarkSignal(
        name="late_edge",
        signal=_bang([0.0, 6.01, _TWO_PI], [2.0, 0.0]),
        true_switches=np.array([6.01, _TWO_PI]),
        reference_mae=4.8080e-03,
    ),
    # Single interior pulse on a negative background.
    "single_pulse": BenchmarkSignal(
        name="single_pulse",
        signal=_bang([0.0, 0.45, 1.97, _TWO_PI], [-1.0, 3.0, -1.0]),
        true_switches=np.array([0.45, 1.97]),
        reference_mae=7.8200e-03,
    ),
    # Two narrow notches cut from a large positive plateau; wrap is a jump.
    "double_notch": BenchmarkSignal(
        name="double_notch",
        signal=_bang(
            [0.0, 0.28, 0.96, 2.98, _TWO_PI], [41.12, -2.5, 41.12, -2.5]
        ),
        true_switches=np.array([0.28, 0.96, 2.98, _TWO_PI]),
        reference_mae=4.1642e-03,
    ),
    # Wide-notch variant with a 200-unit gap; wrap is a jump.
    "wide_notch": BenchmarkSignal(
        name="wide_notch",
        signal=_bang(
            [0.0, 0.71, 1.08, 4.81, _TWO_PI], [200.0, 0.0, 200.0, 0.0]
        ),
        true_switches=np.array([0.71, 1.08, 4.81, _TWO_PI]),
        reference_mae=9.2959e-03,
    ),
    "constant": BenchmarkSignal(
        name="constant",
        signal=_bang([0.0, _TWO_PI], [5.0]),
        true_switches=np.empty(0),
        reference_mae=None,
    ),
}
