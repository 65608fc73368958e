"""Convergence-rate verification suites for the spectral machinery.

Two regimes are exercised:

* an analytic periodic function, where node-quadrature errors decay
  geometrically with the grid size until they hit machine precision;
* a family of functions with exactly ``s`` continuous periodic
  derivatives (the (s+1)-th is a square wave, of bounded variation),
  where the L2 interpolation error decays algebraically with fitted
  order -s - 1/2.

All reference values come from closed forms, never from the code paths
under test.
"""

from __future__ import annotations

import numpy as np

from fourierocp.fourier import build_fim, build_grid, interpolate, quad_to_nodes

__all__ = [
    "analytic_test",
    "analytic_antiderivative",
    "smooth_family",
    "geometric_quadrature_errors",
    "l2_interpolation_error",
    "smoothness_rate_fit",
    "fit_order",
]

_DENSE_POINTS = 1 << 15


def analytic_test(t):
    """1 / (2 + cos t): analytic and 2*pi-periodic."""
    return 1.0 / (2.0 + np.cos(t))


def analytic_antiderivative(t):
    """Closed-form int_0^t dx/(2+cos x), continuous across t = pi.

    The arctan2 form follows the angle of (sqrt(3)*cos(t/2), sin(t/2))
    and therefore needs no branch bookkeeping on [0, 2*pi].
    """
    t = np.asarray(t, dtype=float)
    return 2.0 / np.sqrt(3.0) * np.arctan2(np.sin(t / 2.0), np.sqrt(3.0) * np.cos(t / 2.0))


def _square(t):
    tm = np.mod(t, 2.0 * np.pi)
    return np.where(tm < np.pi, 1.0, -1.0)


def _triangle(t):
    tm = np.mod(t, 2.0 * np.pi)
    return np.pi / 2.0 - np.abs(tm - np.pi)


def _parabolic(t):
    tm = np.mod(t, 2.0 * np.pi)
    lo = tm**2 / 2.0 - np.pi * tm / 2.0
    hi = 1.5 * np.pi * (tm - np.pi) - (tm**2 - np.pi**2) / 2.0
    return np.where(tm <= np.pi, lo, hi)


def smooth_family(s: int):
    """2*pi-periodic function with exactly ``s`` continuous derivatives.

    s = 0 is a square wave, each further level integrates the previous one
    (mean removed), so the s-th derivative is always the square wave.
    """
    try:
        return {0: _square, 1: _triangle, 2: _parabolic}[s]
    except KeyError:
        raise ValueError(f"smoothness level must be 0, 1, or 2, got {s}") from None


def geometric_quadrature_errors(n_values=(8, 16, 32, 64, 128)):
    """Max node-quadrature error of the analytic test per grid size."""
    errs = []
    for n in n_values:
        grid = build_grid(2.0 * np.pi, n)
        approx = quad_to_nodes(build_fim(grid), analytic_test(grid.nodes))
        errs.append(float(np.max(np.abs(approx - analytic_antiderivative(grid.nodes)))))
    return np.array(errs)


def l2_interpolation_error(f, n: int, dense: int = _DENSE_POINTS) -> float:
    """L2 norm of f - I_N f via dense uniform sampling."""
    grid = build_grid(2.0 * np.pi, n)
    itp = interpolate(grid, f(grid.nodes))
    t = np.linspace(0.0, 2.0 * np.pi, dense, endpoint=False)
    err = itp.evaluate(t) - f(t)
    return float(np.sqrt(2.0 * np.pi / dense * np.sum(err**2)))


def fit_order(n_values, errors) -> float:
    """Least-squares slope of log(error) against log(N)."""
    return float(np.polyfit(np.log(np.asarray(n_values, float)), np.log(errors), 1)[0])


def smoothness_rate_fit(s: int, n_values=(32, 64, 128, 256, 512)) -> float:
    """Fitted L2 interpolation-error order for the s-smooth family member."""
    f = smooth_family(s)
    errs = [l2_interpolation_error(f, n) for n in n_values]
    return fit_order(n_values, errs)
