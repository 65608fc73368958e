"""Periodic optimal control via Fourier integral pseudospectral collocation.

Subpackages by task:

* :mod:`fourierocp.fourier` -- equispaced-grid trigonometric interpolation
  and the first-order Fourier integration matrix.
* :mod:`fourierocp.edges` -- jump detection and piecewise-constant
  reconstruction for two-level (bang-bang) periodic signals.
* :mod:`fourierocp.uav` -- 2D point-mass aircraft model and the thrust
  saturation sensitivity study.
* :mod:`fourierocp.transcription` -- free-final-time periodic optimal
  control transcribed to a dense NLP, plus the mesh-refinement driver.
* :mod:`fourierocp.nlp` -- the pluggable constrained solver layer.
* :mod:`fourierocp.cli` -- command-line front end.
"""

from fourierocp.fourier import (
    EquispacedGrid,
    FourierInterpolant,
    IntegrationMatrix,
    build_fim,
    build_grid,
    full_period_mean,
    interpolate,
    quad_to_nodes,
)

__all__ = [
    "EquispacedGrid",
    "FourierInterpolant",
    "IntegrationMatrix",
    "build_fim",
    "build_grid",
    "full_period_mean",
    "interpolate",
    "quad_to_nodes",
]

__version__ = "0.1.0"
