"""2D point-mass aircraft model and the thrust-saturation sensitivity study.

States are downrange position x, altitude z, flight-path angle gamma and
speed V; controls are attack angle alpha and thrust T. Aerodynamic
closures are quadratic in speed with a linear lift slope:

    lift  = (rho S / 2) (C_L0 + C_La alpha) V^2
    drag  = (rho S / 2) [C_D0 + (C_L0 + C_La alpha)^2 / (pi e0 AR)] V^2
    n     = lift / (m g)

and the equations of motion read

    x' = V cos(gamma)            gamma' = (g / V) (n - cos(gamma))
    z' = V sin(gamma)            V'     = (T - drag) / m - g sin(gamma)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "UavParameters",
    "FlightState",
    "ControlInput",
    "default_parameters",
    "load_parameters",
    "lift",
    "drag",
    "load_factor",
    "state_derivative",
    "trim_alpha",
    "saturation_thrust",
    "sensitivity_table",
    "SensitivityRow",
    "ALPHA_MAX",
]

#: attack-angle bound keeping the small-angle aerodynamics valid
ALPHA_MAX = math.pi / 18.0


@dataclass(frozen=True)
class UavParameters:
    """Physical and aerodynamic constants of the vehicle."""

    sigma: float  # thrust-specific fuel consumption, kg/(s N)
    rho: float  # air density, kg/m^3
    S: float  # wing planform area, m^2
    C_D0: float  # parasitic drag coefficient
    C_L0: float  # lift coefficient at zero attack angle
    C_L_alpha: float  # lift slope per rad
    m: float  # mass, kg
    g: float  # gravitational acceleration, m/s^2
    e0: float  # Oswald efficiency factor
    AR: float  # wing aspect ratio
    T_max: float  # thrust upper bound, N
    x0: float  # initial downrange position, m
    z0: float  # initial altitude, m

    def __post_init__(self):
        for name in ("sigma", "rho", "S", "m", "g", "e0", "AR", "T_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"parameter {name} must be strictly positive")

    # Grouped constants used throughout the transcription.
    @property
    def c1(self) -> float:
        return self.sigma / (2.0 * math.pi)

    @property
    def c2(self) -> float:
        return 0.5 * self.rho * self.S

    @property
    def c3(self) -> float:
        return self.c2 / self.m

    @property
    def c4(self) -> float:
        return math.pi * self.e0 * self.AR


def default_parameters() -> UavParameters:
    """Stock 13.5 kg fixed-wing vehicle cruising near 4 km altitude."""
    return UavParameters(
        sigma=0.012,
        rho=1.2682,
        S=0.55,
        C_D0=0.03,
        C_L0=0.28,
        C_L_alpha=3.45,
        m=13.5,
        g=9.81,
        e0=0.9,
        AR=15.2445,
        T_max=140.0,
        x0=0.0,
        z0=4000.0,
    )


def load_parameters(path) -> UavParameters:
    """Parameters from a JSON or TOML file; missing keys keep defaults."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # python 3.10
            import tomli as tomllib
        data = tomllib.loads(path.read_text())
    else:
        data = json.loads(path.read_text())
    if not isinstance(data, dict):
        raise ValueError(f"parameter file {path} must contain a table of values")
    known = set(UavParameters.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown parameter keys in {path}: {sorted(unknown)}")
    return replace(default_parameters(), **{k: float(v) for k, v in data.items()})


@dataclass(frozen=True)
class FlightState:
    x: float  # downrange position, m
    z: float  # altitude, m
    gamma: float  # flight-path angle, rad
    V: float  # speed, m/s

    def __post_init__(self):
        if not self.V > 0.0:
            raise ValueError(f"speed must be positive, got {self.V}")
        if not abs(self.gamma) < math.pi / 2.0:
            raise ValueError(
                f"flight-path angle must satisfy |gamma| < pi/2, got {self.gamma}"
            )


@dataclass(frozen=True)
class ControlInput:
    alpha: float  # attack angle, rad
    T: float  # thrust, N

    def __post_init__(self):
        if abs(self.alpha) > ALPHA_MAX:
            raise ValueError(f"|alpha| must not exceed pi/18, got {self.alpha}")
        if self.T < 0.0:
            raise ValueError(f"thrust must be nonnegative, got {self.T}")


def _check_speed(V) -> None:
    if np.any(np.asarray(V) <= 0.0):
        raise ValueError("speed must be strictly positive")


def lift(params: UavParameters, V, alpha):
    """Aerodynamic lift in newtons."""
    _check_speed(V)
    return params.c2 * (params.C_L0 + params.C_L_alpha * np.asarray(alpha)) * np.square(V)


def drag(params: UavParameters, V, alpha):
    """Parasitic plus lift-induced drag in newtons."""
    _check_speed(V)
    a_prime = params.C_L0 + params.C_L_alpha * np.asarray(alpha)
    return params.c2 * (params.C_D0 + a_prime**2 / params.c4) * np.square(V)


def load_factor(params: UavParameters, V, alpha):
    """Lift over weight."""
    return lift(params, V, alpha) / (params.m * params.g)


def state_derivative(
    params: UavParameters, state: FlightState, u: ControlInput
) -> tuple[float, float, float, float]:
    """(dx/dt, dz/dt, dgamma/dt, dV/dt) at the given state and control."""
    if u.T > params.T_max:
        raise ValueError(f"thrust {u.T} exceeds T_max = {params.T_max}")
    n = load_factor(params, state.V, u.alpha)
    d = drag(params, state.V, u.alpha)
    return (
        state.V * math.cos(state.gamma),
        state.V * math.sin(state.gamma),
        params.g / state.V * (n - math.cos(state.gamma)),
        (u.T - d) / params.m - params.g * math.sin(state.gamma),
    )


def trim_alpha(params: UavParameters, V: float) -> float:
    """Attack angle giving unit load factor at speed ``V`` (unclipped)."""
    _check_speed(V)
    a_prime = params.m * params.g / (params.c2 * V**2)
    return (a_prime - params.C_L0) / params.C_L_alpha


def saturation_thrust(
    sigma: float, m: float, T_f: float, lambda_V: float, s_m: float
) -> float:
    """Smoothed thrust law mapping a speed-costate value into [0, 140].

    The arctangent wrapper pins the output halfway up the range when its
    argument vanishes and approaches a hard 0/140 switch as the smoothing
    factor grows, which is exactly what makes it numerically treacherous:
    near the switching condition the output is violently sensitive to the
    costate.
    """
    if not s_m > 0.0:
        raise ValueError(f"smoothing factor must be positive, got {s_m}")
    return 70.0 + 140.0 / math.pi * math.atan(
        -s_m * (sigma + lambda_V * T_f / m) + math.pi / 2.0
    )


@dataclass(frozen=True)
class SensitivityRow:
    s_m: float
    phi_base: float
    phi_perturbed: float
    relative_change: float  # |dPhi| over the mean magnitude of the two outputs
    amplification: float  # relative output change over relative input change


def sensitivity_table(
    sigma: float,
    m: float,
    T_f: float,
    lambda_pair: tuple[float, float],
    s_m_list,
) -> list[SensitivityRow]:
    """Conditioning of the saturation law against a costate perturbation.

    For each smoothing factor the table reports the thrust at the base and
    perturbed costate values, the relative output change (normalised by
    the mean output magnitude) and its ratio to the relative input change.
    """
    s_m_list = list(s_m_list)
    if not s_m_list:
        raise ValueError("need at least one smoothing-factor value")
    lam0, lam1 = lambda_pair
    rel_input = abs(lam1 - lam0) / abs(lam0)
    rows = []
    for s_m in s_m_list:
        phi0 = saturation_thrust(sigma, m, T_f, lam0, s_m)
        phi1 = saturation_thrust(sigma, m, T_f, lam1, s_m)
        mean_mag = 0.5 * (abs(phi0) + abs(phi1))
        rel_output = abs(phi1 - phi0) / mean_mag if mean_mag > 0.0 else 0.0
        rows.append(
            SensitivityRow(
                s_m=float(s_m),
                phi_base=phi0,
                phi_perturbed=phi1,
                relative_change=rel_output,
                amplification=rel_output / rel_input if rel_input > 0.0 else math.inf,
            )
        )
    return rows
