"""Free-final-time periodic flight problem transcribed to a dense NLP.

The horizon [0, T_f] is mapped onto [0, 2*pi] by t = mu * tau with
mu = T_f / (2*pi); the dynamics are integrated once so every state obeys
an integral equation whose right-hand side is a running integral of a
2*pi-periodic integrand, evaluated at the collocation nodes with the
cached natural integration matrix. The decision vector stacks the six
nodal blocks and the free period,

    X = [x; z; gamma; V; alpha; T; T_f],   length 6N + 1,

and the objective is the plain sum of the thrust samples: the fuel rate
(sigma / T_f) * int T dt collapses to sigma * mean(T) after the time
scaling, so minimising sum(T) is equivalent and keeps the gradient
trivially sparse.

Periodicity of z, gamma and V is pinned by three scalar closure
equalities forcing the full-period integral of each integrand to vanish;
collocating the integral equations alone would leave the period endpoint
unconstrained.

Mesh refinement re-solves on successively larger grids, carrying each
solution forward by trigonometric re-interpolation, until the period
estimate stabilises; the converged thrust history is then handed to the
edge detector and rebuilt as a two-level signal with known extreme
values {0, T_max}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as _dc_replace

import numpy as np

from fourierocp.edges import (
    EdgeConfig,
    EdgeReport,
    EdgeStructureError,
    PiecewiseConstant,
    detect_edges,
    reconstruct,
)
from fourierocp.fourier import (
    EquispacedGrid,
    build_grid,
    full_period_mean,
    interpolate,
    natural_fim_entries,
)
from fourierocp.nlp import NlpProblem, NlpResult, NlpSolverHandle, minimize
from fourierocp.uav import ALPHA_MAX, UavParameters, drag, trim_alpha

__all__ = [
    "DecisionVector",
    "TranscribedNlp",
    "RefineConfig",
    "MeshHistoryRow",
    "SolveReport",
    "TrajectoryTable",
    "normalize",
    "initial_guess",
    "solve_mesh",
    "refine",
    "sample_physical",
]

# Bound tightenings that keep the feasible set closed for the solver while
# staying far from any flight regime of interest. The period cap rules out
# degenerate many-cycle orbits that ride the artificial gamma bound.
V_MIN = 1.0  # m/s
GAMMA_MAX = 1.2  # rad, keeps cos(gamma) > 0 with margin
T_F_MIN = 1.0  # s
T_F_MAX = 30.0  # s


@dataclass(frozen=True)
class DecisionVector:
    """Packed solution vector [x; z; gamma; V; alpha; T; T_f] on an N-mesh."""

    n: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != (6 * self.n + 1,):
            raise ValueError(
                f"decision vector must have length {6 * self.n + 1}, "
                f"got {data.shape}"
            )
        object.__setattr__(self, "data", data)

    def _block(self, i: int) -> np.ndarray:
        return self.data[i * self.n : (i + 1) * self.n]

    @property
    def x(self) -> np.ndarray:
        return self._block(0)

    @property
    def z(self) -> np.ndarray:
        return self._block(1)

    @property
    def gamma(self) -> np.ndarray:
        return self._block(2)

    @property
    def V(self) -> np.ndarray:
        return self._block(3)

    @property
    def alpha(self) -> np.ndarray:
        return self._block(4)

    @property
    def T(self) -> np.ndarray:
        return self._block(5)

    @property
    def T_f(self) -> float:
        return float(self.data[6 * self.n])

    @property
    def mu(self) -> float:
        return self.T_f / (2.0 * math.pi)

    @classmethod
    def pack(cls, x, z, gamma, V, alpha, T, T_f) -> "DecisionVector":
        blocks = [np.asarray(b, dtype=float) for b in (x, z, gamma, V, alpha, T)]
        n = blocks[0].size
        return cls(n, np.concatenate(blocks + [np.array([float(T_f)])]))

    def unpack(self):
        return (self.x, self.z, self.gamma, self.V, self.alpha, self.T, self.T_f)


def _integrands(params: UavParameters, gamma, V, alpha, T):
    """The four collocated integrands and the drag they share."""
    a_prime = params.C_L0 + params.C_L_alpha * alpha
    d = params.c2 * (params.C_D0 + a_prime**2 / params.c4) * V**2
    p = V * np.cos(gamma)
    q = V * np.sin(gamma)
    h = params.c3 * a_prime * V - params.g * np.cos(gamma) / V
    r = (T - d) / params.m - params.g * np.sin(gamma)
    return p, q, h, r, a_prime


@dataclass(frozen=True)
class TranscribedNlp:
    """Evaluators, bounds and default start point for one mesh size."""

    n: int
    params: UavParameters
    grid: EquispacedGrid
    lower: np.ndarray
    upper: np.ndarray
    start: DecisionVector

    # --- objective -------------------------------------------------------
    def objective(self, data: np.ndarray) -> float:
        n = self.n
        return float(np.sum(data[5 * n : 6 * n]))

    def objective_gradient(self, data: np.ndarray) -> np.ndarray:
        g = np.zeros(6 * self.n + 1)
        g[5 * self.n : 6 * self.n] = 1.0
        return g

    def fuel_rate(self, data: np.ndarray) -> float:
        """Physical objective sigma/T_f * int T dt == sigma * mean(T)."""
        return self.params.sigma / self.n * self.objective(data)

    # --- constraints -----------------------------------------------------
    def constraints(self, data: np.ndarray) -> np.ndarray:
        n = self.n
        v = DecisionVector(n, data)
        x, z, gamma, V, alpha, T, T_f = v.unpack()
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(n)
        p, q, h, r, _ = _integrands(self.params, gamma, V, alpha, T)
        c_x = x - mu * (theta @ p) - self.params.x0
        c_z = z - mu * (theta @ q) - self.params.z0
        c_g = gamma - mu * (theta @ h) - gamma[0]
        c_v = V - mu * (theta @ r) - V[0]
        closures = np.array(
            [
                full_period_mean(self.grid, q),
                full_period_mean(self.grid, h),
                full_period_mean(self.grid, r),
            ]
        )
        return np.concatenate((c_x, c_z, c_g, c_v, closures))

    def _partials(self, gamma, V, alpha):
        params = self.params
        a_prime = params.C_L0 + params.C_L_alpha * alpha
        sin_g, cos_g = np.sin(gamma), np.cos(gamma)
        return {
            "p_g": -V * sin_g,
            "p_v": cos_g,
            "q_g": V * cos_g,
            "q_v": sin_g,
            "h_g": params.g * sin_g / V,
            "h_v": params.c3 * a_prime + params.g * cos_g / V**2,
            "h_a": params.c3 * params.C_L_alpha * V,
            "r_g": -params.g * cos_g,
            "r_v": -2.0 * params.c3 * (params.C_D0 + a_prime**2 / params.c4) * V,
            "r_a": -2.0 * params.c3 * params.C_L_alpha / params.c4 * a_prime * V**2,
            "r_t": 1.0 / params.m,
        }

    def jacobian(self, data: np.ndarray) -> np.ndarray:
        """Dense (4N+3) x (6N+1) constraint Jacobian."""
        n = self.n
        v = DecisionVector(n, data)
        _, _, gamma, V, alpha, T, T_f = v.unpack()
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(n)
        p, q, h, r, _ = _integrands(self.params, gamma, V, alpha, T)
        d = self._partials(gamma, V, alpha)
        eye = np.eye(n)
        zero = np.zeros((n, n))
        w = 2.0 * math.pi / n

        def col(vec):
            return (theta @ vec)[:, None] / (2.0 * math.pi)

        first = np.zeros((n, n))
        first[:, 0] = 1.0

        jx = np.hstack(
            (eye, zero, -mu * theta * d["p_g"], -mu * theta * d["p_v"], zero, zero, -col(p))
        )
        jz = np.hstack(
            (zero, eye, -mu * theta * d["q_g"], -mu * theta * d["q_v"], zero, zero, -col(q))
        )
        jg = np.hstack(
            (
                zero,
                zero,
                eye - mu * theta * d["h_g"] - first,
                -mu * theta * d["h_v"],
                -mu * theta * d["h_a"],
                zero,
                -col(h),
            )
        )
        jv = np.hstack(
            (
                zero,
                zero,
                -mu * theta * d["r_g"],
                eye - mu * theta * d["r_v"] - first,
                -mu * theta * d["r_a"],
                -mu * theta * d["r_t"],
                -col(r),
            )
        )
        zn = np.zeros(n)
        jc = np.vstack(
            (
                np.concatenate((zn, zn, w * d["q_g"], w * d["q_v"], zn, zn, [0.0])),
                np.concatenate((zn, zn, w * d["h_g"], w * d["h_v"], w * d["h_a"], zn, [0.0])),
                np.concatenate(
                    (zn, zn, w * d["r_g"], w * d["r_v"], w * d["r_a"], np.full(n, w * d["r_t"]), [0.0])
                ),
            )
        )
        return np.vstack((jx, jz, jg, jv, jc))

    def jtprod(self, data: np.ndarray, wvec: np.ndarray) -> np.ndarray:
        """J(X)^T w using four transposed matrix-vector products."""
        n = self.n
        v = DecisionVector(n, data)
        _, _, gamma, V, alpha, T, T_f = v.unpack()
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(n)
        p, q, h, r, _ = _integrands(self.params, gamma, V, alpha, T)
        d = self._partials(gamma, V, alpha)
        wx, wz, wg, wv = (wvec[i * n : (i + 1) * n] for i in range(4))
        s_z, s_g, s_v = wvec[4 * n : 4 * n + 3]
        w = 2.0 * math.pi / n

        ux = theta.T @ wx
        uz = theta.T @ wz
        ug = theta.T @ wg
        uv = theta.T @ wv

        g_x = wx.copy()
        g_z = wz.copy()
        g_gamma = (
            wg
            - mu * (d["p_g"] * ux + d["q_g"] * uz + d["h_g"] * ug + d["r_g"] * uv)
            + w * (s_z * d["q_g"] + s_g * d["h_g"] + s_v * d["r_g"])
        )
        g_gamma[0] -= wg.sum()
        g_V = (
            wv
            - mu * (d["p_v"] * ux + d["q_v"] * uz + d["h_v"] * ug + d["r_v"] * uv)
            + w * (s_z * d["q_v"] + s_g * d["h_v"] + s_v * d["r_v"])
        )
        g_V[0] -= wv.sum()
        g_alpha = -mu * (d["h_a"] * ug + d["r_a"] * uv) + w * (s_g * d["h_a"] + s_v * d["r_a"])
        g_T = -mu * d["r_t"] * uv + w * s_v * d["r_t"]
        g_tf = -((theta @ p) @ wx + (theta @ q) @ wz + (theta @ h) @ wg + (theta @ r) @ wv) / (
            2.0 * math.pi
        )
        return np.concatenate((g_x, g_z, g_gamma, g_V, g_alpha, g_T, [g_tf]))

    def as_problem(self) -> NlpProblem:
        return NlpProblem(
            n_vars=6 * self.n + 1,
            objective=self.objective,
            gradient=self.objective_gradient,
            constraints=self.constraints,
            jacobian=self.jacobian,
            jtprod=self.jtprod,
            lower=self.lower,
            upper=self.upper,
        )

    # --- reduced view ------------------------------------------------------
    # x and z each appear only in their own collocation rows (identity
    # blocks) and nowhere else: given any (gamma, V, alpha, T, T_f) they
    # are recovered exactly as x0 + mu*Theta p and z0 + mu*Theta q. The
    # solver therefore works on Y = [gamma; V; alpha; T; T_f] against the
    # remaining 2N + 3 rows, which halves the variable count and drops
    # the worst-scaled unknowns.

    def _reduced_split(self, yvec: np.ndarray):
        n = self.n
        return (
            yvec[0:n],
            yvec[n : 2 * n],
            yvec[2 * n : 3 * n],
            yvec[3 * n : 4 * n],
            float(yvec[4 * n]),
        )

    def reduced_objective(self, yvec: np.ndarray) -> float:
        return float(np.sum(yvec[3 * self.n : 4 * self.n]))

    def reduced_gradient(self, yvec: np.ndarray) -> np.ndarray:
        g = np.zeros(4 * self.n + 1)
        g[3 * self.n : 4 * self.n] = 1.0
        return g

    def reduced_constraints(self, yvec: np.ndarray) -> np.ndarray:
        n = self.n
        gamma, V, alpha, T, T_f = self._reduced_split(yvec)
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(n)
        _, q, h, r, _ = _integrands(self.params, gamma, V, alpha, T)
        c_g = gamma - mu * (theta @ h) - gamma[0]
        c_v = V - mu * (theta @ r) - V[0]
        closures = [
            full_period_mean(self.grid, q),
            full_period_mean(self.grid, h),
            full_period_mean(self.grid, r),
        ]
        return np.concatenate((c_g, c_v, closures))

    def reduced_jacobian(self, yvec: np.ndarray) -> np.ndarray:
        """Dense (2N+3) x (4N+1) Jacobian of the reduced residuals."""
        n = self.n
        gamma, V, alpha, T, T_f = self._reduced_split(yvec)
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(n)
        _, _, h, r, _ = _integrands(self.params, gamma, V, alpha, T)
        d = self._partials(gamma, V, alpha)
        eye = np.eye(n)
        zero = np.zeros((n, n))
        w = 2.0 * math.pi / n
        first = np.zeros((n, n))
        first[:, 0] = 1.0
        jg = np.hstack(
            (
                eye - mu * theta * d["h_g"] - first,
                -mu * theta * d["h_v"],
                -mu * theta * d["h_a"],
                zero,
                -(theta @ h)[:, None] / (2.0 * math.pi),
            )
        )
        jv = np.hstack(
            (
                -mu * theta * d["r_g"],
                eye - mu * theta * d["r_v"] - first,
                -mu * theta * d["r_a"],
                -mu * theta * d["r_t"],
                -(theta @ r)[:, None] / (2.0 * math.pi),
            )
        )
        zn = np.zeros(n)
        jc = np.vstack(
            (
                np.concatenate((w * d["q_g"], w * d["q_v"], zn, zn, [0.0])),
                np.concatenate((w * d["h_g"], w * d["h_v"], w * d["h_a"], zn, [0.0])),
                np.concatenate((w * d["r_g"], w * d["r_v"], w * d["r_a"], np.full(n, w * d["r_t"]), [0.0])),
            )
        )
        return np.vstack((jg, jv, jc))

    def reduced_hessian(self, yvec: np.ndarray, wvec: np.ndarray) -> np.ndarray:
        """Curvature of w . c(Y) (the objective is linear, so this is the
        full Lagrangian Hessian). Each integrand couples one node's
        (gamma, V, alpha) triple, so the Hessian is made of per-node 3x3
        blocks plus the T_f coupling row and column.
        """
        n = self.n
        params = self.params
        gamma, V, alpha, T, T_f = self._reduced_split(yvec)
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(n)
        d = self._partials(gamma, V, alpha)
        wg, wv = wvec[0:n], wvec[n : 2 * n]
        s_z, s_g, s_v = wvec[2 * n : 2 * n + 3]
        w = 2.0 * math.pi / n
        ug = theta.T @ wg
        uv = theta.T @ wv
        # Per-node multipliers of each integrand's second derivatives.
        w_q = w * s_z
        w_h = -mu * ug + w * s_g
        w_r = -mu * uv + w * s_v

        a_prime = params.C_L0 + params.C_L_alpha * alpha
        sin_g, cos_g = np.sin(gamma), np.cos(gamma)
        g = params.g
        h_gg = g * cos_g / V
        h_gv = -g * sin_g / V**2
        h_vv = -2.0 * g * cos_g / V**3
        h_va = np.full(n, params.c3 * params.C_L_alpha)
        r_gg = g * sin_g
        r_vv = -2.0 * params.c3 * (params.C_D0 + a_prime**2 / params.c4) * np.ones(n)
        r_va = -4.0 * params.c3 * params.C_L_alpha / params.c4 * a_prime * V
        r_aa = -2.0 * params.c3 * params.C_L_alpha**2 / params.c4 * V**2
        q_gg = -V * sin_g
        q_gv = cos_g

        size = 4 * n + 1
        hess = np.zeros((size, size))
        idx_g = np.arange(n)
        idx_v = idx_g + n
        idx_a = idx_g + 2 * n
        hess[idx_g, idx_g] = w_h * h_gg + w_r * r_gg + w_q * q_gg
        hess[idx_g, idx_v] = hess[idx_v, idx_g] = w_h * h_gv + w_q * q_gv
        hess[idx_v, idx_v] = w_h * h_vv + w_r * r_vv
        hess[idx_v, idx_a] = hess[idx_a, idx_v] = w_h * h_va + w_r * r_va
        hess[idx_a, idx_a] = w_r * r_aa
        # T_f couplings: mu depends linearly on T_f, so mixed partials pick
        # up the first derivatives of the collocated integrands.
        tf_col = np.zeros(size)
        tf_col[idx_g] = -(ug * d["h_g"] + uv * d["r_g"]) / (2.0 * math.pi)
        tf_col[idx_v] = -(ug * d["h_v"] + uv * d["r_v"]) / (2.0 * math.pi)
        tf_col[idx_a] = -(ug * d["h_a"] + uv * d["r_a"]) / (2.0 * math.pi)
        tf_col[idx_a + n] = -uv * d["r_t"] / (2.0 * math.pi)
        hess[:, 4 * n] = tf_col
        hess[4 * n, :] = tf_col
        return hess

    def reduced_jtprod(self, yvec: np.ndarray, wvec: np.ndarray) -> np.ndarray:
        n = self.n
        gamma, V, alpha, T, T_f = self._reduced_split(yvec)
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(n)
        _, _, h, r, _ = _integrands(self.params, gamma, V, alpha, T)
        d = self._partials(gamma, V, alpha)
        wg, wv = wvec[0:n], wvec[n : 2 * n]
        s_z, s_g, s_v = wvec[2 * n : 2 * n + 3]
        w = 2.0 * math.pi / n
        ug = theta.T @ wg
        uv = theta.T @ wv
        g_gamma = (
            wg
            - mu * (d["h_g"] * ug + d["r_g"] * uv)
            + w * (s_z * d["q_g"] + s_g * d["h_g"] + s_v * d["r_g"])
        )
        g_gamma[0] -= wg.sum()
        g_V = (
            wv
            - mu * (d["h_v"] * ug + d["r_v"] * uv)
            + w * (s_z * d["q_v"] + s_g * d["h_v"] + s_v * d["r_v"])
        )
        g_V[0] -= wv.sum()
        g_alpha = -mu * (d["h_a"] * ug + d["r_a"] * uv) + w * (s_g * d["h_a"] + s_v * d["r_a"])
        g_T = -mu * d["r_t"] * uv + w * s_v * d["r_t"]
        g_tf = -((theta @ h) @ wg + (theta @ r) @ wv) / (2.0 * math.pi)
        return np.concatenate((g_gamma, g_V, g_alpha, g_T, [g_tf]))

    def as_reduced_problem(self) -> NlpProblem:
        n = self.n
        pick = np.concatenate(
            (np.arange(2 * n, 6 * n), [6 * n])
        )  # gamma, V, alpha, T, T_f slots of the full vector
        var_scale = np.concatenate(
            (np.ones(n), np.full(n, 10.0), np.full(n, 0.1), np.full(n, 100.0), [10.0])
        )
        con_scale = np.concatenate((np.ones(n), np.full(n, 10.0), [10.0, 1.0, 10.0]))
        return NlpProblem(
            n_vars=4 * n + 1,
            objective=self.reduced_objective,
            gradient=self.reduced_gradient,
            constraints=self.reduced_constraints,
            jacobian=self.reduced_jacobian,
            jtprod=self.reduced_jtprod,
            lower=self.lower[pick],
            upper=self.upper[pick],
            var_scale=var_scale,
            con_scale=con_scale,
            obj_scale=float(n),
            hessian=self.reduced_hessian,
        )

    def complete(self, yvec: np.ndarray) -> DecisionVector:
        """Lift a reduced solution back to the full decision vector."""
        gamma, V, alpha, T, T_f = self._reduced_split(yvec)
        mu = T_f / (2.0 * math.pi)
        theta = natural_fim_entries(self.n)
        p, q, _, _, _ = _integrands(self.params, gamma, V, alpha, T)
        x = self.params.x0 + mu * (theta @ p)
        z = self.params.z0 + mu * (theta @ q)
        return DecisionVector.pack(x, z, gamma, V, alpha, T, T_f)


def normalize(params: UavParameters, n: int, t_f_guess: float = 10.0) -> TranscribedNlp:
    """Transcribe the flight problem on an N-point normalized mesh."""
    if n < 8 or n % 2:
        raise ValueError(f"mesh size must be an even integer >= 8, got {n}")
    grid = build_grid(2.0 * math.pi, n)
    inf = np.inf
    lower = np.concatenate(
        (
            np.full(n, -inf),  # x
            np.full(n, -inf),  # z
            np.full(n, -GAMMA_MAX),
            np.full(n, V_MIN),
            np.full(n, -ALPHA_MAX),
            np.zeros(n),  # thrust
            [T_F_MIN],
        )
    )
    upper = np.concatenate(
        (
            np.full(n, inf),
            np.full(n, inf),
            np.full(n, GAMMA_MAX),
            np.full(n, inf),
            np.full(n, ALPHA_MAX),
            np.full(n, params.T_max),
            [T_F_MAX],
        )
    )
    start = initial_guess(params, n, t_f_guess)
    return TranscribedNlp(
        n=n, params=params, grid=grid, lower=lower, upper=upper, start=start
    )


def initial_guess(params: UavParameters, n: int, t_f_guess: float = 10.0) -> DecisionVector:
    """Level-trim start: straight flight at 27 m/s with thrust matching drag."""
    if not t_f_guess > 0.0:
        raise ValueError(f"period guess must be positive, got {t_f_guess}")
    grid = build_grid(2.0 * math.pi, n)
    V0 = 27.0
    alpha = float(np.clip(trim_alpha(params, V0), -ALPHA_MAX, ALPHA_MAX))
    thrust = float(np.clip(drag(params, V0, alpha), 0.0, params.T_max))
    mu = t_f_guess / (2.0 * math.pi)
    return DecisionVector.pack(
        x=params.x0 + V0 * mu * grid.nodes,
        z=np.full(n, params.z0),
        gamma=np.zeros(n),
        V=np.full(n, V0),
        alpha=np.full(n, alpha),
        T=np.full(n, thrust),
        T_f=t_f_guess,
    )


def solve_mesh(
    nlp: TranscribedNlp,
    warm_start: DecisionVector | None = None,
    solver: NlpSolverHandle | None = None,
) -> tuple[DecisionVector, NlpResult]:
    """Solve one mesh; the returned status carries KKT diagnostics.

    Internally optimises the reduced (gamma, V, alpha, T, T_f) problem and
    lifts x, z back from their integral equations, so the reported
    feasibility is that of the full 4N + 3 residual vector.
    """
    from dataclasses import replace as _replace

    start = warm_start or nlp.start
    n = nlp.n
    y0 = np.concatenate((start.gamma, start.V, start.alpha, start.T, [start.T_f]))
    result = minimize(nlp.as_reduced_problem(), y0, solver)
    solution = nlp.complete(result.x)
    full_feas = float(np.max(np.abs(nlp.constraints(solution.data))))
    diag = _replace(result.diagnostics, equality_residual_norm=full_feas)
    return solution, _replace(result, x=solution.data, diagnostics=diag)


def _reinterpolate(solution: DecisionVector, n_new: int, params: UavParameters) -> DecisionVector:
    """Warm start on a finer mesh by trigonometric re-interpolation.

    Periodic blocks are evaluated at the new nodes and clipped back into
    their bound boxes (the interpolant of a near-bang-bang block
    overshoots); x and z are rebuilt from their integral equations so the
    new start satisfies those rows exactly.
    """
    n_old = solution.n
    grid_old = build_grid(2.0 * math.pi, n_old)
    grid_new = build_grid(2.0 * math.pi, n_new)
    tau = grid_new.nodes

    def lift_block(values, lo, hi):
        vals = interpolate(grid_old, values).evaluate(tau)
        return np.clip(vals, lo, hi)

    gamma = lift_block(solution.gamma, -GAMMA_MAX, GAMMA_MAX)
    V = lift_block(solution.V, V_MIN, np.inf)
    alpha = lift_block(solution.alpha, -ALPHA_MAX, ALPHA_MAX)
    T = lift_block(solution.T, 0.0, params.T_max)
    mu = solution.mu
    theta = natural_fim_entries(n_new)
    p, q, _, _, _ = _integrands(params, gamma, V, alpha, T)
    x = params.x0 + mu * (theta @ p)
    z = params.z0 + mu * (theta @ q)
    return DecisionVector.pack(x, z, gamma, V, alpha, T, solution.T_f)


def _perturbed_guess(
    params: UavParameters, n: int, t_f_guess: float, rng: np.random.Generator
) -> DecisionVector:
    """Climb-glide seed used when a solve collapses onto steady flight.

    Steady trim satisfies the first-order conditions, so a descent method
    started there can terminate on it even though pulsed orbits do
    better; a thrust burst plus a consistent speed/angle oscillation
    pushes the iterate into a genuinely periodic basin.
    """
    base = initial_guess(params, n, t_f_guess)
    grid = build_grid(2.0 * math.pi, n)
    tau = grid.nodes
    center = rng.uniform(0.0, 2.0 * math.pi)
    width = rng.uniform(0.3, 0.9)
    dist = np.minimum(np.abs(tau - center), 2.0 * math.pi - np.abs(tau - center))
    thrust = np.where(dist <= width / 2.0, params.T_max, 0.0)
    amp_g = rng.uniform(0.1, 0.3)
    amp_v = rng.uniform(2.0, 6.0)
    gamma = amp_g * np.sin(tau - center)
    V = np.clip(27.0 - amp_v * (1.0 - np.cos(tau - center)), V_MIN + 1.0, None)
    alpha = np.clip(trim_alpha(params, 27.0), -ALPHA_MAX, ALPHA_MAX) * np.ones(n)
    mu = t_f_guess / (2.0 * math.pi)
    theta = natural_fim_entries(n)
    p, q, _, _, _ = _integrands(params, gamma, V, alpha, thrust)
    x = params.x0 + mu * (theta @ p)
    z = params.z0 + mu * (theta @ q)
    return DecisionVector.pack(x, z, gamma, V, alpha, thrust, t_f_guess)


@dataclass(frozen=True)
class RefineConfig:
    """Mesh-refinement driver knobs (defaults match the stock study)."""

    n_in: int = 150
    n_inc: int = 50
    epsilon: float = 0.01
    max_meshes: int = 8
    fine_grid_size: int = 1000
    r1: int = 1
    r2: int = 2
    t_f_guess: float = 10.0
    n_retries: int = 3
    seed: int = 0
    degenerate_thrust_range: float = 1.0  # N

    def __post_init__(self):
        if self.n_in < 8 or self.n_in % 2:
            raise ValueError("initial mesh size must be an even integer >= 8")
        if self.n_inc < 2 or self.n_inc % 2:
            raise ValueError("mesh increment must be an even integer >= 2")
        if not self.epsilon > 0.0:
            raise ValueError("period tolerance must be positive")
        if self.max_meshes < 1:
            raise ValueError("need at least one mesh")


@dataclass(frozen=True)
class MeshHistoryRow:
    n: int
    T_f: float
    objective_scaled: float  # sum of thrust samples
    fuel_rate: float  # kg/s
    status: str
    feasibility: float


@dataclass(frozen=True)
class SolveReport:
    history: list[MeshHistoryRow]
    solution: DecisionVector
    params: UavParameters
    converged: bool
    edge_report: EdgeReport | None
    corrected_thrust: PiecewiseConstant | None
    switch_times: np.ndarray
    edge_failure: str | None = None

    @property
    def T_f(self) -> float:
        return self.solution.T_f

    @property
    def fuel_rate(self) -> float:
        return self.params.sigma / self.solution.n * float(np.sum(self.solution.T))


def refine(
    params: UavParameters,
    config: RefineConfig,
    solver: NlpSolverHandle | None = None,
) -> SolveReport:
    """Solve on N_in, N_in + N_inc, ... until the period estimate settles.

    Stops when the period change between consecutive meshes drops below
    ``config.epsilon`` or the mesh budget is exhausted; a steady-flight
    (flat thrust) first solve is retried from seeded climb-glide starts
    before refinement proceeds.
    """
    solver = solver or NlpSolverHandle()
    history: list[MeshHistoryRow] = []
    rng = np.random.default_rng(config.seed)

    n = config.n_in
    nlp = normalize(params, n, config.t_f_guess)
    solution, result = solve_mesh(nlp, None, solver)
    attempt = 0
    while attempt < config.n_retries and (
        not result.success
        or solution.T.max() - solution.T.min() < config.degenerate_thrust_range
    ):
        attempt += 1
        guess = _perturbed_guess(params, n, config.t_f_guess, rng)
        candidate, cand_result = solve_mesh(nlp, guess, solver)
        if cand_result.success and (
            candidate.T.max() - candidate.T.min() >= config.degenerate_thrust_range
            or not result.success
        ):
            solution, result = candidate, cand_result
            break
        if not result.success and cand_result.success:
            solution, result = candidate, cand_result
    history.append(_history_row(nlp, solution, result))

    converged = False
    # Warm-started meshes begin essentially on the constraint manifold; a
    # stiff initial penalty keeps the first inner sweep from wandering off
    # toward a different basin.
    warm_solver = _dc_replace(solver, rho_init=max(solver.rho_init, 1e6))
    for _ in range(1, config.max_meshes):
        t_f_prev = solution.T_f
        n += config.n_inc
        nlp = normalize(params, n, config.t_f_guess)
        warm = _reinterpolate(solution, n, params)
        solution, result = solve_mesh(nlp, warm, warm_solver)
        history.append(_history_row(nlp, solution, result))
        if abs(solution.T_f - t_f_prev) < config.epsilon:
            converged = True
            break

    if config.max_meshes == 1:
        converged = result.success

    edge_cfg = EdgeConfig(
        fine_grid_size=config.fine_grid_size,
        epsilon_tilde=0.01,
        r1=config.r1,
        r2=config.r2,
    )
    edge_report = None
    corrected = None
    switch_times = np.empty(0)
    edge_failure = None
    try:
        thrust_interp = interpolate(build_grid(2.0 * math.pi, solution.n), solution.T)
        edge_report = detect_edges(
            thrust_interp, edge_cfg, known_extremes=(0.0, params.T_max)
        )
        if not edge_report.is_empty:
            normalized = reconstruct(thrust_interp, edge_report)
            corrected = PiecewiseConstant(
                breakpoints=solution.mu * normalized.breakpoints,
                values=normalized.values,
                period=solution.T_f,
            )
            switch_times = solution.mu * edge_report.ad_points
    except EdgeStructureError as exc:
        edge_failure = str(exc)

    return SolveReport(
        history=history,
        solution=solution,
        params=params,
        converged=converged and result.success,
        edge_report=edge_report,
        corrected_thrust=corrected,
        switch_times=switch_times,
        edge_failure=edge_failure,
    )


def _history_row(nlp: TranscribedNlp, solution: DecisionVector, result: NlpResult) -> MeshHistoryRow:
    return MeshHistoryRow(
        n=nlp.n,
        T_f=solution.T_f,
        objective_scaled=nlp.objective(solution.data),
        fuel_rate=nlp.fuel_rate(solution.data),
        status=result.status,
        feasibility=result.diagnostics.equality_residual_norm,
    )


@dataclass(frozen=True)
class TrajectoryTable:
    """States and controls sampled on a physical-time grid."""

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    gamma: np.ndarray
    V: np.ndarray
    alpha: np.ndarray
    T_predicted: np.ndarray

    def columns(self):
        return {
            "t": self.t,
            "x": self.x,
            "z": self.z,
            "gamma": self.gamma,
            "V": self.V,
            "alpha": self.alpha,
            "T_predicted": self.T_predicted,
        }


def sample_physical(
    solution: DecisionVector, params: UavParameters, times
) -> TrajectoryTable:
    """Evaluate the solution interpolants at physical times in [0, T_f].

    Periodic blocks come straight from their trigonometric interpolants;
    x is not periodic and is rebuilt as x0 + mu * (running integral of
    the V cos(gamma) interpolant).
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0.0) or np.any(times > solution.T_f * (1.0 + 1e-12)):
        raise ValueError("sample times must lie within [0, T_f]")
    grid = build_grid(2.0 * math.pi, solution.n)
    tau = times / solution.mu

    def interp(block):
        return interpolate(grid, block).evaluate(tau)

    p = solution.V * np.cos(solution.gamma)
    x = params.x0 + solution.mu * interpolate(grid, p).integral_from_zero(tau)
    return TrajectoryTable(
        t=times,
        x=x,
        z=interp(solution.z),
        gamma=interp(solution.gamma),
        V=interp(solution.V),
        alpha=interp(solution.alpha),
        T_predicted=interp(solution.T),
    )
