"""Pluggable constrained-optimisation layer.

The interface is a plain problem container (:class:`NlpProblem`) plus a
solver handle carrying tolerances; the built-in algorithm is an augmented
Lagrangian outer loop with projected quasi-Newton (L-BFGS-B) inner solves
on the box constraints. That combination is robust for dense
few-thousand-variable problems whose evaluators are cheap, needs no
factorisations, and is fully deterministic. A different algorithm can be
dropped in behind the same handle.

Multiplier updates follow the classic first-order rule: after an inner
solve, feasibility is compared against the previous outer iterate; on
sufficient decrease the multipliers absorb rho * c(x), otherwise the
penalty grows. Stationarity is measured by the projected gradient of the
Lagrangian scaled by (1 + |multipliers|).

Problems that supply a dense Jacobian and a Lagrangian-curvature callback
additionally get a feasible-point endgame (:class:`_KktPolish`): the
penalty path alone cannot certify tight stationarity when the solution
set is degenerate (for example the neutral time-shift direction of a
periodic orbit), whereas null-space Newton steps with an exact residual
restoration can.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

__all__ = [
    "NlpProblem",
    "NlpSolverHandle",
    "KktDiagnostics",
    "NlpResult",
    "EvaluatorError",
    "minimize",
    "check_jacobian",
]


class EvaluatorError(RuntimeError):
    """An objective or constraint evaluator returned NaN or Inf."""


@dataclass(frozen=True)
class NlpProblem:
    """min f(x) s.t. c(x) = 0, lower <= x <= upper.

    ``jacobian`` returns the dense m x n constraint Jacobian; ``jtprod``
    computes J(x)^T w without forming the matrix and is preferred by the
    solver when present. Either may be omitted (``jtprod`` falls back to
    the dense Jacobian).

    ``var_scale``, ``con_scale`` and ``obj_scale`` are purely algorithmic
    hints: the solver iterates on x / var_scale with constraint rows
    divided by con_scale and the objective by obj_scale, which
    equilibrates curvature for the quasi-Newton inner solves. Feasibility
    is always reported and tested on the unscaled residuals.
    """

    n_vars: int
    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    constraints: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jtprod: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    var_scale: Optional[np.ndarray] = None
    con_scale: Optional[np.ndarray] = None
    obj_scale: float = 1.0
    #: optional curvature callback: hessian(x, w) = grad^2 of f(x) + w . c(x).
    #: When present together with a dense jacobian, the inner subproblems are
    #: solved by a projected Newton sweep instead of L-BFGS-B.
    hessian: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def box(self):
        lo = np.full(self.n_vars, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        hi = np.full(self.n_vars, np.inf) if self.upper is None else np.asarray(self.upper, float)
        return lo, hi

    def jt(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self.jtprod is not None:
            return self.jtprod(x, w)
        if self.jacobian is not None:
            return self.jacobian(x).T @ w
        raise ValueError("problem provides neither jtprod nor jacobian")


@dataclass(frozen=True)
class NlpSolverHandle:
    """Algorithm selector plus tolerances and iteration caps."""

    algorithm: str = "auglag"
    tol_stationarity: float = 1e-6
    tol_feasibility: float = 1e-8
    tol_step: float = 1e-12  # TolX
    tol_fun: float = 1e-12  # TolFun
    max_outer: int = 60
    max_inner: int = 6000
    rho_init: float = 1000.0
    rho_growth: float = 10.0
    rho_max: float = 1e9
    log: Optional[Callable[[str], None]] = None

    def __post_init__(self):
        for name in ("tol_stationarity", "tol_feasibility", "tol_step", "tol_fun"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration caps must be at least 1")

    def _say(self, msg: str) -> None:
        if self.log is not None:
            self.log(msg)


@dataclass(frozen=True)
class KktDiagnostics:
    lagrangian_grad_norm: float
    equality_residual_norm: float
    active_bounds: np.ndarray
    multipliers: np.ndarray


@dataclass(frozen=True)
class NlpResult:
    x: np.ndarray
    objective: float
    diagnostics: KktDiagnostics
    status: str  # converged | max_iterations | evaluator_error | invalid_bounds
    iterations: int
    message: str

    @property
    def success(self) -> bool:
        return self.status == "converged"


def _finite_or_raise(value, what: str):
    if not np.all(np.isfinite(value)):
        raise EvaluatorError(f"{what} returned a non-finite value")
    return value


def _projected_lagrangian_grad(x, grad_l, lo, hi):
    """Norm of the projected Lagrangian gradient on the box."""
    step = np.clip(x - grad_l, lo, hi) - x
    return float(np.max(np.abs(step))) if step.size else 0.0


def _active_mask(y, g, lo, hi, grad_sign=True):
    tol_lo = 1e-11 * (1.0 + np.where(np.isfinite(lo), np.abs(lo), 0.0))
    tol_hi = 1e-11 * (1.0 + np.where(np.isfinite(hi), np.abs(hi), 0.0))
    at_lo = y <= lo + tol_lo
    at_hi = y >= hi - tol_hi
    if grad_sign and g is not None:
        return (at_lo & (g > 0.0)) | (at_hi & (g < 0.0)), at_lo, at_hi
    return at_lo | at_hi, at_lo, at_hi


class _KktPolish:
    """Feasible-point refinement run after the augmented-Lagrangian phase.

    Alternates least-norm Gauss-Newton feasibility restoration with
    reduced-space Newton steps on the constraint null space (computed by
    SVD, which also absorbs rank deficiency such as the neutral
    time-shift direction of a periodic orbit). Bound-multiplier signs are
    checked each sweep and wrongly pinned variables are released. Needs
    dense ``jacobian`` and the ``hessian`` callback.
    """

    def __init__(self, problem, lo, hi, sv, sc, sf, handle):
        self.problem = problem
        self.lo, self.hi = lo, hi
        self.sv, self.sc, self.sf = sv, sc, sf
        self.handle = handle

    def scaled_jac(self, x):
        return self.problem.jacobian(x) * self.sv[None, :] / self.sc[:, None]

    def scaled_grad(self, x):
        return self.sv * self.problem.gradient(x) / self.sf

    def restore(self, y, sweeps=4):
        """Least-norm Newton steps onto c(x) = 0 over the free variables."""
        for _ in range(sweeps):
            x = self.sv * y
            c_raw = self.problem.constraints(x)
            if float(np.max(np.abs(c_raw))) < 1e-13:
                break
            c = c_raw / self.sc
            jac = self.scaled_jac(x)
            free = ~_active_mask(y, None, self.lo, self.hi, grad_sign=False)[0]
            step, *_ = np.linalg.lstsq(jac[:, free], -c, rcond=1e-12)
            y = y.copy()
            y[free] = np.clip(y[free] + step, self.lo[free], self.hi[free])
        return y

    def multipliers(self, y, free):
        x = self.sv * y
        jac = self.scaled_jac(x)
        grad = self.scaled_grad(x)
        lam, *_ = np.linalg.lstsq(jac[:, free].T, grad[free], rcond=1e-12)
        resid = grad - jac.T @ lam
        return jac, grad, lam, resid

    def feasibility(self, y):
        return float(np.max(np.abs(self.problem.constraints(self.sv * y))))

    @staticmethod
    def _prefer(a, b, feas_ok):
        """Pick between (feas, f, y) tuples: feasible-and-cheaper wins."""
        if (a[0] <= feas_ok) != (b[0] <= feas_ok):
            return a if a[0] <= feas_ok else b
        if a[0] <= feas_ok:
            return a if a[1] < b[1] else b
        return a if a[0] < b[0] else b

    def run(self, y, max_sweeps=40):
        handle = self.handle
        lam = np.zeros(self.sc.size)
        stat = np.inf
        feas_ok = max(10.0 * handle.tol_feasibility, 1e-9)
        entry = (self.feasibility(y), float(self.problem.objective(self.sv * y)), y.copy())
        best = entry
        for sweep in range(max_sweeps):
            y = self.restore(y)
            if self.feasibility(y) > feas_ok:
                # Restoration failed from here; fall back to the best point.
                break
            x = self.sv * y
            grad = self.scaled_grad(x)
            active, at_lo, at_hi = _active_mask(y, grad, self.lo, self.hi, grad_sign=False)
            free = ~active
            jac, grad, lam, resid = self.multipliers(y, free)
            lam_scale = 1.0 + float(np.max(np.abs(lam))) if lam.size else 1.0
            # Release pinned variables whose bound multiplier has the wrong
            # sign; they want to move into the interior.
            release = (at_lo & (resid < -1e-9 * lam_scale)) | (
                at_hi & (resid > 1e-9 * lam_scale)
            )
            if np.any(release):
                free = free | release
            stat = float(np.max(np.abs(resid[free]))) / lam_scale if np.any(free) else 0.0
            f_now = float(self.problem.objective(x))
            best = self._prefer((self.feasibility(y), f_now, y.copy()), best, feas_ok)
            handle._say(f"polish {sweep:2d}: f={f_now:.10e} stat={stat:.3e}")
            if stat <= handle.tol_stationarity:
                break
            jf = jac[:, free]
            _, svals, vt = np.linalg.svd(jf, full_matrices=True)
            rank = int(np.sum(svals > 1e-10 * (svals[0] if svals.size else 1.0)))
            null_basis = vt[rank:].T
            if null_basis.shape[1] == 0:
                break
            red_grad = null_basis.T @ grad[free]
            w_curv = -self.sf * lam / self.sc
            hess = (
                self.problem.hessian(x, w_curv)
                * np.outer(self.sv, self.sv)
                / self.sf
            )
            red_hess = null_basis.T @ hess[np.ix_(free, free)] @ null_basis
            eigval, eigvec = np.linalg.eigh(red_hess)
            top = max(float(np.max(np.abs(eigval))), 1e-30)
            # Levenberg shift: keep the model positive definite without the
            # huge steps a curvature-flip would take along weakly negative
            # modes far from the optimum.
            shift = max(0.0, -1.1 * float(np.min(eigval)))
            curv = np.maximum(eigval + shift, 1e-8 * top)
            step_red = eigvec @ (-(eigvec.T @ red_grad) / curv)
            direction = null_basis @ step_red
            f_ref = float(self.problem.objective(x))
            slope = float(red_grad @ step_red)
            noise = 1e-9 * (1.0 + abs(f_ref))
            cauchy = null_basis @ (-red_grad)
            accepted = False
            for trial, trial_slope in ((direction, slope), (cauchy, -float(red_grad @ red_grad))):
                alpha = 1.0
                for _ in range(25):
                    y_try = y.copy()
                    y_try[free] = np.clip(
                        y[free] + alpha * trial, self.lo[free], self.hi[free]
                    )
                    y_try = self.restore(y_try)
                    f_try = float(self.problem.objective(self.sv * y_try))
                    if (
                        f_try <= f_ref + 1e-4 * alpha * trial_slope + noise
                        and self.feasibility(y_try) <= feas_ok
                    ):
                        accepted = True
                        break
                    alpha *= 0.5
                if accepted:
                    break
            if not accepted:
                break
            y = y_try
        y = self.restore(y)
        final = self._prefer(
            (self.feasibility(y), float(self.problem.objective(self.sv * y)), y),
            best,
            feas_ok,
        )[2]
        lam, stat = self.certificate(final)
        return final, lam, stat

    def certificate(self, y):
        """Multipliers and scaled stationarity at ``y``."""
        x = self.sv * y
        grad = self.scaled_grad(x)
        active, at_lo, at_hi = _active_mask(y, grad, self.lo, self.hi, grad_sign=False)
        free = ~active
        _, _, lam, resid = self.multipliers(y, free)
        lam_scale = 1.0 + float(np.max(np.abs(lam))) if lam.size else 1.0
        release = (at_lo & (resid < -1e-9 * lam_scale)) | (
            at_hi & (resid > 1e-9 * lam_scale)
        )
        free = free | release
        stat = float(np.max(np.abs(resid[free]))) / lam_scale if np.any(free) else 0.0
        return lam, stat


def minimize(problem: NlpProblem, x0, handle: NlpSolverHandle | None = None) -> NlpResult:
    """Solve the problem from ``x0``; deterministic given identical inputs.

    Returns the best iterate encountered: once any outer iterate reaches
    the feasibility tolerance, later infeasible iterates can no longer be
    returned (feasibility non-degradation).
    """
    handle = handle or NlpSolverHandle()
    lo_raw, hi_raw = problem.box()
    if np.any(lo_raw > hi_raw):
        x = np.asarray(x0, dtype=float).copy()
        return _failed_result(x, problem, "invalid_bounds", "lower bound exceeds upper bound")

    sv = (
        np.ones(problem.n_vars)
        if problem.var_scale is None
        else np.asarray(problem.var_scale, float)
    )
    sf = float(problem.obj_scale)
    has_eq = problem.constraints is not None
    x_init = np.clip(np.asarray(x0, dtype=float), lo_raw, hi_raw)
    if has_eq:
        try:
            c_probe = _finite_or_raise(problem.constraints(x_init), "constraints")
            _finite_or_raise(problem.objective(x_init), "objective")
        except EvaluatorError as exc:
            return _failed_result(x_init, problem, "evaluator_error", str(exc), check=False)
        sc = (
            np.ones(c_probe.size)
            if problem.con_scale is None
            else np.asarray(problem.con_scale, float)
        )
    else:
        try:
            _finite_or_raise(problem.objective(x_init), "objective")
        except EvaluatorError as exc:
            return _failed_result(x_init, problem, "evaluator_error", str(exc), check=False)
        sc = np.empty(0)

    # Scaled view: iterate on y = x / sv, rows divided by sc, objective by sf.
    def cons_s(y):
        return problem.constraints(sv * y) / sc

    def unscaled_feas(cs):
        return float(np.max(np.abs(sc * cs))) if cs.size else 0.0

    y = x_init / sv
    lo, hi = lo_raw / sv, hi_raw / sv
    c = cons_s(y) if has_eq else np.empty(0)
    lam = np.zeros(c.size)
    rho = handle.rho_init
    feas_prev = unscaled_feas(c)
    best: tuple[float, float, np.ndarray, np.ndarray] | None = None  # (feas, f, y, lam)

    def auglag(yk):
        xk = sv * yk
        fk = float(problem.objective(xk)) / sf
        gk = sv * problem.gradient(xk) / sf
        if has_eq:
            ck = cons_s(yk)
            w = lam - rho * ck
            val = fk - lam @ ck + 0.5 * rho * float(ck @ ck)
            grad = gk - sv * problem.jt(xk, w / sc)
        else:
            val, grad = fk, gk
        if not (np.isfinite(val) and np.all(np.isfinite(grad))):
            raise EvaluatorError("augmented Lagrangian evaluation went non-finite")
        return val, grad

    use_newton = problem.hessian is not None and problem.jacobian is not None and has_eq

    bounds = list(zip(lo, hi))
    status, message = "max_iterations", "outer iteration cap reached"
    outer = 0
    f_prev = np.inf
    stalled = 0
    for outer in range(1, handle.max_outer + 1):
        # Inner accuracy tracks outer progress: solve loosely far from
        # feasibility, tighten as the multipliers converge.
        if has_eq:
            target = max(feas_prev, handle.tol_feasibility)
            gtol = float(np.clip(0.05 * target, 0.1 * handle.tol_stationarity, 1e-3))
        else:
            gtol = 0.1 * handle.tol_stationarity
        try:
            inner = _scipy_minimize(
                auglag,
                y,
                method="L-BFGS-B",
                jac=True,
                bounds=bounds,
                options={
                    "maxiter": handle.max_inner,
                    "maxfun": 4 * handle.max_inner,
                    "ftol": np.finfo(float).eps,
                    "gtol": gtol,
                    "maxcor": 25,
                },
            )
        except EvaluatorError as exc:
            return _failed_result(sv * y, problem, "evaluator_error", str(exc), lam=lam)
        step = float(np.max(np.abs(sv * (inner.x - y)))) if y.size else 0.0
        y = inner.x
        f = float(problem.objective(sv * y))
        c = cons_s(y) if has_eq else np.empty(0)
        feas = unscaled_feas(c)
        lam_hat = lam - rho * c
        gl = sv * problem.gradient(sv * y) / sf
        if has_eq:
            gl = gl - sv * problem.jt(sv * y, lam_hat / sc)
        stat_scale = 1.0 + (float(np.max(np.abs(lam_hat))) if lam_hat.size else 0.0)
        stat = _projected_lagrangian_grad(y, gl, lo, hi) / stat_scale
        handle._say(
            f"outer {outer:3d}: f={f: .8e} feas={feas:.3e} stat={stat:.3e} rho={rho:.1e}"
        )
        if feas <= handle.tol_feasibility:
            if best is None or best[0] > handle.tol_feasibility or f < best[1]:
                best = (feas, f, y.copy(), lam_hat.copy())
        elif best is None:
            best = (feas, f, y.copy(), lam_hat.copy())
        elif best[0] > handle.tol_feasibility and feas < best[0]:
            best = (feas, f, y.copy(), lam_hat.copy())

        if feas <= handle.tol_feasibility and stat <= handle.tol_stationarity:
            status, message = "converged", "feasibility and stationarity satisfied"
            lam = lam_hat
            break
        if use_newton:
            # Hand a nearly feasible, stalled iterate to the polish phase
            # instead of creeping along the penalty path.
            stalled = stalled + 1 if abs(f - f_prev) <= 1e-5 * (1.0 + abs(f)) else 0
            f_prev = f
            if feas <= 1e-4 and stalled >= 2 and outer >= 3:
                lam = lam_hat
                break
        if has_eq:
            if feas <= handle.tol_feasibility:
                # Feasible but not yet stationary: a huge penalty only adds
                # rho * roundoff(c) noise to the multiplier estimates, so
                # back it off while polishing.
                lam = lam_hat
                feas_prev = min(feas_prev, feas)
                if rho > 100.0 * handle.rho_init:
                    rho /= handle.rho_growth
            elif feas <= max(0.5 * feas_prev, handle.tol_feasibility) or rho >= handle.rho_max:
                # Insufficient decrease with the penalty already at its cap
                # still takes the multiplier step; freezing both would
                # deadlock the outer iteration.
                lam = lam_hat
                feas_prev = feas
            else:
                rho = min(rho * handle.rho_growth, handle.rho_max)
        if step <= handle.tol_step and outer > 1:
            status, message = (
                "max_iterations",
                f"step below TolX with feasibility {feas:.3e}",
            )
            break

    if status != "converged" and best is not None:
        y, lam = best[2], best[3]

    if use_newton:
        # Feasible-point endgame: restore the equalities to roundoff level
        # and drive the reduced gradient down with null-space Newton steps.
        polish = _KktPolish(problem, lo, hi, sv, sc, sf, handle)
        try:
            y, lam, stat = polish.run(y)
            feas = unscaled_feas(cons_s(y))
            if feas <= handle.tol_feasibility and stat <= handle.tol_stationarity:
                status, message = "converged", "feasibility and stationarity satisfied"
            elif status == "converged":
                status, message = "max_iterations", (
                    f"polish left stationarity at {stat:.3e}"
                )
        except (EvaluatorError, np.linalg.LinAlgError) as exc:
            message = f"{message}; polish aborted: {exc}"

    # Multipliers are reported against the unscaled rows and objective.
    lam_out = sf * lam / sc if lam.size else lam
    return _build_result(sv * y, problem, lam_out, status, outer, message, lo_raw, hi_raw)


def _build_result(x, problem, lam, status, iterations, message, lo, hi) -> NlpResult:
    has_eq = problem.constraints is not None
    c = problem.constraints(x) if has_eq else np.empty(0)
    grad_l = problem.gradient(x) - (problem.jt(x, lam) if has_eq and lam.size else 0.0)
    active = np.flatnonzero((x <= lo + 1e-12) | (x >= hi - 1e-12))
    diag = KktDiagnostics(
        lagrangian_grad_norm=_projected_lagrangian_grad(x, grad_l, lo, hi),
        equality_residual_norm=float(np.max(np.abs(c))) if c.size else 0.0,
        active_bounds=active,
        multipliers=np.asarray(lam, float),
    )
    return NlpResult(
        x=x,
        objective=float(problem.objective(x)),
        diagnostics=diag,
        status=status,
        iterations=iterations,
        message=message,
    )


def _failed_result(x, problem, status, message, lam=None, check=True) -> NlpResult:
    lo, hi = problem.box()
    lam = np.empty(0) if lam is None else lam
    try:
        return _build_result(x, problem, lam, status, 0, message, lo, hi)
    except Exception:
        diag = KktDiagnostics(np.inf, np.inf, np.empty(0, int), np.empty(0))
        return NlpResult(x, np.nan, diag, status, 0, message)


def check_jacobian(problem: NlpProblem, x, step: float = 1e-6) -> float:
    """Max elementwise deviation of the analytic constraint Jacobian from
    central finite differences, relative to 1 + |analytic entry|."""
    if not step > 0.0:
        raise ValueError("step must be positive")
    if problem.constraints is None or problem.jacobian is None:
        raise ValueError("need both constraints and an analytic jacobian")
    x = np.asarray(x, dtype=float)
    analytic = problem.jacobian(x)
    m, n = analytic.shape
    fd = np.empty_like(analytic)
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        fd[:, j] = (problem.constraints(x + e) - problem.constraints(x - e)) / (2 * step)
    return float(np.max(np.abs(fd - analytic) / (1.0 + np.abs(analytic))))
