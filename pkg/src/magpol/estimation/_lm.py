"""Levenberg-Marquardt iteration with forward-difference Jacobians.

Kept small on purpose: the objectives here have at most seven parameters and
a few thousand residuals, so a dense normal-equation solve per trial step is
cheap.  A trial step is only accepted if it lowers the cost strictly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import MagpolError

REL_STEP = 1e-6
XTOL = 1e-10
MAX_ITER = 200
_LAMBDA_MIN = 1e-12
_LAMBDA_MAX = 1e16


@dataclass
class LMState:
    x: np.ndarray
    residuals: np.ndarray
    cost: float
    jacobian: np.ndarray
    iterations: int
    converged: bool
    message: str
    history: list = field(default_factory=list)


def _cost(r):
    if r is None or not np.all(np.isfinite(r)):
        return np.inf
    return 0.5 * float(r @ r)


def _safe_eval(fun, x):
    # infeasible regions (supercritical, non-finite) count as infinite cost
    try:
        with np.errstate(all="ignore"):
            return np.asarray(fun(x), dtype=float)
    except (MagpolError, FloatingPointError):
        return None


def numeric_jacobian(fun, x, r0, typical, rel_step=REL_STEP):
    J = np.empty((r0.size, x.size))
    for j in range(x.size):
        h = rel_step * max(abs(x[j]), typical[j])
        xp = x.copy()
        xp[j] += h
        rp = _safe_eval(fun, xp)
        if rp is None or not np.all(np.isfinite(rp)):
            # step out of the feasible set: difference backwards instead
            xp[j] = x[j] - h
            rp = _safe_eval(fun, xp)
            if rp is None or not np.all(np.isfinite(rp)):
                raise FloatingPointError(f"Jacobian column {j} not computable")
            J[:, j] = (r0 - rp) / h
        else:
            J[:, j] = (rp - r0) / h
    return J


def levenberg_marquardt(fun, x0, typical=None, max_iter=MAX_ITER, xtol=XTOL,
                        rel_step=REL_STEP, lambda0=1e-3):
    """Minimize ``0.5 * ||fun(x)||**2`` from ``x0``.

    ``typical`` gives per-parameter magnitudes used for the finite-difference
    step when ``x[j]`` is near zero and for the relative step test.
    Converged means the last scaled step fell below ``xtol``.
    """
    x = np.array(x0, dtype=float)
    typical = np.ones_like(x) if typical is None else np.asarray(typical, dtype=float)
    r = _safe_eval(fun, x)
    cost = _cost(r)
    if not np.isfinite(cost):
        raise FloatingPointError("objective is not finite at the initial point")
    history = [cost]
    lam = lambda0
    J = numeric_jacobian(fun, x, r, typical, rel_step)
    scale = np.maximum(np.abs(x), typical)
    for it in range(1, max_iter + 1):
        g = J.T @ r
        A = J.T @ J
        diag = np.maximum(np.diag(A), 1e-300)
        converged = False
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(A + lam * np.diag(diag), -g, rcond=None)[0]
            small = np.max(np.abs(step) / scale) < xtol
            x_new = x + step
            r_new = _safe_eval(fun, x_new)
            cost_new = _cost(r_new)
            if cost_new < cost:
                x, r = x_new, r_new
                cost = cost_new
                history.append(cost)
                lam = max(lam / 10.0, _LAMBDA_MIN)
                converged = small
                break
            if small or cost == 0.0:
                converged = True
                break
            lam *= 10.0
            if lam > _LAMBDA_MAX:
                return LMState(x, r, cost, J, it, False, "damping exhausted", history)
        if converged:
            return LMState(x, r, cost, J, it, True, "step below xtol", history)
        scale = np.maximum(np.abs(x), typical)
        J = numeric_jacobian(fun, x, r, typical, rel_step)
    return LMState(x, r, cost, J, max_iter, False, "max_iter reached", history)
