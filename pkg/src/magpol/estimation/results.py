from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConvergenceError, UnidentifiableError
from ._lm import levenberg_marquardt, numeric_jacobian

__all__ = ["FitResult", "run_least_squares"]

# relative singular-value floor below which a parameter combination is unresolved
RANK_RTOL = 1e-10


@dataclass
class FitResult:
    """Outcome of one least-squares fit.

    ``values`` and ``uncertainties`` are keyed by parameter name, in the units
    listed in ``units``.  Uncertainties are one-sigma values from the local
    Gauss-Newton covariance scaled by the residual variance; they are
    ``None`` unless the fit converged.
    """

    values: dict
    units: dict
    residual_rms: float
    iterations: int
    converged: bool
    uncertainties: dict | None = None
    extras: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)

    def __getitem__(self, name):
        return self.values[name]

    @property
    def names(self):
        return tuple(self.values)

    def relative_uncertainty(self, name):
        if self.uncertainties is None:
            return math.nan
        v = self.values[name]
        return abs(self.uncertainties[name] / v) if v else math.inf

    def to_dict(self):
        params = {}
        for k, v in self.values.items():
            sigma = None if self.uncertainties is None else self.uncertainties.get(k)
            params[k] = {"value": v, "sigma": sigma, "unit": self.units.get(k, "")}
        return {
            "parameters": params,
            "residual_rms": self.residual_rms,
            "iterations": self.iterations,
            "converged": self.converged,
            "extras": self.extras,
        }

    def to_json(self, **kw):
        kw.setdefault("indent", 2)
        kw.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), default=_json_default, **kw)

    @classmethod
    def from_dict(cls, d):
        params = d["parameters"]
        values = {k: float(p["value"]) for k, p in params.items()}
        units = {k: p.get("unit", "") for k, p in params.items()}
        sig = {k: p.get("sigma") for k, p in params.items()}
        unc = None if any(s is None for s in sig.values()) else {k: float(s) for k, s in sig.items()}
        return cls(values, units, float(d["residual_rms"]), int(d["iterations"]),
                   bool(d["converged"]), unc, dict(d.get("extras", {})))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value"):  # enums
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _covariance(J, residuals, names, scale):
    m, p = J.shape
    Js = J * scale[None, :]
    u, s, vt = np.linalg.svd(Js, full_matrices=False)
    if s.size == 0 or s[0] == 0 or s[-1] < RANK_RTOL * s[0]:
        weak = [names[j] for j in np.flatnonzero(np.abs(vt[-1]) > 0.3)]
        raise UnidentifiableError(
            "rank-deficient normal equations; poorly constrained: " + ", ".join(weak),
            parameters=weak,
        )
    dof = max(m - p, 1)
    s2 = float(residuals @ residuals) / dof
    cov_s = (vt.T / s**2) @ vt
    return s2 * cov_s * np.outer(scale, scale)


def run_least_squares(fun, x0, names, units, typical, max_iter=200, xtol=1e-10,
                      rel_step=1e-6, extras=None, raise_on_failure=True):
    """Run :func:`levenberg_marquardt` and package a :class:`FitResult`.

    ``fun`` maps the parameter vector (ordered as ``names``) to weighted
    residuals.  Raises :class:`UnidentifiableError` for too few residuals or a
    singular Jacobian and :class:`ConvergenceError` (carrying the best point)
    when the iteration budget runs out.
    """
    x0 = np.asarray(x0, dtype=float)
    r0 = np.asarray(fun(x0), dtype=float)
    if r0.size < x0.size + 1:
        raise UnidentifiableError(
            f"{r0.size} residuals cannot constrain {x0.size} free parameters",
            parameters=names,
        )
    state = levenberg_marquardt(fun, x0, typical, max_iter=max_iter, xtol=xtol, rel_step=rel_step)
    rms = math.sqrt(2.0 * state.cost / state.residuals.size)
    values = {n: float(v) for n, v in zip(names, state.x)}
    result = FitResult(values, dict(units), rms, state.iterations, state.converged,
                       None, dict(extras or {}), state.history)
    result.extras["message"] = state.message
    if not state.converged:
        if raise_on_failure:
            raise ConvergenceError(f"no convergence: {state.message}", result=result)
        return result
    J = numeric_jacobian(fun, state.x, state.residuals, np.asarray(typical, float), rel_step)
    scale = np.maximum(np.abs(state.x), typical)
    cov = _covariance(J, state.residuals, list(names), scale)
    result.uncertainties = {n: float(math.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(names)}
    result.extras["covariance"] = cov.tolist()
    return result
