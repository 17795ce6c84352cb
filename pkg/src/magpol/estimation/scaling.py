"""Closed-form regressions: collective sqrt(n) scaling and shift-versus-eps**2 lines."""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import as_1d, check_positive
from ..core import normalized_coupling
from ..exceptions import DomainError, UnidentifiableError

__all__ = [
    "SqrtNFit",
    "LineFit",
    "fit_sqrt_n_scaling",
    "infer_gs",
    "fit_bs_scaling",
    "SqrtNScaling",
    "BlochSiegertScaling",
]


class SqrtNFit(NamedTuple):
    alpha: float  # sqrt(Hz)
    residual: float  # RMS of eps - alpha sqrt(n), sqrt(Hz)
    n_samples: int


class LineFit(NamedTuple):
    slope: float
    intercept: float
    residual: float  # RMS, Hz
    r2: float
    n_samples: int


def _samples(samples, width):
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise DomainError(f"samples must be rows of {width} numbers, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise DomainError("no samples")
    return arr


def fit_sqrt_n_scaling(samples):
    """Through-origin fit ``eps = alpha * sqrt(n)`` to rows ``(n, G_eff, f_p)``.

    ``alpha = sum(sqrt(n) eps) / sum(n)``.  Several samples sharing a single
    ``n`` cannot separate the scaling law from a constant and are rejected.
    """
    arr = _samples(samples, 3)
    n, G, f_p = arr.T
    if np.any(n < 1) or np.any(n != np.round(n)):
        raise DomainError("n must be positive integers")
    eps = np.array([normalized_coupling(g, fp) for g, fp in zip(G, f_p)])
    if n.size > 1 and np.all(n == n[0]):
        raise UnidentifiableError("all samples share one n; sqrt(n) scaling is unidentifiable",
                                  parameters=("alpha",))
    root_n = np.sqrt(n)
    alpha = float(np.sum(root_n * eps) / np.sum(n))
    res = eps - alpha * root_n
    return SqrtNFit(alpha, float(math.sqrt(np.mean(res**2))), int(n.size))


def infer_gs(alpha, f_p, N):
    """Single-moment coupling ``g_s = alpha sqrt(f_p) / sqrt(N)`` (Hz)."""
    check_positive("alpha", alpha)
    check_positive("f_p", f_p)
    check_positive("N", N)
    return alpha * math.sqrt(f_p) / math.sqrt(N)


def fit_bs_scaling(samples):
    """Ordinary least-squares line ``delta_f_BS = slope * eps_sq + intercept``.

    ``samples`` are rows ``(eps_sq [Hz], delta_f_BS [Hz])``; the slope is
    dimensionless.
    """
    arr = _samples(samples, 2)
    x, y = arr.T
    if arr.shape[0] < 2:
        raise UnidentifiableError("a line needs at least two samples", parameters=("slope",))
    if np.ptp(x) <= 1e-12 * np.max(np.abs(x)):
        raise UnidentifiableError("all eps**2 values coincide; slope is unidentifiable",
                                  parameters=("slope", "intercept"))
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    res = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(res @ res) / ss_tot if ss_tot > 0 else 1.0
    return LineFit(slope, intercept, float(math.sqrt(np.mean(res**2))), r2, int(x.size))


class SqrtNScaling(RegressorMixin, BaseEstimator):
    """``X``: column of stripe counts n, ``y``: normalized coupling eps (sqrt(Hz))."""

    def fit(self, X, y):
        n = as_1d("X", X)
        eps = as_1d("y", y)
        if n.size != eps.size:
            raise DomainError("X and y must have equal length")
        # feed eps through as G with f_p = 1 so eps is unchanged
        r = fit_sqrt_n_scaling(np.column_stack([n, eps, np.ones_like(n)]))
        self.alpha_ = r.alpha
        self.residual_ = r.residual
        return self

    def predict(self, X):
        check_is_fitted(self, "alpha_")
        return self.alpha_ * np.sqrt(as_1d("X", X))


class BlochSiegertScaling(RegressorMixin, BaseEstimator):
    """``X``: eps**2 (Hz), ``y``: shift (Hz)."""

    def fit(self, X, y):
        r = fit_bs_scaling(np.column_stack([as_1d("X", X), as_1d("y", y)]))
        self.slope_ = r.slope
        self.intercept_ = r.intercept
        self.residual_ = r.residual
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        return self.slope_ * as_1d("X", X) + self.intercept_
