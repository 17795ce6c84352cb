"""Joint fit of branch frequencies and HWHM linewidths in the damped RWA picture."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import as_1d, check_positive
from ..core import DEFAULT_GAMMA_OVER_2PI, MagnonParams, kittel_frequency
from ..exceptions import DomainError, UnidentifiableError
from ..open_system import DampingParams, classify_regime, rwa_frequencies, rwa_linewidths
from .dispersion import LOWER, UPPER, _parse_branches
from .results import run_least_squares

__all__ = ["LINEWIDTH_PARAMS", "linewidth_model", "fit_linewidths", "LinewidthFit"]

LINEWIDTH_PARAMS = ("G_eff", "kappa_p", "kappa_m")
LINEWIDTH_UNITS = {"G_eff": "Hz", "kappa_p": "Hz", "kappa_m": "Hz"}


def linewidth_model(f_p, f_m, G_eff, kappa_p, kappa_m):
    """``(f_upper, f_lower, kappa_upper, kappa_lower)`` for arrays of ``f_m``."""
    f_plus, f_minus = rwa_frequencies(f_p, f_m, G_eff)
    k_plus, k_minus = rwa_linewidths(f_p, f_m, DampingParams(kappa_p, kappa_m), G_eff)
    return f_plus, f_minus, k_plus, k_minus


def _initial_coupling(f_p, f_m, f_obs):
    # invert the two-mode repulsion point by point: G**2 = d**2 + d |delta|
    delta = np.abs(f_p - f_m)
    d = np.minimum(np.abs(f_obs - f_p), np.abs(f_obs - f_m))
    g2 = d**2 + d * delta
    g2 = g2[np.isfinite(g2)]
    return float(np.sqrt(np.median(g2))) if g2.size else 0.01 * f_p


def fit_linewidths(mu0_H, f_obs, hwhm_obs, f_p, mu0_Meff, branch=None,
                   gamma_over_2pi=DEFAULT_GAMMA_OVER_2PI, init=None,
                   sigma_f=None, sigma_w=None, max_iter=200, xtol=1e-10, rel_step=1e-6):
    """Fit ``G_eff, kappa_p, kappa_m`` to resonance frequencies and HWHM widths.

    The photon frequency and Kittel parameters are held fixed.  ``sigma_f``
    and ``sigma_w`` (scalars or per-point arrays, Hz) set inverse-variance
    weights; the default weights are one.  Points whose width is NaN
    contribute their frequency only.  Untagged points are assigned to the
    nearer branch of the starting model.  The result carries the regime
    classification in ``extras["regime"]``.
    """
    check_positive("f_p", f_p)
    h = as_1d("mu0_H", mu0_H)
    if f_obs is None or np.all(np.isnan(np.asarray(f_obs, dtype=float))):
        raise UnidentifiableError(
            "no resonance-frequency data: the coupling is only weakly constrained by widths alone",
            parameters=("G_eff",),
        )
    f = as_1d("f_obs", f_obs)
    w = as_1d("hwhm_obs", hwhm_obs)
    if not (h.size == f.size == w.size):
        raise DomainError("mu0_H, f_obs and hwhm_obs must have equal length")
    has_w = np.isfinite(w)
    if not has_w.any():
        raise UnidentifiableError("no linewidth data: kappa_p and kappa_m unconstrained",
                                  parameters=("kappa_p", "kappa_m"))
    sf = np.broadcast_to(1.0 if sigma_f is None else np.asarray(sigma_f, float), h.shape)
    sw = np.broadcast_to(1.0 if sigma_w is None else np.asarray(sigma_w, float), h.shape)
    magnon = MagnonParams(mu0_Meff=mu0_Meff, gamma_over_2pi=gamma_over_2pi)
    f_m = kittel_frequency(h, magnon)

    start = dict(init or {})
    start.setdefault("G_eff", _initial_coupling(f_p, f_m, f))
    start.setdefault("kappa_p", float(np.min(w[has_w])))
    start.setdefault("kappa_m", float(np.max(w[has_w])))
    x0 = [float(start[p]) for p in LINEWIDTH_PARAMS]

    codes = _parse_branches(branch, h.size)
    auto = codes < 0
    if auto.any():
        up, lo, _, _ = linewidth_model(f_p, f_m, x0[0], x0[1], x0[2])
        codes = codes.copy()
        codes[auto] = np.where(np.abs(f - up) < np.abs(f - lo), UPPER, LOWER)[auto]
    is_up = codes == UPPER
    wm = np.where(has_w, w, 0.0)

    def residuals(x):
        G, kp, km = x
        if kp < 0 or km < 0:
            return np.full(h.size + int(has_w.sum()), np.inf)
        up, lo, k_up, k_lo = linewidth_model(f_p, f_m, G, kp, km)
        rf = (np.where(is_up, up, lo) - f) / sf
        rw = (np.where(is_up, k_up, k_lo) - wm) / sw
        return np.concatenate([rf, rw[has_w]])

    typical = [max(x0[0], 1e6), max(x0[1], 1e3), max(x0[2], 1e3)]
    if h.size + int(has_w.sum()) < len(x0) + 1:
        raise UnidentifiableError("too few points for three parameters", parameters=LINEWIDTH_PARAMS)
    result = run_least_squares(
        residuals, x0, LINEWIDTH_PARAMS, LINEWIDTH_UNITS, typical,
        max_iter=max_iter, xtol=xtol, rel_step=rel_step,
    )
    # coupling enters only squared; report its magnitude
    result.values["G_eff"] = abs(result.values["G_eff"])
    damping = DampingParams(result["kappa_p"], result["kappa_m"])
    report = classify_regime(result["G_eff"], damping)
    result.extras.update(
        regime=report.to_dict(),
        f_p=f_p,
        mu0_Meff=mu0_Meff,
        gamma_over_2pi=gamma_over_2pi,
        branch_assignment=["upper" if u else "lower" for u in is_up],
    )
    return result


class LinewidthFit(BaseEstimator):
    """Estimator form of :func:`fit_linewidths`.

    ``X`` is the field (T); ``y`` is an ``(n, 2)`` array of observed
    frequency and HWHM (Hz).  ``predict`` returns the same layout for the
    requested branch.
    """

    def __init__(self, f_p=5.0e9, mu0_Meff=1.108, gamma_over_2pi=DEFAULT_GAMMA_OVER_2PI,
                 init=None, max_iter=200):
        self.f_p = f_p
        self.mu0_Meff = mu0_Meff
        self.gamma_over_2pi = gamma_over_2pi
        self.init = init
        self.max_iter = max_iter

    def fit(self, X, y, branch=None, sigma_f=None, sigma_w=None):
        y = np.asarray(y, dtype=float)
        if y.ndim != 2 or y.shape[1] != 2:
            raise DomainError("y must have shape (n, 2): frequency and HWHM")
        self.result_ = fit_linewidths(
            X, y[:, 0], y[:, 1], self.f_p, self.mu0_Meff, branch=branch,
            gamma_over_2pi=self.gamma_over_2pi, init=self.init,
            sigma_f=sigma_f, sigma_w=sigma_w, max_iter=self.max_iter,
        )
        self.G_eff_ = self.result_["G_eff"]
        self.kappa_p_ = self.result_["kappa_p"]
        self.kappa_m_ = self.result_["kappa_m"]
        self.regime_ = self.result_.extras["regime"]["regime"]
        return self

    def predict(self, X, branch="lower"):
        check_is_fitted(self, "result_")
        f_m = kittel_frequency(as_1d("X", X),
                               MagnonParams(mu0_Meff=self.mu0_Meff, gamma_over_2pi=self.gamma_over_2pi))
        up, lo, k_up, k_lo = linewidth_model(self.f_p, f_m, self.G_eff_, self.kappa_p_, self.kappa_m_)
        if branch == "upper":
            return np.column_stack([up, k_up])
        if branch == "lower":
            return np.column_stack([lo, k_lo])
        raise DomainError(f"branch must be 'upper' or 'lower', got {branch!r}")
