"""Complex least-squares fit of the notch-resonator transmission."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import as_1d, check_axis
from ..exceptions import DomainError, UnidentifiableError
from ..spectrum import ResonatorLineShape, bare_s21, total_Q
from .results import FitResult, run_least_squares

__all__ = ["RESONATOR_PARAMS", "initial_resonator_guess", "fit_bare_resonator", "ResonatorFit"]

RESONATOR_PARAMS = ("f_r", "Q_int", "Q_ext_mag", "phi", "env_amp", "env_phase", "tau")
RESONATOR_UNITS = {
    "f_r": "Hz", "Q_int": "", "Q_ext_mag": "", "phi": "rad",
    "env_amp": "", "env_phase": "rad", "tau": "s",
}
EDGE_FRACTION = 0.1
MIN_DIP_DEPTH = 1e-3
MIN_LINEWIDTHS = 5


def _wrap(phase):
    return (phase + math.pi) % (2.0 * math.pi) - math.pi


def _edges(n):
    k = max(2, int(round(EDGE_FRACTION * n)))
    return np.r_[0:k, n - k:n]


def initial_resonator_guess(f, s21):
    """Starting point from the off-resonant baseline and the dip shape.

    The cable delay comes from a straight-line fit to the unwrapped phase of
    the outer samples; amplitude and environment phase from the same region.
    The dip of the environment-corrected response then gives ``f_r``, the
    loaded ``Q`` (half-power width of ``|1 - z|**2``), ``Q/Q_ext`` (depth)
    and ``phi`` (angle of ``1 - z`` at resonance).
    """
    n = f.size
    e = _edges(n)
    fc = 0.5 * (f[0] + f[-1])
    phase = np.unwrap(np.angle(s21))
    slope, intercept = np.polyfit(f[e] - fc, phase[e], 1)
    tau = -slope / (2.0 * math.pi)
    a = float(np.mean(np.abs(s21[e])))
    env_phase = intercept + 2.0 * math.pi * fc * tau
    z = s21 / (a * np.exp(1j * env_phase) * np.exp(-2j * math.pi * f * tau))
    r = 1.0 - z
    p = np.abs(r) ** 2
    i0 = int(np.argmax(p))
    depth = math.sqrt(p[i0])
    if depth < MIN_DIP_DEPTH:
        raise UnidentifiableError(
            f"no resonance dip (depth {depth:.2e}); Q_ext is unbounded",
            parameters=("Q_ext_mag", "Q_int", "f_r"),
        )
    half = 0.5 * p[i0]
    lo = i0
    while lo > 0 and p[lo] > half:
        lo -= 1
    hi = i0
    while hi < n - 1 and p[hi] > half:
        hi += 1
    fwhm = max(f[hi] - f[lo], 2.0 * (f[1] - f[0]))
    f_r = float(f[i0])
    Q = f_r / fwhm
    Q_ext = Q / depth
    inv_qi = 1.0 / Q - 1.0 / Q_ext
    Q_int = 1.0 / inv_qi if inv_qi > 0 else 10.0 * Q
    phi = float(np.angle(r[i0]))
    return np.array([f_r, Q_int, Q_ext, phi, a, _wrap(env_phase), tau]), fwhm


def _shape_from(x):
    return ResonatorLineShape(
        f_r=x[0], Q_int=x[1], Q_ext_mag=x[2], phi=x[3],
        env_amp=x[4], env_phase=x[5], tau=x[6],
    )


def fit_bare_resonator(f, s21, x0=None, max_iter=200, xtol=1e-10, rel_step=1e-6,
                       sample_weight=None):
    """Fit ``f_r, Q_int, |Q_ext|, phi, env_amp, env_phase, tau`` to a complex trace.

    Internally the environment phase is referred to the band centre so it
    decorrelates from ``tau``; results are reported in the public convention.
    A trace without a dip raises :class:`UnidentifiableError`; running out of
    iterations raises :class:`ConvergenceError` carrying the best point.
    """
    f = check_axis("f", f, min_size=8)
    s21 = as_1d("s21", s21, dtype=complex)
    if s21.size != f.size:
        raise DomainError("f and s21 must have equal length")
    w = np.ones(f.size) if sample_weight is None else np.sqrt(as_1d("sample_weight", sample_weight))
    guess, fwhm = initial_resonator_guess(f, s21)
    if x0 is not None:
        guess = np.asarray(x0, dtype=float)
    if (f[-1] - f[0]) < MIN_LINEWIDTHS * fwhm:
        raise DomainError(
            f"trace spans {(f[-1] - f[0]) / fwhm:.1f} linewidths; need >= {MIN_LINEWIDTHS}"
        )
    fc = 0.5 * (f[0] + f[-1])

    def to_internal(x):
        y = np.array(x, dtype=float)
        y[5] = x[5] - 2.0 * math.pi * fc * x[6]
        return y

    def to_public(y):
        x = np.array(y, dtype=float)
        x[5] = y[5] + 2.0 * math.pi * fc * y[6]
        return x

    infeasible = np.full(2 * f.size, np.inf)

    def residuals_internal(y):
        if y[1] <= 0 or y[2] <= 0 or y[4] <= 0 or y[0] <= 0:
            return infeasible
        model = bare_s21(f, _shape_from(to_public(y)))
        d = (model - s21) * w
        return np.concatenate([d.real, d.imag])

    span = f[-1] - f[0]
    typical_int = np.array([guess[0], guess[1], guess[2], 1.0, guess[4], 1.0, 1.0 / span])
    y0 = to_internal(guess)
    fit = run_least_squares(
        residuals_internal, y0, RESONATOR_PARAMS, RESONATOR_UNITS, typical_int,
        max_iter=max_iter, xtol=xtol, rel_step=rel_step,
    )

    # report in public parametrization; refresh uncertainties there
    x_pub = to_public(np.array([fit.values[k] for k in RESONATOR_PARAMS]))
    x_pub[5] = _wrap(x_pub[5])
    x_pub[3] = _wrap(x_pub[3])

    def residuals_public(x):
        d = (bare_s21(f, _shape_from(x)) - s21) * w
        return np.concatenate([d.real, d.imag])

    typical_pub = typical_int.copy()
    typical_pub[5] = 1.0
    result = run_least_squares(
        residuals_public, x_pub, RESONATOR_PARAMS, RESONATOR_UNITS, typical_pub,
        max_iter=max_iter, xtol=xtol, rel_step=rel_step,
    )
    result.iterations += fit.iterations
    result.history = fit.history + result.history[1:]
    Q = total_Q(result.values["Q_int"], result.values["Q_ext_mag"])
    result.extras["Q"] = Q
    if result.uncertainties is not None:
        cov = np.array(result.extras["covariance"])
        qi, qe = result.values["Q_int"], result.values["Q_ext_mag"]
        grad = np.zeros(len(RESONATOR_PARAMS))
        grad[1] = (Q / qi) ** 2
        grad[2] = (Q / qe) ** 2
        result.extras["Q_sigma"] = float(math.sqrt(grad @ cov @ grad))
    return result


class ResonatorFit(BaseEstimator):
    """Estimator wrapper around :func:`fit_bare_resonator`.

    ``fit(f, s21)`` sets ``f_r_``, ``Q_int_``, ``Q_ext_mag_``, ``Q_``,
    ``phi_``, ``env_amp_``, ``env_phase_``, ``tau_`` and ``result_``;
    ``predict(f)`` returns the complex model transmission.
    """

    def __init__(self, max_iter=200, xtol=1e-10, rel_step=1e-6):
        self.max_iter = max_iter
        self.xtol = xtol
        self.rel_step = rel_step

    def fit(self, X, y, sample_weight=None):
        self.result_ = fit_bare_resonator(
            X, y, max_iter=self.max_iter, xtol=self.xtol, rel_step=self.rel_step,
            sample_weight=sample_weight,
        )
        for k in RESONATOR_PARAMS:
            setattr(self, k + "_", self.result_.values[k])
        self.Q_ = self.result_.extras["Q"]
        self.shape_ = _shape_from([self.result_.values[k] for k in RESONATOR_PARAMS])
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        return bare_s21(check_axis("f", X), self.shape_)
