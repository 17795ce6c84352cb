"""Fit photon frequency, effective magnetization, coupling (and the A**2
coefficient) to observed polariton branch frequencies."""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import as_1d
from ..core import (
    DEFAULT_GAMMA_OVER_2PI,
    CouplingParams,
    DiamagneticSpec,
    MagnonParams,
    ModelVariant,
)
from ..exceptions import ConvergenceError, DomainError, UnidentifiableError
from ..solver import PolaritonModel, hopfield_eigensystem, variant_branches
from .results import run_least_squares

__all__ = [
    "DISPERSION_PARAMS",
    "build_model",
    "initial_dispersion_guess",
    "assign_branches",
    "fit_dispersion",
    "DispersionFit",
]

DISPERSION_PARAMS = ("f_p", "mu0_Meff", "G_eff", "beta_dia")
DISPERSION_UNITS = {"f_p": "Hz", "mu0_Meff": "T", "G_eff": "Hz", "beta_dia": "(rad Hz)^2"}
MAX_OUTER = 10
LOWER, UPPER = 0, 1
_BRANCH_CODES = {"lower": LOWER, "upper": UPPER, "l": LOWER, "u": UPPER}


def build_model(values, variant=ModelVariant.DICKE, gamma_over_2pi=DEFAULT_GAMMA_OVER_2PI):
    """:class:`PolaritonModel` from a parameter mapping as produced by the fit."""
    variant = ModelVariant(variant)
    beta = values.get("beta_dia", 0.0)
    dia = DiamagneticSpec.from_beta(beta) if variant is ModelVariant.HOPFIELD else DiamagneticSpec.none()
    return PolaritonModel(
        f_p=values["f_p"],
        coupling=CouplingParams(G_eff=values["G_eff"]),
        magnon=MagnonParams(mu0_Meff=values["mu0_Meff"], gamma_over_2pi=gamma_over_2pi),
        dia=dia,
        variant=variant,
    )


def _parse_branches(branch, n):
    """Integer codes: 0 lower, 1 upper, -1 unassigned."""
    if branch is None:
        return np.full(n, -1)
    if isinstance(branch, str):
        branch = [branch] * n
    out = np.empty(n, dtype=int)
    if len(branch) != n:
        raise DomainError(f"branch tags: expected {n}, got {len(branch)}")
    for i, b in enumerate(branch):
        if b is None or (isinstance(b, str) and b.strip().lower() in ("", "auto", "?")):
            out[i] = -1
            continue
        if isinstance(b, (int, np.integer)) and b in (LOWER, UPPER, -1):
            out[i] = b
            continue
        try:
            out[i] = _BRANCH_CODES[str(b).strip().lower()]
        except KeyError:
            raise DomainError(f"unknown branch tag {b!r} at point {i}") from None
    return out


def _kittel_meff(h, f, gamma):
    h = np.asarray(h, float)
    f = np.asarray(f, float)
    return float(np.median((f / gamma) ** 2 / h - h))


def _profile_coupling(h, f, f_p, gamma):
    """``(G, mu0_Meff)`` making the two-mode inversion ``f_m = f - G**2 / (f - f_p)``
    most consistent with a single Kittel curve, or ``None`` if too few
    points sit away from the photon line."""
    sel = (h > 0) & (np.abs(f - f_p) > 0.05 * f_p)
    if sel.sum() < 3:
        return None
    hs, fs = h[sel], f[sel]
    best = None
    for G in f_p * np.geomspace(1e-3, 0.3, 80):
        fm = fs - G**2 / (fs - f_p)
        ok = fm > 0
        if ok.sum() < max(3, sel.sum() // 2):
            continue
        M_i = (fm[ok] / gamma) ** 2 / hs[ok] - hs[ok]
        med = float(np.median(M_i))
        if med <= 0:
            continue
        spread = float(np.median(np.abs(M_i - med))) / med
        if best is None or spread < best[0]:
            best = (spread, float(G), med)
    return None if best is None else best[1:]


def _anchor_refine(h, f, lo, up, f_p, M, G, gamma):
    # pull f_p by the model's own far-detuned offset at the anchor point
    if up.any():
        i, k = np.flatnonzero(up)[np.argmin(h[up])], 1
    else:
        i, k = np.flatnonzero(lo)[np.argmax(h[lo])], 0
    for _ in range(5):
        model = build_model({"f_p": f_p, "mu0_Meff": M, "G_eff": G}, ModelVariant.RWA, gamma)
        f_p += float(f[i] - variant_branches(model, h[i])[k])
    return f_p


def _guess_cost(h, f, codes, f_p, M, G, gamma):
    model = build_model({"f_p": f_p, "mu0_Meff": M, "G_eff": G}, ModelVariant.RWA, gamma)
    lower, upper = variant_branches(model, h)
    d = np.where(codes == UPPER, np.abs(f - upper), np.abs(f - lower))
    auto = codes < 0
    d[auto] = np.minimum(np.abs(f - upper), np.abs(f - lower))[auto]
    return float(np.median(d))


def initial_dispersion_guess(h, f, codes, gamma=DEFAULT_GAMMA_OVER_2PI):
    """Starting ``(f_p, mu0_Meff, G_eff)`` from the data alone.

    Far from the crossing each branch sits on a bare mode: the upper branch
    at the lowest field and the lower branch at the highest field give the
    photon frequency, the magnon-like side gives ``mu0_Meff`` through an
    inverted Kittel relation, and the coupling is half the smallest
    splitting (or the lower branch's pull-down at the crossing field).
    When the data hug the crossing, a second candidate comes from the
    coupling that best linearizes the two-mode inversion; the candidate
    with the smaller median misfit wins.
    """
    h = np.abs(h)
    lo = codes != UPPER
    up = codes == UPPER
    if up.any():
        f_p = float(f[up][np.argmin(h[up])])
    else:
        f_p = float(f[lo][np.argmax(h[lo])])

    # magnon-like samples: lower branch below f_p at low field, upper branch above it
    mag = (lo & (f < 0.97 * f_p)) | (up & (f > 1.03 * f_p))
    mag &= h > 0
    if mag.sum() >= 2:
        order = np.argsort(np.abs(f[mag] - f_p))[::-1][:2]
        M = _kittel_meff(h[mag][order], f[mag][order], gamma)
    else:
        M = 1.0
    M = M if M > 0 else 1.0
    h_cross = float(np.sqrt(0.25 * M**2 + (f_p / gamma) ** 2) - 0.5 * M)

    G = 0.0
    if up.any() and lo.any():
        # splitting between the nearest lower/upper pairs in field
        hu, fu = h[up], f[up]
        gaps = [fu[np.argmin(np.abs(hu - hl))] - fl for hl, fl in zip(h[lo], f[lo])]
        G = 0.5 * float(np.min(gaps))
    if not G > 0:
        hl, fl = h[lo], f[lo]
        G = f_p - float(fl[np.argmin(np.abs(hl - h_cross))])
    G = max(G, 1e-3 * f_p)

    candidates = [(M, G)]
    prof = _profile_coupling(h, f, f_p, gamma)
    if prof is not None:
        candidates.append(prof[::-1])
    best = None
    for M_c, G_c in candidates:
        fp_c = _anchor_refine(h, f, lo, up, f_p, M_c, G_c, gamma)
        cost = _guess_cost(h, f, codes, fp_c, M_c, G_c, gamma)
        if best is None or cost < best[0]:
            best = (cost, fp_c, M_c, G_c)
    return best[1:]


def assign_branches(model, h, f):
    """Nearest-branch labels for each point; exact ties go to the branch with
    the larger photon weight."""
    lower, upper = variant_branches(model, h)
    d_lo = np.abs(f - lower)
    d_up = np.abs(f - upper)
    codes = np.where(d_up < d_lo, UPPER, LOWER)
    tie = d_up == d_lo
    if tie.any():
        f_m = model.f_m(h[tie])
        G_prime = model.G_prime(h[tie])
        _, vecs = hopfield_eigensystem(
            model.f_p, f_m, G_prime, model.D(h[tie]),
            counter_rotating=model.variant.counter_rotating,
        )
        ph = vecs[..., 0, :] ** 2 - vecs[..., 2, :] ** 2
        codes[tie] = np.where(ph[..., 1] > ph[..., 0], UPPER, LOWER)
    return codes


def fit_dispersion(mu0_H, f_obs, branch=None, variant=ModelVariant.DICKE, free=None,
                   init=None, gamma_over_2pi=DEFAULT_GAMMA_OVER_2PI, sample_weight=None,
                   max_iter=200, xtol=1e-10, rel_step=1e-6):
    """Weighted least squares of model branch frequencies against observations.

    ``branch`` tags each point ``"lower"`` / ``"upper"``; untagged points
    (``None`` / ``"auto"``) are assigned to the nearest branch of the current
    model and reassigned after each fit until the labels settle.  ``free``
    names the parameters to fit (default: ``f_p, mu0_Meff, G_eff`` plus
    ``beta_dia`` for the Hopfield variant); others stay at ``init``.
    Excursions into the supercritical region count as infinite residual.
    """
    variant = ModelVariant(variant)
    h = as_1d("mu0_H", mu0_H)
    f = as_1d("f_obs", f_obs)
    if h.size != f.size:
        raise DomainError("mu0_H and f_obs must have equal length")
    if h.size == 0:
        raise DomainError("no dispersion points")
    codes = _parse_branches(branch, h.size)
    w = np.ones(h.size) if sample_weight is None else as_1d("sample_weight", sample_weight)
    sw = np.sqrt(w)

    names = [p for p in DISPERSION_PARAMS if p != "beta_dia" or variant is ModelVariant.HOPFIELD]
    free = list(names if free is None else free)
    for p in free:
        if p not in names:
            raise DomainError(f"parameter {p!r} cannot be fitted under the {variant.value} variant")
    if variant is ModelVariant.HOPFIELD and np.any(h == 0):
        raise DomainError("the beta-form A**2 term diverges at zero field; drop mu0_H = 0 points")
    if h.size < len(free) + 1:
        raise UnidentifiableError(
            f"{h.size} points cannot constrain {len(free)} free parameters", parameters=free
        )

    start = dict(init or {})
    if any(p not in start for p in ("f_p", "mu0_Meff", "G_eff")):
        f_p0, M0, G0 = initial_dispersion_guess(h, f, codes, gamma_over_2pi)
        start.setdefault("f_p", f_p0)
        start.setdefault("mu0_Meff", M0)
        start.setdefault("G_eff", G0)
    if variant is ModelVariant.HOPFIELD:
        start.setdefault("beta_dia", 0.0)
    values = {p: float(start[p]) for p in names}
    typical = {"f_p": values["f_p"], "mu0_Meff": 1.0, "G_eff": 0.1 * values["f_p"], "beta_dia": 1e17}

    auto = codes < 0
    if auto.any():
        codes = codes.copy()
        codes[auto] = assign_branches(build_model(values, variant, gamma_over_2pi), h[auto], f[auto])

    def residuals(x):
        v = dict(values)
        v.update(zip(free, x))
        model = build_model(v, variant, gamma_over_2pi)
        lower, upper = variant_branches(model, h)
        return sw * (np.where(codes == UPPER, upper, lower) - f)

    result = None
    reassignments = 0
    for _ in range(MAX_OUTER):
        x0 = [values[p] for p in free]
        try:
            result = run_least_squares(
                residuals, x0, free, {p: DISPERSION_UNITS[p] for p in free},
                [typical[p] for p in free], max_iter=max_iter, xtol=xtol, rel_step=rel_step,
            )
        except ConvergenceError as exc:
            # hand back a complete parameter set with the best-so-far point
            best = dict(values)
            best.update(exc.result.values)
            exc.result.values = best
            exc.result.units = {p: DISPERSION_UNITS[p] for p in names}
            raise
        values.update(result.values)
        if not auto.any():
            break
        new = assign_branches(build_model(values, variant, gamma_over_2pi), h[auto], f[auto])
        changed = int(np.sum(new != codes[auto]))
        if changed == 0:
            break
        codes[auto] = new
        reassignments += changed

    fixed = [p for p in names if p not in free]
    result.values = {p: values[p] for p in names}
    result.units = {p: DISPERSION_UNITS[p] for p in names}
    if result.uncertainties is not None:
        result.uncertainties = {p: result.uncertainties.get(p, 0.0) for p in names}
    used = {LOWER: "lower", UPPER: "upper"}
    present = sorted({used[c] for c in codes})
    result.extras.update(
        variant=variant.value,
        free=free,
        fixed=fixed,
        gamma_over_2pi=gamma_over_2pi,
        n_points=int(h.size),
        branches_used="both" if len(present) == 2 else present[0],
        branch_assignment=[used[c] for c in codes],
        reassignments=reassignments,
    )
    return result


class DispersionFit(BaseEstimator):
    """Estimator form of :func:`fit_dispersion`.

    ``X`` is the field (T), ``y`` the observed frequency (Hz).  After ``fit``
    the attributes ``f_p_``, ``mu0_Meff_``, ``G_eff_`` (and ``beta_dia_``
    for Hopfield), ``model_`` and ``result_`` are set.
    """

    def __init__(self, variant="dicke", free=None, init=None,
                 gamma_over_2pi=DEFAULT_GAMMA_OVER_2PI, max_iter=200):
        self.variant = variant
        self.free = free
        self.init = init
        self.gamma_over_2pi = gamma_over_2pi
        self.max_iter = max_iter

    def fit(self, X, y, branch=None, sample_weight=None):
        self.result_ = fit_dispersion(
            X, y, branch=branch, variant=self.variant, free=self.free, init=self.init,
            gamma_over_2pi=self.gamma_over_2pi, sample_weight=sample_weight,
            max_iter=self.max_iter,
        )
        for k, v in self.result_.values.items():
            setattr(self, k + "_", v)
        self.model_ = build_model(self.result_.values, self.variant, self.gamma_over_2pi)
        return self

    def predict(self, X, branch="lower"):
        check_is_fitted(self, "result_")
        lower, upper = variant_branches(self.model_, as_1d("X", X))
        if branch == "lower":
            return lower
        if branch == "upper":
            return upper
        codes = _parse_branches(branch, lower.size)
        return np.where(codes == UPPER, upper, lower)

    def score(self, X, y, branch="lower"):
        """Negative RMS deviation (Hz); larger is better."""
        return -math.sqrt(float(np.mean((self.predict(X, branch) - as_1d("y", y)) ** 2)))
