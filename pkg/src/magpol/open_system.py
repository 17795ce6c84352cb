"""Damped Tavis-Cummings analysis: complex eigenfrequencies, RWA limits,
cooperativity and coupling-regime classification.

All rates are half-widths at half maximum in Hz (linear frequency).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_nonnegative
from .exceptions import SingularityError

__all__ = [
    "DampingParams",
    "Regime",
    "RegimeReport",
    "ComplexBranches",
    "complex_eigenfrequencies",
    "track_complex_branches",
    "rwa_frequencies",
    "rwa_linewidths",
    "cooperativity",
    "classify_regime",
]

EXCEPTIONAL_POINT_RTOL = 1e-6


@dataclass(frozen=True)
class DampingParams:
    kappa_p: float = 0.0
    kappa_m: float = 0.0

    def __post_init__(self):
        check_nonnegative("kappa_p", self.kappa_p)
        check_nonnegative("kappa_m", self.kappa_m)


class Regime(str, enum.Enum):
    WEAK = "weak"
    PURCELL = "purcell"
    STRONG = "strong"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    cooperativity: float
    G_eff: float
    kappa_p: float
    kappa_m: float

    def to_dict(self):
        return {
            "regime": self.regime.value,
            "cooperativity": self.cooperativity,
            "G_eff_MHz": self.G_eff / 1e6,
            "kappa_p_MHz": self.kappa_p / 1e6,
            "kappa_m_MHz": self.kappa_m / 1e6,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        G, kp, km = d["G_eff_MHz"] * 1e6, d["kappa_p_MHz"] * 1e6, d["kappa_m_MHz"] * 1e6
        return cls(Regime(d["regime"]), float(d["cooperativity"]), G, kp, km)


class ComplexBranches(NamedTuple):
    """``plus``/``minus`` complex frequencies ``f - i*kappa`` (Hz)."""

    plus: complex
    minus: complex
    near_exceptional_point: bool = False


def _complex_root_arg(f_p, f_m, kappa_p, kappa_m, G_eff):
    # sign chosen so that G = 0 returns f_p - i kappa_p on the photon side
    return (f_p - f_m - 1j * (kappa_p - kappa_m)) ** 2 + 4.0 * G_eff**2


def complex_eigenfrequencies(f_p, f_m, damping, G_eff):
    """Eigenfrequencies of the damped two-mode RWA problem (principal square root).

    Real parts are the resonance frequencies, ``-Im`` the branch HWHM rates.
    ``near_exceptional_point`` is set when the square-root argument is within
    ``1e-6 * (kappa_p + kappa_m)**2`` of zero.
    """
    kp, km = damping.kappa_p, damping.kappa_m
    arg = _complex_root_arg(f_p, f_m, kp, km, G_eff)
    root = np.sqrt(complex(arg))
    centre = 0.5 * (f_m + f_p - 1j * (kp + km))
    near_ep = abs(arg) < EXCEPTIONAL_POINT_RTOL * (kp + km) ** 2
    return ComplexBranches(centre + 0.5 * root, centre - 0.5 * root, bool(near_ep))


def track_complex_branches(f_p, f_m, damping, G_eff):
    """Complex eigenfrequencies along a sweep of ``f_m``, labelled by continuity.

    Returns ``(branch_a, branch_b, near_ep)`` arrays.  The first point uses the
    principal root; each following point keeps the sign of the root that lies
    closer to the previous one, so branches do not swap when the principal
    branch cut is crossed near an exceptional point.
    """
    f_m = np.atleast_1d(np.asarray(f_m, dtype=float))
    kp, km = damping.kappa_p, damping.kappa_m
    arg = _complex_root_arg(f_p, f_m, kp, km, G_eff).astype(complex)
    roots = np.sqrt(arg)
    for i in range(1, roots.size):
        if abs(roots[i] - roots[i - 1]) > abs(-roots[i] - roots[i - 1]):
            roots[i] = -roots[i]
    centre = 0.5 * (f_m + f_p - 1j * (kp + km))
    near_ep = np.abs(arg) < EXCEPTIONAL_POINT_RTOL * (kp + km) ** 2
    return centre + 0.5 * roots, centre - 0.5 * roots, near_ep


def rwa_frequencies(f_p, f_m, G_eff):
    """Undamped RWA branches ``(f_plus, f_minus)``, valid for ``f >> kappa``."""
    mean = 0.5 * (f_m + f_p)
    half = 0.5 * np.sqrt((f_p - f_m) ** 2 + 4.0 * G_eff**2)
    return mean + half, mean - half


def rwa_linewidths(f_p, f_m, damping, G_eff):
    """Branch HWHM ``(kappa_plus, kappa_minus)`` to first order in ``kappa / f``.

    The branches trade linewidth in proportion to their photon/magnon mixing;
    ``kappa_plus + kappa_minus = kappa_p + kappa_m``.
    """
    kp, km = damping.kappa_p, damping.kappa_m
    detuning = np.asarray(f_p - f_m, dtype=float)
    root = np.sqrt(detuning**2 + 4.0 * G_eff**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        mix = np.where(root > 0, detuning / np.where(root > 0, root, 1.0), 0.0)
    mean = 0.5 * (km + kp)
    d = 0.5 * (kp - km) * mix
    if np.ndim(d) == 0:
        d = float(d)
    return mean + d, mean - d


def cooperativity(G_eff, damping):
    """``C = G_eff**2 / (kappa_m * kappa_p)``."""
    if damping.kappa_p <= 0 or damping.kappa_m <= 0:
        raise SingularityError("cooperativity needs kappa_p > 0 and kappa_m > 0")
    return (G_eff / damping.kappa_m) * (G_eff / damping.kappa_p)


def classify_regime(G_eff, damping):
    """Weak / Purcell / strong classification.

    Strong needs ``G`` strictly above both rates, Purcell above the smaller one;
    an equality falls to the weaker of the two regimes it separates.
    """
    kp, km = damping.kappa_p, damping.kappa_m
    if G_eff > kp and G_eff > km:
        regime = Regime.STRONG
    elif min(kp, km) < G_eff <= max(kp, km):
        regime = Regime.PURCELL
    else:
        regime = Regime.WEAK
    try:
        C = cooperativity(G_eff, damping)
    except SingularityError:
        C = float("inf") if G_eff > 0 else 0.0
    return RegimeReport(regime, C, G_eff, kp, km)
