"""Physical parameters, the Kittel dispersion and coupling-strength algebra.

Every public quantity is a linear frequency in Hz or a field ``mu0*H`` in
Tesla.  Angular frequencies only appear where a coefficient is *defined* in
angular units (the diamagnetic coefficient ``beta_dia`` in (rad*Hz)**2).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import constants

from ._validation import check_nonnegative, check_positive
from .exceptions import DomainError, NoGoError, SingularityError

__all__ = [
    "DEFAULT_GAMMA_OVER_2PI",
    "ULTRASTRONG_THRESHOLD",
    "MagnonParams",
    "CouplingParams",
    "DiamagneticMode",
    "DiamagneticSpec",
    "ModelVariant",
    "CouplingRatio",
    "kittel_frequency",
    "kittel_field",
    "collective_coupling",
    "bright_mode_coupling",
    "normalized_coupling",
    "coupling_ratio",
    "rescaled_coupling",
    "diamagnetic_D",
    "spin_count",
    "moment_in_bohr_magnetons",
]

DEFAULT_GAMMA_OVER_2PI = 28.0e9  # Hz/T, g ~ 2
ULTRASTRONG_THRESHOLD = 0.1
TWO_PI = 2.0 * math.pi
BOHR_MAGNETON = constants.physical_constants["Bohr magneton"][0]


@dataclass(frozen=True)
class MagnonParams:
    """Material and geometry of one ferromagnetic element.

    Defaults describe a 15 um x 400 um x 30 nm permalloy stripe.
    """

    mu0_Meff: float = 1.108
    gamma_over_2pi: float = DEFAULT_GAMMA_OVER_2PI
    mu0_Ms: float = 1.0
    film_thickness: float = 30e-9
    stripe_width: float = 15e-6
    stripe_length: float = 400e-6

    def __post_init__(self):
        check_positive("gamma_over_2pi", self.gamma_over_2pi)
        check_positive("mu0_Meff", self.mu0_Meff)
        check_positive("mu0_Ms", self.mu0_Ms)
        for name in ("film_thickness", "stripe_width", "stripe_length"):
            check_positive(name, getattr(self, name))

    @property
    def volume(self):
        return self.film_thickness * self.stripe_width * self.stripe_length


@dataclass(frozen=True)
class CouplingParams:
    """Coupling of the photon mode to the magnon bright mode.

    ``G_eff`` is the only field the solvers read.  When the microscopic
    chain ``g_s -> g_0 -> G_eff`` is given instead, use :meth:`from_spins`.
    """

    G_eff: float
    g_s: float | None = None
    N: float | None = None
    n: int | None = None

    def __post_init__(self):
        check_nonnegative("G_eff", self.G_eff)
        if self.n is not None:
            if int(self.n) != self.n or self.n < 0:
                raise DomainError(f"n must be a non-negative integer, got {self.n!r}")
            if self.n == 0 and self.G_eff != 0:
                raise DomainError("n = 0 elements implies G_eff = 0")
        if None not in (self.g_s, self.N, self.n):
            expected = self.g_s * math.sqrt(self.N) * math.sqrt(self.n)
            if self.G_eff == 0:
                ok = expected == 0
            else:
                ok = abs(self.G_eff - expected) / self.G_eff < 1e-12
            if not ok:
                raise DomainError(
                    f"G_eff={self.G_eff!r} inconsistent with g_s*sqrt(N*n)={expected!r}"
                )

    @classmethod
    def from_spins(cls, g_s, N, n=1):
        g_0 = collective_coupling(g_s, N)
        return cls(G_eff=bright_mode_coupling(g_0, n), g_s=g_s, N=N, n=n)


class DiamagneticMode(str, enum.Enum):
    NONE = "none"
    BETA = "beta"
    SUPPRESSION = "suppression"


@dataclass(frozen=True)
class DiamagneticSpec:
    """How the A**2 coefficient D is parametrized.

    ``beta`` mode: ``D = beta_dia / omega_m`` with ``beta_dia`` in (rad*Hz)**2.
    ``suppression`` mode: ``D = B * G'**2 / f_m``, a fraction B of the TRK value.
    """

    mode: DiamagneticMode = DiamagneticMode.NONE
    beta_dia: float = 0.0
    B: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", DiamagneticMode(self.mode))
        check_nonnegative("beta_dia", self.beta_dia)
        if self.B >= 1.0:
            raise NoGoError(
                f"no-go / TRK limit: suppression factor B = {self.B!r} >= 1 "
                "leaves no finite critical coupling"
            )
        if not self.B >= 0.0:
            raise DomainError(f"suppression factor B must lie in [0, 1), got {self.B!r}")

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def from_beta(cls, beta_dia):
        return cls(DiamagneticMode.BETA, beta_dia=beta_dia)

    @classmethod
    def from_suppression(cls, B):
        return cls(DiamagneticMode.SUPPRESSION, B=B)


class ModelVariant(str, enum.Enum):
    """Hamiltonian used for the polariton branches.

    HOPFIELD keeps counter-rotating terms and A**2; DICKE drops A**2;
    RWA (Tavis-Cummings) drops both.
    """

    HOPFIELD = "hopfield"
    DICKE = "dicke"
    RWA = "rwa"

    @property
    def counter_rotating(self):
        return self is not ModelVariant.RWA

    @property
    def diamagnetic(self):
        return self is ModelVariant.HOPFIELD


class CouplingRatio(NamedTuple):
    eta: float
    ultrastrong: bool


# -- Kittel mode -----------------------------------------------------------

def kittel_frequency(mu0_H, params):
    """In-plane Kittel frequency ``f_m`` (Hz) for field(s) ``mu0_H`` (T).

    Only ``|mu0_H|`` enters, so negative sweep branches map onto positive ones.
    """
    h = np.abs(np.asarray(mu0_H, dtype=float))
    f = params.gamma_over_2pi * np.sqrt(h * (h + params.mu0_Meff))
    return float(f) if f.ndim == 0 else f


def kittel_field(f_m, params):
    """Non-negative field (T) at which the Kittel mode sits at ``f_m``."""
    f = np.asarray(f_m, dtype=float)
    if np.any(f < 0):
        raise DomainError("f_m must be >= 0")
    q = (f / params.gamma_over_2pi) ** 2
    m = params.mu0_Meff
    # h**2 + m*h - q = 0, written to avoid cancellation for small q
    h = 2.0 * q / (m + np.sqrt(m * m + 4.0 * q))
    return float(h) if h.ndim == 0 else h


# -- coupling algebra ------------------------------------------------------

def collective_coupling(g_s, N):
    """Coupling of one element: single-Bohr-magneton coupling times sqrt(N)."""
    check_nonnegative("g_s", g_s)
    check_nonnegative("N", N)
    return g_s * math.sqrt(N)


def bright_mode_coupling(g_0, n):
    """Bright-mode coupling of ``n`` identical elements, ``g_0 * sqrt(n)``."""
    check_nonnegative("g_0", g_0)
    check_nonnegative("n", n)
    return g_0 * math.sqrt(n)


def normalized_coupling(G_eff, f_p):
    """``epsilon = G_eff / sqrt(f_p)`` in sqrt(Hz); independent of the photon frequency
    when the single-spin coupling scales as ``sqrt(f_p)``."""
    if not np.all(np.asarray(f_p) > 0):
        raise DomainError(f"f_p must be > 0, got {f_p!r}")
    if np.ndim(f_p) == 0 and np.ndim(G_eff) == 0:
        return G_eff / math.sqrt(f_p)
    return np.asarray(G_eff, dtype=float) / np.sqrt(f_p)


def coupling_ratio(G_eff, f_p):
    if not f_p > 0:
        raise DomainError(f"f_p must be > 0, got {f_p!r}")
    eta = G_eff / f_p
    return CouplingRatio(eta, eta > ULTRASTRONG_THRESHOLD)


def rescaled_coupling(G_eff, f_m, f_p):
    """Field-dependent coupling ``G' = G_eff * sqrt(f_m / f_p)`` entering the Hopfield matrix."""
    if np.any(np.asarray(f_p) <= 0):
        raise DomainError("f_p must be > 0")
    if np.any(np.asarray(f_m) < 0):
        raise DomainError("f_m must be >= 0")
    return G_eff * np.sqrt(f_m / f_p)


def diamagnetic_D(spec, f_m, G_prime=0.0):
    """Diamagnetic coefficient D in Hz (linear-frequency convention).

    Parameters
    ----------
    spec : DiamagneticSpec
    f_m : float or ndarray
        Magnon frequency (Hz).
    G_prime : float or ndarray
        Rescaled coupling (Hz); only used in suppression mode.
    """
    if spec.mode is DiamagneticMode.NONE:
        return np.zeros(np.shape(f_m)) if np.ndim(f_m) else 0.0
    f_m = np.asarray(f_m, dtype=float)
    if np.any(f_m <= 0):
        raise SingularityError("D diverges at f_m = 0 for a diamagnetic model")
    if spec.mode is DiamagneticMode.BETA:
        D = spec.beta_dia / (TWO_PI**2 * f_m)
    else:
        D = spec.B * np.asarray(G_prime, dtype=float) ** 2 / f_m
    return float(D) if np.ndim(D) == 0 else D


def spin_count(params):
    """Number of Bohr magnetons carried by one element, ``Ms * V / mu_B``."""
    return moment_in_bohr_magnetons(params.mu0_Ms, params.volume)


def moment_in_bohr_magnetons(mu0_Ms, volume):
    check_nonnegative("volume", volume)
    return (mu0_Ms / constants.mu_0) * volume / BOHR_MAGNETON
