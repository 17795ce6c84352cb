"""Magnon-polariton branches from the Hopfield-Bogoliubov eigenproblem.

The bilinear Hamiltonian of one photon mode coupled to the magnon bright mode
is written as ``H = 1/2 v^T S v`` with ``v = (a, M, a^+, M^+)``.  Polariton
operators ``p = c^T v`` satisfy ``[p, H] = w p`` exactly when ``c`` is a right
eigenvector of ``S @ J`` with ``J = diag(1, 1, -1, -1)``; this is the
Hopfield matrix returned by :func:`hopfield_matrix`.

Two independent routes to the branch frequencies exist and are kept apart:

* :func:`hopfield_eigensystem` diagonalizes the matrix (via the symmetric
  form ``L^T J L`` with ``S = L L^T``, which is similar to ``J S``);
* :func:`quartic_branches` solves the biquadratic characteristic polynomial
  in closed form.  It is the fast path used by the fitting code.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ._validation import check_axis, check_positive
from .core import (
    CouplingParams,
    DiamagneticMode,
    DiamagneticSpec,
    MagnonParams,
    ModelVariant,
    diamagnetic_D,
    kittel_frequency,
    rescaled_coupling,
)
from .exceptions import DomainError, NoGoError, SingularityError, SupercriticalError

__all__ = [
    "PolaritonModel",
    "BranchPair",
    "TRKAnalysis",
    "BOSONIC_METRIC",
    "hopfield_matrix",
    "hopfield_eigensystem",
    "quartic_branches",
    "rwa_branches",
    "variant_branches",
    "polariton_frequencies_eig",
    "polariton_frequencies_quartic",
    "dispersion",
    "dispersion_arrays",
    "bloch_siegert_shift",
    "bloch_siegert_curve",
    "det_hopfield",
    "critical_coupling",
    "trk_analysis",
]

BOSONIC_METRIC = np.diag([1.0, 1.0, -1.0, -1.0])


@dataclass(frozen=True)
class PolaritonModel:
    """Photon mode + magnon bright mode, evaluated as a function of field.

    A ``RWA`` model never carries an A**2 term; a diamagnetic spec passed
    with ``variant=RWA`` is replaced by ``DiamagneticSpec.none()``.  The
    ``DICKE`` variant ignores ``dia`` when evaluating ``D``.
    """

    f_p: float
    coupling: CouplingParams
    magnon: MagnonParams = field(default_factory=MagnonParams)
    dia: DiamagneticSpec = field(default_factory=DiamagneticSpec)
    variant: ModelVariant = ModelVariant.DICKE

    def __post_init__(self):
        check_positive("f_p", self.f_p)
        object.__setattr__(self, "variant", ModelVariant(self.variant))
        if self.variant is ModelVariant.RWA and self.dia.mode is not DiamagneticMode.NONE:
            object.__setattr__(self, "dia", DiamagneticSpec.none())

    @property
    def G_eff(self):
        return self.coupling.G_eff

    def with_variant(self, variant):
        return replace(self, variant=ModelVariant(variant))

    def with_coupling(self, G_eff):
        return replace(self, coupling=CouplingParams(G_eff=G_eff))

    def f_m(self, mu0_H):
        return kittel_frequency(mu0_H, self.magnon)

    def G_prime(self, mu0_H):
        return rescaled_coupling(self.G_eff, self.f_m(mu0_H), self.f_p)

    def D(self, mu0_H):
        """A**2 coefficient (Hz) actually entering this variant's Hamiltonian."""
        if not self.variant.diamagnetic:
            return np.zeros(np.shape(mu0_H)) if np.ndim(mu0_H) else 0.0
        f_m = self.f_m(mu0_H)
        return diamagnetic_D(self.dia, f_m, rescaled_coupling(self.G_eff, f_m, self.f_p))


class BranchPair(NamedTuple):
    """Upper and lower polariton frequency (Hz) with photon weights.

    The photon weight of a branch is ``|alpha|**2 - |gamma|**2`` of its
    Bogoliubov coefficient vector; the magnon weight ``|beta|**2 - |delta|**2``
    is its complement.  Weights are ``None`` when only frequencies were solved.
    """

    f_upper: float
    f_lower: float
    photon_fraction_upper: float | None = None
    photon_fraction_lower: float | None = None

    @property
    def splitting(self):
        return self.f_upper - self.f_lower


class TRKAnalysis(NamedTuple):
    D_TRK: float
    B: float


# -- matrices and determinants ----------------------------------------------

def _hopfield_block(f_p, f_m, G_prime, D, counter_rotating=True):
    """Symmetric coefficient matrix S, broadcast over leading dimensions."""
    f_p, f_m, G_prime, D = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (f_p, f_m, G_prime, D))
    )
    S = np.zeros(f_p.shape + (4, 4))
    g = G_prime
    c = g if counter_rotating else np.zeros_like(g)
    S[..., 0, 0] = S[..., 2, 2] = f_p + 2.0 * D
    S[..., 1, 1] = S[..., 3, 3] = f_m
    S[..., 0, 2] = S[..., 2, 0] = 2.0 * D
    S[..., 0, 1] = S[..., 1, 0] = S[..., 2, 3] = S[..., 3, 2] = g
    S[..., 0, 3] = S[..., 3, 0] = S[..., 1, 2] = S[..., 2, 1] = c
    return S


def hopfield_matrix(f_p, f_m, G_prime, D=0.0, counter_rotating=True):
    """The 4x4 matrix ``S @ diag(1, 1, -1, -1)`` in the basis (a, M, a^+, M^+).

    With ``counter_rotating=False`` the a^+M^+ / aM entries are dropped, which
    (together with ``D=0``) is the Tavis-Cummings limit.
    """
    return _hopfield_block(f_p, f_m, G_prime, D, counter_rotating) @ BOSONIC_METRIC


def det_hopfield(f_p, f_m, G_prime, D=0.0):
    """``det`` of the Hopfield matrix; it vanishes where the lower branch softens."""
    return f_p * f_m * (4.0 * D * f_m - 4.0 * G_prime**2 + f_p * f_m)


def _stability_margin(f_p, f_m, G_prime, D, counter_rotating):
    # S is positive definite iff this is > 0 (given f_p, f_m > 0 and D >= 0)
    if counter_rotating:
        return det_hopfield(f_p, f_m, G_prime, D)
    return f_p * f_m - G_prime**2


def _raise_unstable(margin, f_p, f_m, G_prime, D, fields=None):
    bad = np.flatnonzero(~(np.atleast_1d(margin) > 0))
    i = int(bad[0])
    at = lambda x: float(np.atleast_1d(np.broadcast_to(x, np.shape(margin)))[i])
    det = det_hopfield(at(f_p), at(f_m), at(G_prime), at(D))
    where = None if fields is None else at(fields)
    msg = "soft-mode/supercritical: Hopfield matrix is not positive definite"
    if where is not None:
        msg += f" at mu0_H = {where * 1e3:.6g} mT"
    raise SupercriticalError(f"{msg} (det(M) = {det:.6g} Hz^4)", det=det, field=where)


def hopfield_eigensystem(f_p, f_m, G_prime, D=0.0, counter_rotating=True, fields=None):
    """Positive eigenvalues and normalized eigenvectors of the Hopfield matrix.

    Arguments broadcast; for input shape ``s`` the returns are

    freqs : ndarray, shape ``s + (2,)``
        ``[lower, upper]`` positive eigenvalues (Hz).
    vecs : ndarray, shape ``s + (4, 2)``
        Matching right eigenvectors ``c = (alpha, beta, gamma, delta)`` of
        ``S @ J`` with ``alpha**2 + beta**2 - gamma**2 - delta**2 = 1``.

    Raises :class:`SupercriticalError` when any entry is at or past the
    instability, carrying ``det(M)`` (and the field when ``fields`` is given).
    """
    f_p, f_m, G_prime, D = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (f_p, f_m, G_prime, D))
    )
    if np.any(f_p <= 0) or np.any(f_m < 0) or np.any(D < 0):
        raise DomainError("need f_p > 0, f_m >= 0 and D >= 0")
    # an exactly decoupled zero-frequency magnon (H = 0) is a trivial mode, not an
    # instability; solve with the magnon parked above the photon, then put it back at 0
    idle = (f_m == 0) & (G_prime == 0)
    f_m_eff = np.where(idle, 3.0 * (f_p + 4.0 * D), f_m)
    margin = _stability_margin(f_p, f_m_eff, G_prime, D, counter_rotating)
    if not np.all(margin > 0):
        _raise_unstable(margin, f_p, f_m, G_prime, D, fields)

    S = _hopfield_block(f_p, f_m_eff, G_prime, D, counter_rotating)
    L = np.linalg.cholesky(S)
    W = np.swapaxes(L, -1, -2) @ BOSONIC_METRIC @ L
    W = 0.5 * (W + np.swapaxes(W, -1, -2))
    evals, evecs = np.linalg.eigh(W)
    # eigh sorts ascending: [-w+, -w-, w-, w+]; keep the positive pair
    freqs = evals[..., 2:]
    x = np.linalg.solve(np.swapaxes(L, -1, -2), evecs[..., 2:])
    c = BOSONIC_METRIC @ x
    norm = np.einsum("...ik,ij,...jk->...k", c, BOSONIC_METRIC, c)
    c = c / np.sqrt(norm)[..., None, :]
    if np.any(idle):
        freqs, c = freqs.copy(), c.copy()
        photon = c[idle][..., 0]
        magnon = np.zeros_like(photon)
        magnon[..., 1] = 1.0
        freqs[idle] = np.stack([np.zeros(photon.shape[:-1]), freqs[idle][..., 0]], axis=-1)
        c[idle] = np.stack([magnon, photon], axis=-1)
    return freqs, c


def _photon_fractions(vecs):
    return vecs[..., 0, :] ** 2 - vecs[..., 2, :] ** 2


def quartic_branches(f_p, f_m, G_prime, D=0.0, fields=None):
    """Closed-form ``(lower, upper)`` roots of the biquadratic dispersion relation.

    The polynomial ``w**4 - s w**2 + det(M)`` has ``s = f_m**2 + f_p**2 + 4 D f_p``;
    the small root is taken as ``det / w_+**2`` to avoid cancellation.
    """
    f_p, f_m, G_prime, D = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (f_p, f_m, G_prime, D))
    )
    c = det_hopfield(f_p, f_m, G_prime, D)
    idle = (f_m == 0) & (G_prime == 0)
    if not np.all((c > 0) | idle):
        _raise_unstable(np.where(idle, 1.0, c), f_p, f_m, G_prime, D, fields)
    s = f_m**2 + f_p**2 + 4.0 * D * f_p
    disc = (f_m**2 - f_p**2 - 4.0 * D * f_p) ** 2 + 16.0 * G_prime**2 * f_p * f_m
    w_up2 = 0.5 * (s + np.sqrt(disc))
    lower = np.sqrt(c / w_up2)
    return lower, np.sqrt(w_up2)


def rwa_branches(f_p, f_m, G_prime, fields=None):
    """Tavis-Cummings ``(lower, upper)``; the RWA block of the Hopfield matrix."""
    f_p, f_m, G_prime = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (f_p, f_m, G_prime))
    )
    margin = f_p * f_m - G_prime**2
    idle = (f_m == 0) & (G_prime == 0)
    if not np.all((margin > 0) | idle):
        _raise_unstable(np.where(idle, 1.0, margin), f_p, f_m, G_prime, 0.0, fields)
    mean = 0.5 * (f_p + f_m)
    half = 0.5 * np.hypot(f_p - f_m, 2.0 * G_prime)
    return mean - half, mean + half


def variant_branches(model, mu0_H, variant=None):
    """Closed-form branch frequencies over a field array for ``variant``
    (default ``model.variant``).  Returns ``(lower, upper)`` arrays in Hz."""
    m = model if variant is None else model.with_variant(variant)
    h = np.asarray(mu0_H, dtype=float)
    f_m = m.f_m(h)
    G_prime = rescaled_coupling(m.G_eff, f_m, m.f_p)
    if m.variant is ModelVariant.RWA:
        return rwa_branches(m.f_p, f_m, G_prime, fields=h)
    return quartic_branches(m.f_p, f_m, G_prime, m.D(h), fields=h)


# -- per-model operations ---------------------------------------------------

def polariton_frequencies_eig(model, mu0_H):
    """Branch frequencies and photon weights at one field from the eigensolver."""
    f_m = model.f_m(mu0_H)
    G_prime = rescaled_coupling(model.G_eff, f_m, model.f_p)
    freqs, vecs = hopfield_eigensystem(
        model.f_p,
        f_m,
        G_prime,
        model.D(mu0_H),
        counter_rotating=model.variant.counter_rotating,
        fields=mu0_H,
    )
    ph = _photon_fractions(vecs)
    return BranchPair(float(freqs[1]), float(freqs[0]), float(ph[1]), float(ph[0]))


def polariton_frequencies_quartic(f_p, f_m, G_eff, dia=None):
    """Branches from the closed-form quartic, parametrized by the bare ``G_eff``.

    ``G_eff`` is converted to ``G' = G_eff * sqrt(f_m / f_p)``; ``dia``
    (default: none) gives D.  Frequencies only.
    """
    dia = DiamagneticSpec.none() if dia is None else dia
    G_prime = rescaled_coupling(G_eff, f_m, f_p)
    D = diamagnetic_D(dia, f_m, G_prime)
    lower, upper = quartic_branches(f_p, f_m, G_prime, D)
    if np.ndim(lower) == 0:
        return BranchPair(float(upper), float(lower))
    return BranchPair(upper, lower)


def dispersion_arrays(model, field_grid):
    """Vectorized dispersion: dict of arrays (fields, lower/upper, photon weights)."""
    h = check_axis("field_grid", field_grid)
    f_m = model.f_m(h)
    G_prime = rescaled_coupling(model.G_eff, f_m, model.f_p)
    freqs, vecs = hopfield_eigensystem(
        model.f_p, f_m, G_prime, model.D(h),
        counter_rotating=model.variant.counter_rotating, fields=h,
    )
    ph = _photon_fractions(vecs)
    return {
        "mu0_H": h,
        "f_lower": freqs[:, 0],
        "f_upper": freqs[:, 1],
        "photon_frac_lower": ph[:, 0],
        "photon_frac_upper": ph[:, 1],
    }


def dispersion(model, field_grid):
    """List of ``(mu0_H, BranchPair)`` over a strictly increasing field grid."""
    d = dispersion_arrays(model, field_grid)
    return [
        (float(h), BranchPair(float(u), float(lo), float(pu), float(pl)))
        for h, lo, u, pl, pu in zip(
            d["mu0_H"], d["f_lower"], d["f_upper"], d["photon_frac_lower"], d["photon_frac_upper"]
        )
    ]


def bloch_siegert_curve(model, mu0_H, full=ModelVariant.DICKE):
    """``(delta_lower, delta_upper)``: branch frequency with counter-rotating
    terms (variant ``full``) minus the RWA branch, over a field array (Hz)."""
    full = ModelVariant(full)
    if not full.counter_rotating:
        raise DomainError("the comparison variant must keep counter-rotating terms")
    lo_f, up_f = variant_branches(model, mu0_H, full)
    lo_r, up_r = variant_branches(model, mu0_H, ModelVariant.RWA)
    # with G' = 0 and no A**2 term both models are the bare modes; the two closed
    # forms only disagree by rounding there, so return the exact zero
    m = model.with_variant(full)
    h = np.asarray(mu0_H, dtype=float)
    bare = (rescaled_coupling(m.G_eff, m.f_m(h), m.f_p) == 0) & (np.asarray(m.D(h)) == 0)
    return np.where(bare, 0.0, lo_f - lo_r), np.where(bare, 0.0, up_f - up_r)


def bloch_siegert_shift(model, mu0_H, branch="lower", full=ModelVariant.DICKE):
    """Signed Bloch-Siegert shift (Hz) of one branch at one field."""
    lower, upper = bloch_siegert_curve(model, float(mu0_H), full)
    if branch == "lower":
        return float(lower)
    if branch == "upper":
        return float(upper)
    raise DomainError(f"branch must be 'upper' or 'lower', got {branch!r}")


def critical_coupling(B, f_p, f_m):
    """Coupling G' at which the lower branch softens, for A**2 = B x TRK value."""
    if B >= 1:
        raise NoGoError(
            f"no-go / TRK limit: B = {B!r} >= 1 leaves no finite critical coupling"
        )
    if B < 0:
        raise DomainError(f"B must be >= 0, got {B!r}")
    check_positive("f_p", f_p)
    check_positive("f_m", f_m)
    return 0.5 * math.sqrt(f_p * f_m) / math.sqrt(1.0 - B)


def trk_analysis(G_eff, f_m, D):
    """Thomas-Reiche-Kuhn A**2 value ``G_eff**2 / f_m`` and the suppression ``D / D_TRK``."""
    if not f_m > 0:
        raise SingularityError("D_TRK diverges at f_m = 0")
    D_trk = G_eff**2 / f_m
    if D_trk == 0:
        if D == 0:
            return TRKAnalysis(0.0, 0.0)
        raise SingularityError("B undefined: D_TRK = 0 with D != 0")
    return TRKAnalysis(D_trk, D / D_trk)
