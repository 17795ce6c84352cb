import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magpol.core import (
    CouplingParams,
    DiamagneticMode,
    DiamagneticSpec,
    MagnonParams,
    ModelVariant,
    bright_mode_coupling,
    collective_coupling,
    coupling_ratio,
    diamagnetic_D,
    kittel_field,
    kittel_frequency,
    moment_in_bohr_magnetons,
    normalized_coupling,
    rescaled_coupling,
    spin_count,
)
from magpol.exceptions import DomainError, NoGoError, SingularityError

MU0 = 4e-7 * math.pi  # close enough for a 1e-6 cross-check of the SI constant
MU_B = 9.2740100783e-24


# -- Kittel ---------------------------------------------------------------------

def test_kittel_zero_field(magnon):
    assert kittel_frequency(0.0, magnon) == 0.0


def test_kittel_scalar_value():
    p = MagnonParams(mu0_Meff=1.108, gamma_over_2pi=28.0e9)
    # direct evaluation: 28 GHz/T * sqrt(0.1 T * 1.208 T)
    assert kittel_frequency(0.1, p) == pytest.approx(28.0e9 * math.sqrt(0.1208), rel=1e-15)
    assert kittel_frequency(0.1, p) == pytest.approx(9.732e9, rel=1e-4)


def test_kittel_crossing_field(magnon):
    # quadratic-root oracle: h**2 + M h - (f/gamma)**2 = 0
    q = (5.041e9 / 28e9) ** 2
    h = (-1.108 + math.sqrt(1.108**2 + 4 * q)) / 2
    assert kittel_field(5.041e9, magnon) == pytest.approx(h, rel=1e-12)
    assert h == pytest.approx(28.5e-3, abs=0.05e-3)
    assert kittel_frequency(h, magnon) == pytest.approx(5.041e9, rel=1e-12)


def test_kittel_negative_field_maps_to_absolute(magnon):
    h = np.array([-0.145, -0.03, 0.03, 0.145])
    f = kittel_frequency(h, magnon)
    assert f[0] == f[3] and f[1] == f[2]


@given(st.floats(0, 1.0), st.floats(1e-9, 1.0))
def test_kittel_monotone(h1, dh, ):
    p = MagnonParams()
    assert kittel_frequency(h1 + dh, p) > kittel_frequency(h1, p)


@given(st.floats(0, 50e9))
def test_kittel_field_inverts(f):
    p = MagnonParams()
    assert kittel_frequency(kittel_field(f, p), p) == pytest.approx(f, rel=1e-12, abs=1e-3)


def test_magnon_params_validation():
    with pytest.raises(DomainError):
        MagnonParams(mu0_Meff=0.0)
    with pytest.raises(DomainError):
        MagnonParams(gamma_over_2pi=-1.0)
    with pytest.raises(DomainError):
        MagnonParams(film_thickness=0.0)


# -- coupling algebra ---------------------------------------------------------

def test_collective_coupling_examples():
    assert collective_coupling(0.0, 1.55e13) == 0.0
    assert collective_coupling(28.4, 1.55e13) == pytest.approx(111.8e6, rel=1e-3)
    assert collective_coupling(35.8, 1.55e13) == pytest.approx(140.9e6, rel=1e-3)


def test_bright_mode_examples():
    assert bright_mode_coupling(111.8e6, 1) == 111.8e6
    assert bright_mode_coupling(111.8e6, 26) == pytest.approx(570e6, rel=1e-3)
    assert bright_mode_coupling(111.8e6, 0) == 0.0


def test_coupling_algebra_closure(rng):
    g_s = rng.uniform(0, 100, 10_000)
    N = rng.uniform(0, 1e14, 10_000)
    n = rng.integers(0, 100, 10_000)
    for a, b, c in zip(g_s, N, n):
        got = bright_mode_coupling(collective_coupling(a, b), c)
        want = a * math.sqrt(b * c)
        assert got == pytest.approx(want, rel=1e-12, abs=0.0)


def test_normalized_coupling_examples():
    assert normalized_coupling(512.3e6, 5.041e9) == pytest.approx(7216, rel=1e-3)
    assert normalized_coupling(0.0, 5.041e9) == 0.0
    # eps = alpha sqrt(n) for alpha = 1520, n = 26
    assert 1520 * math.sqrt(26) == pytest.approx(7751, rel=1e-4)
    with pytest.raises(DomainError):
        normalized_coupling(1.0, 0.0)


@given(st.floats(1.0, 1e10), st.integers(1, 10_000), st.floats(1e6, 1e11))
def test_epsilon_sqrt_n_scaling(g0, n, f_p):
    ratio = normalized_coupling(bright_mode_coupling(g0, n), f_p) / normalized_coupling(g0, f_p)
    assert ratio == pytest.approx(math.sqrt(n), rel=1e-14)


def test_coupling_ratio_examples():
    eta = coupling_ratio(512.3e6, 5.041e9)
    assert eta.eta == pytest.approx(0.101, abs=1e-3) and eta.ultrastrong
    zero = coupling_ratio(0.0, 5.041e9)
    assert zero.eta == 0 and not zero.ultrastrong
    weak = coupling_ratio(129e6, 5.0e9)
    assert weak.eta == pytest.approx(0.026, abs=5e-4) and not weak.ultrastrong


def test_rescaled_coupling_examples():
    assert rescaled_coupling(512.3e6, 5.041e9, 5.041e9) == 512.3e6
    assert rescaled_coupling(512.3e6, 2 * 5.041e9, 5.041e9) == pytest.approx(724.5e6, rel=1e-4)
    assert rescaled_coupling(512.3e6, 0.0, 5.041e9) == 0.0


def test_coupling_params_consistency():
    c = CouplingParams.from_spins(28.4, 1.55e13, 26)
    assert c.G_eff == pytest.approx(28.4 * math.sqrt(1.55e13 * 26), rel=1e-12)
    with pytest.raises(DomainError):
        CouplingParams(G_eff=1.0, g_s=28.4, N=1.55e13, n=26)
    with pytest.raises(DomainError):
        CouplingParams(G_eff=1.0, n=0)
    assert CouplingParams(G_eff=0.0, n=0).G_eff == 0


# -- diamagnetic term -----------------------------------------------------------

def test_diamagnetic_beta_example():
    D = diamagnetic_D(DiamagneticSpec.from_beta(4.89e17), 5.041e9)
    assert D == pytest.approx(4.89e17 / (2 * math.pi) ** 2 / 5.041e9, rel=1e-15)
    assert D == pytest.approx(2.46e6, rel=5e-3)


def test_diamagnetic_none_is_zero():
    assert diamagnetic_D(DiamagneticSpec.none(), 5e9) == 0.0
    assert np.all(diamagnetic_D(DiamagneticSpec.none(), np.array([0.0, 1e9])) == 0)


def test_diamagnetic_suppression_example():
    D = diamagnetic_D(DiamagneticSpec.from_suppression(0.047), 5.041e9, 512.3e6)
    assert D == pytest.approx(2.45e6, rel=5e-3)


def test_diamagnetic_zero_frequency_is_singular():
    with pytest.raises(SingularityError):
        diamagnetic_D(DiamagneticSpec.from_beta(1e17), 0.0)
    with pytest.raises(SingularityError):
        diamagnetic_D(DiamagneticSpec.from_suppression(0.1), np.array([1e9, 0.0]), 1e8)


@given(st.floats(1e14, 1e19), st.floats(1e8, 2e10), st.floats(1e6, 2e9))
def test_beta_and_suppression_modes_agree(beta, f_m, G_prime):
    B = beta / ((2 * math.pi) ** 2 * G_prime**2)
    if B >= 1:
        return
    d_beta = diamagnetic_D(DiamagneticSpec.from_beta(beta), f_m)
    d_sup = diamagnetic_D(DiamagneticSpec.from_suppression(B), f_m, G_prime)
    assert d_sup == pytest.approx(d_beta, rel=1e-12)


def test_diamagnetic_spec_validation():
    with pytest.raises(NoGoError):
        DiamagneticSpec.from_suppression(1.0)
    with pytest.raises(DomainError):
        DiamagneticSpec.from_suppression(-0.1)
    assert DiamagneticSpec("beta", beta_dia=1.0).mode is DiamagneticMode.BETA


def test_variant_flags():
    assert ModelVariant.HOPFIELD.counter_rotating and ModelVariant.HOPFIELD.diamagnetic
    assert ModelVariant.DICKE.counter_rotating and not ModelVariant.DICKE.diamagnetic
    assert not ModelVariant.RWA.counter_rotating


# -- spin count -----------------------------------------------------------------

def test_spin_count_stripe():
    N = spin_count(MagnonParams())
    # independent arithmetic: M_s = 1 T / mu0, V = 15 um x 400 um x 30 nm
    assert N == pytest.approx((1.0 / MU0) * 15e-6 * 400e-6 * 30e-9 / MU_B, rel=1e-6)
    assert N == pytest.approx(1.55e13, rel=5e-3)


def test_spin_count_zero_volume_and_linearity():
    assert moment_in_bohr_magnetons(1.0, 0.0) == 0.0
    p1 = MagnonParams()
    p2 = MagnonParams(film_thickness=2 * p1.film_thickness)
    assert spin_count(p2) == pytest.approx(2 * spin_count(p1), rel=1e-15)
