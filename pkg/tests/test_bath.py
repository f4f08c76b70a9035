"""Bath scalars, correlation functions and rate functions.

Reference numbers marked "mpmath" were computed once with 30-digit mpmath
quadrature of the defining integrals and frozen here.
"""

import math

import numpy as np
import pytest

from conftest import GAP
from polaron_ccqme import bath as B
from polaron_ccqme.errors import AccuracyError
from polaron_ccqme.model import BathSpec, SuperOhmic, Tabulated


# ----------------------------------------------------------------------------
# trigamma
# ----------------------------------------------------------------------------


def test_trigamma_at_one_and_two():
    assert B.trigamma(1.0) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert B.trigamma(2.0) == pytest.approx(math.pi**2 / 6 - 1.0, rel=1e-14)


def test_trigamma_recurrence():
    z = 0.37
    assert B.trigamma(z + 1) == pytest.approx(B.trigamma(z) - 1 / z**2, rel=1e-13)


def test_trigamma_mpmath_values():
    # mpmath psi(1, z)
    assert B.trigamma(0.37) == pytest.approx(8.3604738277990979087, rel=1e-13)
    ref = complex(-0.459266853952080452374, -1.809695401592478239476)
    assert abs(B.trigamma(0.3 + 0.7j) - ref) < 1e-12 * abs(ref)


def test_trigamma_vectorized_and_domain():
    z = np.array([1.0, 2.0, 5.5])
    assert B.trigamma(z).shape == (3,)
    with pytest.raises(ValueError):
        B.trigamma(-0.5)
    with pytest.raises(ValueError):
        B.trigamma(0.0 + 1j)


# ----------------------------------------------------------------------------
# kappa and xi
# ----------------------------------------------------------------------------


def test_kappa_reference_value():
    # exp[-(0.2/pi) int w e^{-w} coth(w) dw], mpmath
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    ref = 0.910813014832803464482
    assert B.kappa_pair(2.0, bath) == pytest.approx(ref, rel=1e-12)
    assert B.kappa_pair(2.0, bath, "closed") == pytest.approx(ref, rel=1e-12)


def test_kappa_vanishes_at_high_temperature():
    bath = BathSpec(1e-3, SuperOhmic(0.1, 1.0))
    assert B.kappa_pair(2.0, bath) < 1e-6


@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5])
@pytest.mark.parametrize("beta", [1.0, 2.8, 5.6])
def test_kappa_closed_form_matches_quadrature(gamma, beta):
    bath = BathSpec(beta, SuperOhmic(gamma, 1.0))
    q = B.kappa_pair(2.0, bath)
    c = B.kappa_pair(2.0, bath, "closed")
    assert 0 < q <= 1
    assert abs(q - c) <= 1e-8 * q


def test_kappa_trivial_cases():
    bath = BathSpec(1.0, SuperOhmic(0.0, 1.0))
    assert B.kappa_pair(2.0, bath) == 1.0
    assert B.kappa_pair(0.0, BathSpec(1.0, SuperOhmic(0.3))) == 1.0


def test_xi_reference_and_trivial():
    d = SuperOhmic(0.1, 1.0)
    assert B.xi_shift(1.0, d) == pytest.approx(-0.2 / math.pi, rel=1e-12)
    assert B.xi_shift(1.0, d, "closed") == pytest.approx(-0.2 / math.pi, rel=1e-14)
    assert B.xi_shift(0.0, d) == 0.0


def test_tabulated_density_matches_super_ohmic():
    so = SuperOhmic(0.1, 1.0)
    w = np.geomspace(1e-3, 60.0, 800)
    tab = Tabulated(w, so(w), exponent=3.0)
    bath_so = BathSpec(2.0, so)
    bath_tab = BathSpec(2.0, tab)
    assert B.kappa_pair(2.0, bath_tab) == pytest.approx(B.kappa_pair(2.0, bath_so), rel=1e-6)
    assert B.xi_shift(1.0, tab) == pytest.approx(B.xi_shift(1.0, so), rel=1e-6)


# ----------------------------------------------------------------------------
# exponent and correlation
# ----------------------------------------------------------------------------


def test_exponent_integral_reference():
    # int J/w^2 [coth(bw/2) cos(w t) - i sin(w t)] at t = 1.3, mpmath
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    ref = complex(0.0256088687663183892988, -0.0359309572836196293584)
    for method in ("closed", "quadrature"):
        assert abs(B.exponent_integral(1.3, bath, method) - ref) < 1e-10 * abs(ref)
    assert B.exponent_integral(0.0, bath) == pytest.approx(0.146740110027233965471, rel=1e-13)


def test_exponent_decays():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    assert abs(B.epsilon_exponent(-4.0, 200.0, bath)) < 1e-3


def test_exponent_zero_channel():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    assert B.epsilon_exponent(0.0, 1.0, bath) == 0.0


def test_correlation_time_reversal_by_quadrature():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    i_plus = B.exponent_integral(1.3, bath, "quadrature")
    i_minus = B.exponent_integral(-1.3, bath, "quadrature")
    assert abs(i_minus - np.conj(i_plus)) < 1e-12
    kk = B.kappa_pair(2.0, bath) ** 2
    assert B.correlation(-4.0, kk, -1.3, bath) == pytest.approx(np.conj(B.correlation(-4.0, kk, 1.3, bath)))


def test_correlation_at_zero_is_one_minus_kappa_squared():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    k = B.kappa_pair(2.0, bath)
    # normal channel: kk (exp(+4 I(0)/pi) - 1) = 1 - kk for the pair with d d' = -4
    assert B.correlation(-4.0, k * k, 0.0, bath).real == pytest.approx(1.0 - k * k, rel=1e-12)


def test_imaginary_time_continuation_matches_real_time_at_zero():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    for method in ("closed", "quadrature"):
        assert B.exponent_integral_imaginary(0.0, bath, method) == pytest.approx(
            B.exponent_integral(0.0, bath).real, rel=1e-10
        )
    with pytest.raises(ValueError):
        B.exponent_integral_imaginary(2.5, bath)


def test_imaginary_time_kms_symmetry():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    u = np.array([0.3, 0.7])
    a = B.exponent_integral_imaginary(u, bath)
    b = B.exponent_integral_imaginary(2.0 - u, bath)
    assert np.allclose(a, b, rtol=1e-12)


# ----------------------------------------------------------------------------
# rate functions
# ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def rates():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    kk = B.kappa_pair(2.0, bath) ** 2
    return bath, kk, {p: B.PolaronRate(bath, p, kk) for p in (-4.0, 4.0)}


@pytest.mark.parametrize("p", [-4.0, 4.0])
def test_detailed_balance_at_gap(rates, p):
    _, _, r = rates
    assert B.detailed_balance_error(r[p], GAP) < 1e-6


@pytest.mark.parametrize("p", [-4.0, 4.0])
def test_rate_derivative_matches_finite_difference(rates, p):
    _, _, r = rates
    h = 1e-4
    fd = (r[p].W(0.8 + h) - r[p].W(0.8 - h)) / (2 * h)
    assert abs(r[p].dW(0.8) - fd) < 1e-6 * abs(fd)


@pytest.mark.parametrize("p", [-4.0, 4.0])
@pytest.mark.parametrize("lam", [-2.8, 0.8])
def test_spectral_rate_matches_time_domain(rates, p, lam):
    bath, kk, r = rates
    ref = B.half_fourier_quadrature(lambda t: B.correlation(p, kk, t, bath), lam)
    assert abs(r[p].W(lam) - ref) < 1e-6 * abs(ref)


@pytest.mark.parametrize("p", [-4.0, 4.0])
def test_imaginary_time_relation(rates, p):
    bath, kk, r = rates
    lhs = B.imag_time_integral(p, kk, GAP, bath)
    rhs = r[p].W(GAP).imag + math.exp(-bath.beta * GAP) * r[p].W(-GAP).imag
    assert abs(lhs - rhs) < 1e-6 * abs(lhs)


@pytest.mark.parametrize("p", [-4.0, 4.0])
def test_imaginary_time_relation_at_zero(rates, p):
    bath, kk, r = rates
    assert B.imag_time_integral(p, kk, 0.0, bath) == pytest.approx(2.0 * r[p].W(0.0).imag, rel=1e-6)


def test_derivative_singular_at_zero(rates):
    _, _, r = rates
    with pytest.raises(AccuracyError):
        r[-4.0].dW(0.0)


def test_zero_coupling_rate():
    bath = BathSpec(2.0, SuperOhmic(0.0, 1.0))
    r = B.PolaronRate(bath, -4.0, 1.0)
    assert r.W(0.7) == 0 and r.dW(0.7) == 0


def test_gaussian_rate_golden_rule_part():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    g = B.GaussianRate(bath)
    J = bath.density
    for lam in (0.8, 2.8):
        up = 0.5 * J(lam) * (1.0 / math.tanh(bath.beta * lam / 2) - 1.0)
        down = 0.5 * J(lam) * (1.0 / math.tanh(bath.beta * lam / 2) + 1.0)
        assert g.W(lam).real == pytest.approx(up, rel=1e-10)
        assert g.W(-lam).real == pytest.approx(down, rel=1e-10)
        assert B.detailed_balance_error(g, lam) < 1e-12


def test_gaussian_rate_matches_time_domain():
    bath = BathSpec(2.0, SuperOhmic(0.1, 1.0))
    g = B.GaussianRate(bath)
    for lam in (-1.5, 0.8):
        ref = B.half_fourier_quadrature(lambda t: B.gaussian_correlation(t, bath), lam)
        assert abs(g.W(lam) - ref) < 1e-6 * abs(ref)


def test_tabulated_rate_close_to_super_ohmic():
    so = SuperOhmic(0.1, 1.0)
    w = np.geomspace(1e-3, 60.0, 800)
    tab = Tabulated(w, so(w), exponent=3.0)
    ra = B.PolaronRate(BathSpec(2.0, so), -4.0, 0.7)
    rb = B.PolaronRate(BathSpec(2.0, tab), -4.0, 0.7)
    for lam in (-2.0, 0.5, 2.0):
        assert abs(ra.W(lam) - rb.W(lam)) < 1e-5 * abs(ra.W(lam))


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_time_domain_quadrature_flags_non_decaying_correlation():
    with pytest.raises(AccuracyError) as info:
        B.half_fourier_quadrature(lambda t: 1.0 + 0j, 0.5)
    assert info.value.achieved > 0
