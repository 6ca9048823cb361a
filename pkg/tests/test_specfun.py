"""Special functions against mpmath, plus the Gamma-form cosh transform."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import loggamma as scipy_loggamma

from speckern.errors import DivergenceError, DomainError, PoleError
from speckern.specfun import (StirlingPolicy, TestFunction, cosh_coeff, cosh_coeff_continued,
                              gamma, gauss_2f1_at_one, h_transform, laplace_estimate, log_gamma,
                              log_sinpi, pochhammer, rgamma, stirling_remainder)

finite = dict(allow_nan=False, allow_infinity=False)
complex_arg = st.builds(complex, st.floats(-40, 60, **finite), st.floats(-60, 60, **finite))


def _mp_loggamma(z):
    return complex(mp.loggamma(mp.mpc(z.real, z.imag)))


@settings(max_examples=300, deadline=None)
@given(complex_arg)
def test_log_gamma_matches_mpmath_principal_branch(z):
    if abs(z.imag) < 1e-9 and z.real <= 0 and abs(z.real - round(z.real)) < 1e-6:
        return
    # on the cut scipy honours the sign of a zero imaginary part, mpmath does not
    ref = complex(scipy_loggamma(z)) if z.imag == 0 and z.real < 0 else _mp_loggamma(z)
    got = log_gamma(z)
    assert abs(got - ref) <= 1e-13 * max(1.0, abs(ref))


@pytest.mark.parametrize("x", [-1.5, -0.3, -7.7])
def test_log_gamma_signed_zero_on_cut(x):
    assert log_gamma(complex(x, 0.0)) == pytest.approx(complex(scipy_loggamma(complex(x, 0.0))), rel=1e-14)
    assert log_gamma(complex(x, -0.0)) == pytest.approx(complex(scipy_loggamma(complex(x, -0.0))), rel=1e-14)


@pytest.mark.parametrize("z", [0.5, 1.0, 2.0, 10.5, 171.3, 1e-8, 3 + 4j, -2.5, -7.25 + 0.01j])
def test_log_gamma_spot_values(z):
    ref = _mp_loggamma(complex(z))
    assert abs(log_gamma(z) - ref) <= 1e-14 * max(1.0, abs(ref))


def test_log_gamma_vectorised_equals_scalar():
    zs = np.array([0.3 + 1j, -3.7 + 0.2j, 25.0 - 14j, 1.0])
    vec = log_gamma(zs)
    assert np.allclose(vec, [log_gamma(complex(z)) for z in zs], rtol=0, atol=0)


@pytest.mark.parametrize("z", [0, -1, -5, -40.0])
def test_log_gamma_poles(z):
    with pytest.raises(PoleError):
        log_gamma(z)
    assert rgamma(z) == 0


def test_log_gamma_rejects_nonfinite():
    with pytest.raises(DomainError):
        log_gamma(complex(math.nan, 0))


@settings(max_examples=100, deadline=None)
@given(st.floats(-30, 30, **finite), st.floats(-20, 20, **finite))
def test_gamma_functional_equation(x, y):
    z = complex(x, y)
    if abs(y) < 1e-6 and x <= 1 and abs(x - round(x)) < 1e-6:
        return
    lhs = log_gamma(z + 1)
    rhs = log_gamma(z) + np.log(z)
    # equal modulo 2 pi i
    d = lhs - rhs
    assert abs(d.real) < 1e-11 * max(1.0, abs(lhs))
    assert abs(d.imag / (2 * math.pi) - round(d.imag / (2 * math.pi))) < 1e-11 * max(1.0, abs(lhs))


def test_log_sinpi_matches_mpmath():
    for z in (0.3 + 0.1j, -2.7 + 5j, 12.2 - 30j, 0.5j):
        assert abs(np.exp(log_sinpi(np.array([z]))[0]) - complex(mp.sinpi(mp.mpc(z.real, z.imag)))) \
            < 1e-12 * abs(complex(mp.sinpi(mp.mpc(z.real, z.imag))))


def test_gamma_and_reciprocal():
    assert abs(gamma(5.0) - 24.0) < 1e-12
    assert abs(rgamma(0.5) - 1 / math.sqrt(math.pi)) < 1e-15


@settings(max_examples=100, deadline=None)
@given(complex_arg, st.integers(0, 200))
def test_pochhammer_matches_mpmath(z, n):
    if abs(z.imag) < 1e-9 and z.real <= 0 and abs(z.real - round(z.real)) < 1e-6:
        return
    ref = complex(mp.rf(mp.mpc(z.real, z.imag), n))
    if not math.isfinite(abs(ref)) or abs(ref) > 1e300 or abs(ref) < 1e-300:
        return
    assert abs(pochhammer(z, n) - ref) <= 1e-11 * abs(ref)


def test_pochhammer_through_zero_is_exact():
    assert pochhammer(-3, 5) == 0
    assert pochhammer(-3, 3) == -6
    with pytest.raises(DomainError):
        pochhammer(1.0, -1)


@pytest.mark.parametrize("a,b,c", [(0.5, 0.25, 2.0), (1 + 1j, 0.3, 3.5), (-0.5, 1.5, 2.2)])
def test_2f1_closed_and_series_against_mpmath(a, b, c):
    ref = complex(mp.hyp2f1(a, b, c, 1))
    closed = gauss_2f1_at_one(a, b, c)
    series = gauss_2f1_at_one(a, b, c, method="series")
    assert abs(closed.value - ref) <= 1e-13 * abs(ref)
    assert abs(series.value - ref) <= max(series.err, 1e-10 * abs(ref))


def test_2f1_divergence_and_poles():
    with pytest.raises(DivergenceError):
        gauss_2f1_at_one(1.0, 1.0, 2.0)
    with pytest.raises(PoleError):
        gauss_2f1_at_one(-3.0, -0.5, -1.0)


@pytest.mark.parametrize("nu", [1.0, 2.5, 6.0])
@pytest.mark.parametrize("r", [0.0, 1.3, 4.0, 0.4j])
def test_cosh_coeff_against_mpmath_quadrature(nu, r):
    f = lambda u: 2 * mp.cos(u * r) / mp.cosh(u) ** nu  # noqa: E731
    ref = complex(mp.quad(f, [0, 5, 20, mp.inf]))
    assert abs(cosh_coeff(nu, r) - ref) <= 1e-12 * abs(ref)


def test_cosh_coeff_quadrature_agrees():
    g = TestFunction.cosh_power_fn(3.0)
    for r in (0.0, 2.0, 0.5j):
        q = h_transform(r, g)
        c = cosh_coeff(3.0, r)
        assert abs(q.value - c) <= 1e-9 * abs(c)
        assert q.err < 1e-8 * abs(c)


def test_cosh_coeff_domain():
    with pytest.raises(DomainError):
        cosh_coeff(-1.0, 0.0)
    with pytest.raises(DomainError):
        cosh_coeff(1.0, 2j)
    # the continuation passes the strip edge
    assert np.isfinite(cosh_coeff_continued(1.0, 1.5j)).all()


def test_gaussian_transform():
    g = TestFunction.gaussian(2.0)
    for r in (0.0, 1.0, 3.0):
        q = h_transform(r, g).value
        assert abs(q - math.sqrt(math.pi / 2.0) * math.exp(-r * r / 8.0)) < 1e-11


@pytest.mark.parametrize("M", [2, 5, 10])
def test_stirling_remainder_small_and_decreasing(M):
    r1 = abs(stirling_remainder(10.0, M))
    r2 = abs(stirling_remainder(20.0, M))
    assert r2 <= r1
    # first omitted term bounds the remainder on the real axis
    assert r1 < 1e-2 / 10 ** (2 * M - 1) * 10


def test_stirling_policy_validation():
    with pytest.raises(DomainError):
        StirlingPolicy(M=0)
    with pytest.raises(DomainError):
        stirling_remainder(1.0, 3)


def test_laplace_estimate_against_quadrature():
    x = 400.0
    ref = float(mp.quad(lambda t: mp.e ** (-x * mp.log(mp.cosh(t))), [0, 1]))
    est = laplace_estimate(1.0, 2.0, 1.0, 1.0, 0.0, x)
    assert abs(ref / est - 1) < 0.01
    with pytest.raises(DomainError):
        laplace_estimate(1.0, 2.0, 1.0, 1.0, 0.0, -1.0)
