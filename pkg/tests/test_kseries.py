import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import loggamma

from speckern.errors import CoincidenceError, DomainError, PoleProximity
from speckern.kseries import (KFunctionContext, k_continued, k_ddeq_residual, k_ladder, k_value,
                              k_zero_mode, ladder_series, point_distance)
from speckern.spectra import (FOUR_PI2, build_cp1_spectrum, build_torus_spectrum, toy_spectrum)


def k_oracle(spec, rho0, z, w, s):
    """Direct sum of 2^(nu-1) Gamma((nu - it)/2) Gamma((nu + it)/2) / Gamma(s) over a large spectrum."""
    big = build_torus_spectrum(spec.geometry, FOUR_PI2 * 1600)
    levels, A = big.pair_coefficients([(z, w)])
    nu = s - rho0
    # principal sqrt of a negative number is already on the positive imaginary axis
    t = np.sqrt((levels - rho0 ** 2).astype(complex))
    lw = (nu - 1) * math.log(2) + loggamma((nu - 1j * t) / 2) + loggamma((nu + 1j * t) / 2) - loggamma(s)
    return complex(A[0] @ np.exp(lw))


@pytest.mark.parametrize("rho0", [0.0, 0.5])
@pytest.mark.parametrize("s", [3.0, 2.2 + 1.5j, 5.0])
def test_k_value_against_direct_sum(square_torus, rho0, s):
    ctx = KFunctionContext(square_torus, rho0)
    z, w = np.array([0.3, 0.4]), np.zeros(2)
    v = k_value(ctx, z, w, s)
    ref = k_oracle(square_torus, rho0, z, w, s)
    assert abs(v.value - ref) <= 1e-10 * abs(ref)
    assert v.err <= 1e-9 * abs(ref)


@pytest.mark.parametrize("rho0", [0.0, 0.3, 0.5])
def test_toy_k_is_zero_mode(rho0):
    # with t_0 = i rho0 the Gamma factors become Gamma(s/2) Gamma(s/2 - rho0)
    ctx = KFunctionContext(toy_spectrum(2.0), rho0)
    for s in (2.0, 3.5 + 1j, 1.2):
        ref = complex(2 ** (s - rho0 - 1) * mp.gamma(s / 2) * mp.gamma(s / 2 - rho0) / mp.gamma(s)) / 2.0
        assert k_value(ctx, 0, 0, s).value == pytest.approx(ref, rel=1e-13)
        assert k_zero_mode(ctx, s) == pytest.approx(ref, rel=1e-13)


def test_ladder_rungs_are_shifted_k_values(ctx_half):
    z, w = np.array([0.1, 0.35]), np.zeros(2)
    s = 1.7 + 0.4j
    vals, err = k_ladder(ctx_half, [(z, w)], s, 5)
    for k in range(6):
        assert vals[0, k] == pytest.approx(k_value(ctx_half, z, w, s + 2 * k).value, rel=1e-10)


@pytest.mark.parametrize("s,n", [(0.6, 1), (-0.3 + 0.7j, 1), (-1.4 + 0.2j, 2)])
def test_continuation_agrees_with_ladder_in_strip(ctx_half, s, n):
    z, w = np.array([0.3, 0.4]), np.zeros(2)
    a = k_continued(ctx_half, z, w, s, n).value
    b = k_ladder(ctx_half, [(z, w)], s, 0)[0][0, 0]
    assert a == pytest.approx(b, rel=1e-9)


def test_continuation_matches_k_value_where_both_exist(ctx0):
    z, w = np.array([0.3, 0.4]), np.zeros(2)
    for n in (1, 2, 3):
        assert k_continued(ctx0, z, w, 2.5, n).value == pytest.approx(k_value(ctx0, z, w, 2.5).value, rel=1e-10)


@settings(max_examples=12, deadline=None)
@given(st.floats(1.1, 5.0), st.floats(-3.0, 3.0), st.floats(0.05, 0.95), st.floats(0.05, 0.95),
       st.sampled_from([0.0, 0.5]))
def test_difference_differential_equation(square_torus, re, im, x, y, rho0):
    ctx = KFunctionContext(square_torus, rho0)
    s = complex(re, im)
    z, w = np.array([x, y]), np.zeros(2)
    k = abs(k_value(ctx, z, w, s).value)
    assert k_ddeq_residual(ctx, z, w, s) <= 1e-8 * k


def test_k_on_cp1_is_finite_and_symmetric():
    spec = build_cp1_spectrum(40)
    ctx = KFunctionContext(spec, 0.5)
    a = k_value(ctx, 0.4 + 0.1j, 0.0, 3.0).value
    b = k_value(ctx, 0.0, 0.4 + 0.1j, 3.0).value
    assert a == pytest.approx(b, rel=1e-12)
    assert k_ddeq_residual(ctx, 0.4 + 0.1j, 0.0, 3.0) <= 1e-8 * abs(a)


def test_domain_and_pole_errors(ctx_half):
    z, w = np.array([0.3, 0.4]), np.zeros(2)
    with pytest.raises(DomainError):
        k_value(ctx_half, z, w, 0.9)
    with pytest.raises(DomainError):
        k_continued(ctx_half, z, w, -2.0, 1)
    # rho0 - i t_0 - 0 = 0.5 - i (i/2) = 1 is a pole of the constant-mode weight
    with pytest.raises(PoleProximity):
        k_ladder(ctx_half, [(z, w)], 1.0 + 1e-5, 0)
    with pytest.raises(CoincidenceError):
        ladder_series(ctx_half, z, z, 0.5, lambda km: np.ones(km + 1), -2.0)


def test_point_distance(square_torus):
    assert point_distance(square_torus, np.array([0.9, 0.1]), np.zeros(2)) == pytest.approx(math.hypot(0.1, 0.1))
    assert point_distance(toy_spectrum(), 0, 0) == math.inf
