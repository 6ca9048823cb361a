import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speckern.errors import (AdmissibilityError, BranchError, DomainError, MethodMismatch,
                             NonConvergence)
from speckern.kernels import (heat_kernel, heat_many, poisson_kernel, rescaled_poisson_integral,
                              wave_apply)
from speckern.kseries import KFunctionContext, k_value
from speckern.specfun import TestFunction, gamma
from speckern.spectra import (FOUR_PI2, RhoParameter, TorusGeometry, build_cp1_spectrum,
                              build_torus_spectrum, toy_spectrum)


def image_heat_oracle(geom, d, t, R=12):
    """Periodised Gaussian (4 pi t)^-1 sum_v exp(-|d - v|^2 / 4t) on a 2-torus."""
    n = np.arange(-R, R + 1)
    a, b = np.meshgrid(n, n, indexing="ij")
    v = np.stack([a.ravel(), b.ravel()], axis=1) @ geom.real_basis.T
    r2 = ((d - v) ** 2).sum(axis=1)
    return float(np.exp(-r2 / (4 * t)).sum() / (4 * math.pi * t))


def zonal_heat(r, t, lmax=200):
    ell = np.arange(lmax + 1)
    c = np.exp(-4 * ell * (ell + 1) * t) * (2 * ell + 1) / math.pi
    return float(np.polynomial.legendre.legval(math.cos(2 * r), c))


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from([0.03, 0.1, 0.4, 1.5]))
def test_heat_kernel_matches_image_oracle(a, b, t):
    geom = TorusGeometry.from_tau(0.3 + 1.2j)
    spec = build_torus_spectrum(geom, FOUR_PI2 * 10)
    d = geom.real_basis @ np.array([a, b])
    ref = image_heat_oracle(geom, d, t)
    for method in ("spectral", "images", "auto"):
        v = heat_kernel(spec, d, np.zeros(2), t, method=method)
        assert abs(v.value - ref) <= 1e-10 * ref
        assert abs(v.value.imag) < 1e-12 * ref


def test_heat_kernel_error_estimate_covers_truncation(square_torus):
    small = square_torus.restrict(FOUR_PI2 * 3)
    z, w = np.array([0.3, 0.4]), np.zeros(2)
    v = heat_kernel(small, z, w, 0.05, method="spectral")
    ref = image_heat_oracle(small.geometry, z, 0.05)
    assert abs(v.value - ref) <= v.err


def test_heat_semigroup_and_symmetry(square_torus):
    z, w = np.array([0.1, 0.7]), np.array([0.45, 0.2])
    kzw = heat_kernel(square_torus, z, w, 0.2).value
    kwz = heat_kernel(square_torus, w, z, 0.2).value
    assert kzw == pytest.approx(kwz.conjugate(), rel=1e-13)
    # integral over the torus equals one
    n = 32
    g = (np.arange(n) + 0.5) / n
    tot = np.mean([heat_many(square_torus, np.array([x, y]), w, [0.07])[0][0] for x in g for y in g])
    assert tot.real == pytest.approx(1.0, rel=1e-10)


def test_heat_many_equals_scalar_calls(square_torus):
    z, w = np.array([0.3, 0.1]), np.zeros(2)
    ts = [0.01, 0.05, 0.3, 2.0]
    vals, errs = heat_many(square_torus, z, w, ts)
    for t, v in zip(ts, vals):
        assert v == pytest.approx(heat_kernel(square_torus, z, w, t).value, rel=1e-11)


@pytest.mark.parametrize("r,t", [(0.7, 0.5), (0.2, 0.05), (1.3, 0.01)])
def test_cp1_heat_kernel_is_zonal_sum(r, t):
    spec = build_cp1_spectrum(30)
    v = heat_kernel(spec, math.tan(r), 0.0, t)
    assert v.value.real == pytest.approx(zonal_heat(r, t), rel=1e-9)


def test_heat_kernel_errors(square_torus):
    with pytest.raises(DomainError):
        heat_kernel(square_torus, 0.1 + 0.1j, 0, -1.0)
    with pytest.raises(MethodMismatch):
        heat_kernel(build_cp1_spectrum(5), 0.1, 0.0, 0.1, method="images")
    with pytest.raises(DomainError):
        heat_kernel(square_torus, np.zeros(3), np.zeros(2), 0.1)


# -- Poisson kernel -------------------------------------------------------------

def image_poisson_oracle(geom, d, u, R=400):
    """Half-space Poisson kernel summed over images with |v| <= R plus the continuum tail."""
    n = np.arange(-R, R + 1)
    a, b = np.meshgrid(n, n, indexing="ij")
    v = np.stack([a.ravel(), b.ravel()], axis=1).astype(float) @ geom.real_basis.T
    r2 = ((d - v) ** 2).sum(axis=1)
    inside = r2 <= R * R
    direct = (u / (2 * math.pi) / (u * u + r2[inside]) ** 1.5).sum()
    # the region outside the disc of radius R: (1/covol) int 2 pi rho P d rho
    tail = u / math.sqrt(u * u + R * R) / geom.covolume
    return float(direct + tail)


@pytest.mark.parametrize("u", [0.1, 0.35])
def test_poisson_images_spectral_and_integral_agree(square_torus, u):
    z, w = np.array([0.3, 0.45]), np.zeros(2)
    sp = poisson_kernel(square_torus, None, 0.0, z, w, u, method="spectral").value
    im = poisson_kernel(square_torus, None, 0.0, z, w, u, method="images").value
    it = poisson_kernel(square_torus, None, 0.0, z, w, u, method="integral").value
    assert im == pytest.approx(sp, rel=1e-9)
    assert it == pytest.approx(sp, rel=1e-8)
    assert sp.real == pytest.approx(image_poisson_oracle(square_torus.geometry, z, u), rel=1e-4)


def test_poisson_shifted_spectral_vs_integral(square_torus):
    z, w = np.array([0.2, 0.1]), np.zeros(2)
    Z = 2.5
    sp = poisson_kernel(square_torus, None, Z, z, w, 0.4, method="spectral").value
    it = poisson_kernel(square_torus, None, Z, z, w, 0.4, method="integral").value
    assert it == pytest.approx(sp, rel=1e-8)
    # constant mode contributes exp(-u sqrt(Z)) / vol, which the toy spectrum isolates
    toy = poisson_kernel(toy_spectrum(2.0), None, Z, 0, 0, 0.4).value
    assert toy == pytest.approx(math.exp(-0.4 * math.sqrt(Z)) / 2.0, rel=1e-15)


def test_poisson_continued_branch(square_torus):
    rho = RhoParameter(0.5)
    z, w = np.array([0.2, 0.3]), np.zeros(2)
    v = poisson_kernel(square_torus, rho, None, z, w, 0.3).value
    # the constant mode picks up the phase exp(-i u / 2) from t_0 = i/2
    spec = build_torus_spectrum(square_torus.geometry, FOUR_PI2 * 2500)
    levels, A = spec.pair_coefficients([(z, w)])
    ref = A[0] @ np.exp(-0.3 * rho.t_values(levels))
    assert v == pytest.approx(ref, rel=1e-8)
    with pytest.raises(BranchError):
        poisson_kernel(square_torus, None, -0.25, z, w, 0.3, method="spectral")


def test_rescaled_poisson(square_torus):
    z, w = np.array([0.2, 0.3]), np.zeros(2)
    c = 2.0
    a = rescaled_poisson_integral(square_torus, 1.0, z, w, 0.5, c).value
    b = poisson_kernel(square_torus, None, 1.0, z, w, 0.5 / math.sqrt(c), method="spectral").value
    assert a == pytest.approx(b, rel=1e-8)


def test_poisson_errors(square_torus):
    with pytest.raises(DomainError):
        poisson_kernel(square_torus, None, 0.0, 0.1j, 0, -0.2)
    with pytest.raises(MethodMismatch):
        poisson_kernel(square_torus, None, 1.0, 0.1j, 0, 0.2, method="images")


# -- wave distribution -----------------------------------------------------------

@pytest.mark.parametrize("rho0", [0.0, 0.5])
def test_wave_with_gaussian_is_heat_kernel(square_torus, rho0):
    alpha = 2.0
    z, w = np.array([0.3, 0.1]), np.zeros(2)
    rho = RhoParameter(rho0)
    v = wave_apply(square_torus, rho, z, w, TestFunction.gaussian(alpha), method="quadrature").value
    t = 1.0 / (4 * alpha)
    ref = math.sqrt(math.pi / alpha) * math.exp(rho0 ** 2 * t) * heat_kernel(square_torus, z, w, t).value
    assert v == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("rho0,s", [(0.0, 3.0), (0.5, 2.5), (0.5, 1.25)])
def test_wave_with_cosh_power_is_k_function(square_torus, rho0, s):
    z, w = np.array([0.3, 0.4]), np.zeros(2)
    nu = s - rho0
    v = wave_apply(square_torus, RhoParameter(rho0), z, w, TestFunction.cosh_power_fn(nu)).value
    k = k_value(KFunctionContext(square_torus, rho0), z, w, s).value
    assert k == pytest.approx(gamma(nu) / gamma(s) * v, rel=1e-10)


def test_wave_closed_and_quadrature_agree(square_torus):
    z, w = np.array([0.3, 0.4]), np.zeros(2)
    g = TestFunction.cosh_power_fn(4.0)
    rho = RhoParameter(0.5)
    a = wave_apply(square_torus, rho, z, w, g, method="closed").value
    b = wave_apply(square_torus, rho, z, w, g, method="quadrature").value
    assert a == pytest.approx(b, rel=1e-8)


def test_wave_admissibility():
    with pytest.raises(AdmissibilityError):
        wave_apply(toy_spectrum(), RhoParameter(2.0), 0, 0, TestFunction.cosh_power_fn(1.0))
    g = TestFunction(lambda u: np.exp(-u * u),
                     lambda U, k: math.sqrt(math.pi) * math.exp(k * k / 4) * math.erfc(U - k / 2),
                     decay_rate=math.inf, name="bare")
    with pytest.raises(NonConvergence):
        wave_apply(build_cp1_spectrum(5), RhoParameter(0.0), 0.1, 0.0, g)
    # on a complete spectrum no majorant is needed
    v = wave_apply(toy_spectrum(), RhoParameter(0.0), 0, 0, g).value
    assert v == pytest.approx(math.sqrt(math.pi), rel=1e-11)
