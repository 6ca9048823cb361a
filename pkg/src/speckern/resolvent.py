"""Resolvent kernel G(z, w; s) of Delta + s(s - 2 rho0) and its s = 0 data.

Three independent evaluations are provided:

* the Pochhammer-weighted series in K(z, w; s + 2k),
* the eigenfunction expansion sum_j psi_j(z) conj psi_j(w) / (mu + lambda_j),
  mu = s(s - 2 rho0), made absolutely convergent by the Abel factor
  exp(-eps (mu + lambda_j)),
* the Laplace transform of the heat kernel in t.

The Abel-summed expansion equals int_eps^inf K_heat(t) e^(-mu t) dt, so it
differs from G only by the heat kernel on [0, eps], which is of size
exp(-d^2 / 4 eps) away from the diagonal.  Choosing eps from the distance
therefore needs no extrapolation in eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import KernelValue
from .errors import CoincidenceError, DomainError, FitUnstable, SpectralPole
from .kernels import ensure_cutoff, heat_many, numeric_moment, tail_bound
from .kseries import KFunctionContext, ladder_series, point_distance
from .quadrature import quad
from .specfun import log_gamma

_EPS = np.finfo(float).eps
SPECTRAL_MODE_LIMIT = 400_000


def shift_parameter(s, rho0: float) -> complex:
    """mu = s (s - 2 rho0), so that (s - rho0)^2 + t_j^2 = mu + lambda_j."""
    s = complex(s)
    return s * (s - 2.0 * rho0)


# -- the K series ----------------------------------------------------------------

def g_series_coefficients(s: complex, rho0: float, kmax: int) -> np.ndarray:
    """Prefactor times (s/2)_k (s/2 + 1/2)_k / (k! (s + 1 - rho0)_k), k = 0..kmax."""
    s = complex(s)
    k = np.arange(kmax)
    ratio = (s / 2 + k) * (s / 2 + 0.5 + k) / ((k + 1) * (s + 1 - rho0 + k))
    pre = np.exp((-s - 1 + rho0) * math.log(2.0) + log_gamma(s) - log_gamma(s + 1 - rho0))
    return complex(pre) * np.concatenate([[1.0], np.cumprod(ratio)])


def _g_series(ctx: KFunctionContext, z, w, s) -> KernelValue:
    s = complex(s)
    val, err = ladder_series(ctx, z, w, s, lambda km: g_series_coefficients(s, ctx.rho0, km), -2.0)
    return KernelValue(val, err)


def g_series_value(ctx: KFunctionContext, z, w, s) -> KernelValue:
    """G(z, w; s) from its series in K(z, w; s + 2k).

    The series is the classical one for Re(s) > 2 rho0.  Off the diagonal it
    converges geometrically for every s, so it is also summed there, which
    continues G meromorphically; only the poles of Gamma(s) in the
    prefactor are refused.
    """
    s = complex(s)
    if s.imag == 0 and s.real <= 0 and abs(s.real - round(s.real)) < 1e-12:
        raise DomainError("the G series prefactor has a pole at s = 0, -1, -2, ...")
    return _g_series(ctx, z, w, s)


# -- the eigenfunction expansion --------------------------------------------------

def _abel_epsilon(ctx: KFunctionContext, z, w) -> float:
    """eps with exp(-d^2/4 eps) below the tolerance (0 for the toy spectrum)."""
    spec = ctx.spectrum
    if spec.complete:
        return 0.0
    d = point_distance(spec, z, w)
    if d < 1e-12:
        raise CoincidenceError("the resolvent kernel is singular at z = w")
    return d * d / (4.0 * (math.log(1.0 / ctx.ctrl.tol) + 3.0))


def _abel_bound(spec, eps: float, mu: complex):
    """Tail bound of sum |exp(-eps(mu + lambda)) / (mu + lambda)|."""
    amu = abs(mu)
    scale = math.exp(-eps * mu.real)

    def m(lam):
        lam = np.asarray(lam, dtype=float)
        return scale * np.exp(-eps * lam) / np.maximum(lam - amu, 1e-300)

    def bound(L):
        if L <= 2 * amu + 1.0:
            return math.inf
        return tail_bound(spec, L, lambda x: float(m(np.array([x]))[0]),
                          lambda x: numeric_moment(spec, m, x))
    return bound


def _abel_sum(ctx: KFunctionContext, z, w, mu: complex, eps: float, drop_zero: bool):
    """sum_j A_j exp(-eps(mu + lambda_j)) / (mu + lambda_j) with tail control."""
    spec = ctx.spectrum
    bound = _abel_bound(spec, eps, mu)
    # scale of the result: the nearest denominators dominate
    target = ctx.ctrl.tol * 1e-2 / max(spec.vol, 1e-300)
    spec = ensure_cutoff(spec, bound, target, ctx.ctrl)
    levels, A = spec.pair_coefficients([(z, w)])
    den = mu + levels
    if drop_zero:
        keep = levels > 0
        levels, A, den = levels[keep], A[:, keep], den[keep]
    near = np.abs(den) <= 1e-12 * np.maximum(np.abs(levels), 1.0)
    if near.any():
        j = int(np.flatnonzero(near)[0])
        raise SpectralPole(f"s(s - 2 rho0) = -lambda for the level lambda = {levels[j]:.15g}")
    wts = np.exp(-eps * den) / den
    val = complex(A[0] @ wts)
    err = bound(spec.cutoff) + 8 * _EPS * float(np.abs(A[0]) @ np.abs(wts))
    return val, err


def g_spectral_value(ctx: KFunctionContext, z, w, s) -> KernelValue:
    """sum_j psi_j(z) conj psi_j(w) / ((s - rho0)^2 + t_j^2), Abel-summed."""
    mu = shift_parameter(s, ctx.rho0)
    eps = _abel_epsilon(ctx, z, w)
    val, err = _abel_sum(ctx, z, w, mu, eps, drop_zero=False)
    return KernelValue(val, err + ctx.ctrl.tol * abs(val))


# -- the heat-kernel transform ----------------------------------------------------

def _first_positive_level(ctx: KFunctionContext) -> float:
    levels = ctx.spectrum.levels[0]
    pos = levels[levels > 0]
    return float(pos[0]) if pos.size else math.inf


def _heat_transform(ctx: KFunctionContext, z, w, mu: complex):
    """int_0^inf (K_heat(t) - 1/vol) e^(-mu t) dt for Re(mu + lambda_1) > 0.

    The integral runs over log t on [t_min, t_max]: below t_min the heat
    kernel itself is negligible (only -1/vol remains, integrated exactly),
    beyond t_max the nonconstant modes have decayed.
    """
    spec = ctx.spectrum
    vol = spec.vol
    lam1 = _first_positive_level(ctx)
    if not math.isfinite(lam1):
        return 0j, 0.0
    if not (mu.real + lam1 > 0):
        raise DomainError("the heat transform needs Re(s(s - 2 rho0)) + lambda_1 > 0")
    d = point_distance(spec, z, w)
    if d < 1e-12:
        raise CoincidenceError("the heat transform diverges at z = w")
    L = math.log(1.0 / ctx.ctrl.tol) + 5.0
    t_min = d * d / (4.0 * (L + 5.0))
    # generous multiplicity allowance for the first few levels
    t_max = (L + 12.0) / (lam1 + mu.real)
    x0, x1 = math.log(t_min), math.log(t_max)

    def f(x):
        t = np.exp(x)
        k, _ = heat_many(spec, z, w, t, ctx.ctrl)
        return t * (k - 1.0 / vol) * np.exp(-mu * t)

    val, err = quad(f, x0, x1, epsabs=ctx.ctrl.tol * 1e-2 / vol, epsrel=ctx.ctrl.tol * 1e-2)
    if abs(mu * t_min) > 1e-8:
        head = -(1.0 - np.exp(-mu * t_min)) / (mu * vol)
    else:
        head = -t_min * (1.0 - mu * t_min / 2) / vol
    return complex(val + head), float(err)


def g_heat_integral(ctx: KFunctionContext, z, w, s) -> KernelValue:
    """int_0^inf K_heat(z, w; t) e^(-s(s - 2 rho0) t) dt.

    The constant mode is integrated in closed form, 1/(vol mu); the rest is
    a convergent integral whenever Re(mu) + lambda_1 > 0, which also covers
    points with Re(mu) <= 0 through that continuation.
    """
    mu = shift_parameter(s, ctx.rho0)
    if mu == 0:
        raise SpectralPole("s(s - 2 rho0) = 0 is the pole of the constant mode")
    zero = 1.0 / (mu * ctx.vol)
    rest, err = _heat_transform(ctx, z, w, mu)
    return KernelValue(zero + rest, err + 4 * _EPS * abs(zero))


# -- Green's function ---------------------------------------------------------------

def green_function(ctx: KFunctionContext, z, w, method: str = "auto") -> KernelValue:
    """sum_{lambda_j > 0} psi_j(z) conj psi_j(w) / lambda_j.

    ``method`` is "spectral" (Abel-summed expansion), "heat" (the heat
    transform at mu = 0) or "auto", which prefers the expansion unless the
    points are so close that it would need too many modes.
    """
    spec = ctx.spectrum
    if spec.complete:
        return KernelValue(0j, 0.0)
    d = point_distance(spec, z, w)
    if d < 1e-12:
        raise CoincidenceError("Green's function is singular at z = w")
    if method == "auto":
        eps = _abel_epsilon(ctx, z, w)
        L = (math.log(1.0 / ctx.ctrl.tol) + 10.0) / eps
        n = spec.geometry.N
        modes = spec.weyl_density() * L ** n
        method = "spectral" if modes < SPECTRAL_MODE_LIMIT else "heat"
    if method == "spectral":
        eps = _abel_epsilon(ctx, z, w)
        val, err = _abel_sum(ctx, z, w, 0j, eps, drop_zero=True)
        # int_0^eps (K_heat - 1/vol) dt = -eps/vol up to exp(-d^2/4 eps)
        val -= eps / spec.vol
        return KernelValue(val, err + ctx.ctrl.tol * abs(val))
    if method == "heat":
        val, err = _heat_transform(ctx, z, w, 0j)
        return KernelValue(val, err)
    raise ValueError(f"unknown method {method!r}")


def g_resolvent_residual(ctx: KFunctionContext, z, w, s) -> float:
    """|(Delta + mu) G(s)| at z != w, applying Delta to each mode.

    (Delta + mu) multiplies the j-th term by mu + lambda_j, so the Abel sum
    becomes the heat kernel at t = eps times exp(-eps mu), which is
    exp(-d^2/4 eps)-small; the truncation bound is reported instead of a
    bare zero.
    """
    mu = shift_parameter(s, ctx.rho0)
    eps = _abel_epsilon(ctx, z, w)
    spec = ctx.spectrum
    bound = _abel_bound(spec, eps, mu)
    spec = ensure_cutoff(spec, lambda L: bound(L) * max(L, 1.0) * 2.0,
                         ctx.ctrl.tol * 1e-2 / spec.vol, ctx.ctrl)
    levels, A = spec.pair_coefficients([(z, w)])
    return float(abs(A[0] @ np.exp(-eps * (mu + levels))))


# -- Laurent data at s = 0 ------------------------------------------------------------

@dataclass(frozen=True)
class LaurentExpansion:
    """Coefficients of a_m2/s^2 + a_m1/s + a_0 + a_1 s near s = 0."""

    a_m2: complex
    a_m1: complex
    a_0: complex
    a_1: complex
    fit_err: float

    def as_dict(self):
        return {"a_m2": self.a_m2, "a_m1": self.a_m1, "a_0": self.a_0,
                "a_1": self.a_1, "fit_err": self.fit_err}


def _circle_fit(evaluator, r: float, m: int) -> np.ndarray:
    """Least-squares coefficients of s^-2 .. s^1 from m points on |s| = r."""
    theta = 2 * np.pi * (np.arange(m) + 0.5) / m
    s = r * np.exp(1j * theta)
    vals = np.array([complex(getattr(v, "value", v)) for v in map(evaluator, s)])
    powers = np.arange(-2, 2)
    M = s[:, None] ** powers[None, :]
    coef, *_ = np.linalg.lstsq(M, vals, rcond=None)
    return coef


def laurent_at_zero(evaluator, radii, *, points: int = 32, target: float = 1e-6) -> LaurentExpansion:
    """Fit the Laurent coefficients of ``evaluator`` at s = 0 on circles.

    On equispaced points the fit is a discrete Fourier projection, so the
    neglected coefficients only alias in from orders +-``points`` away.
    The fit on the smallest radius is reported; ``fit_err`` is the largest
    disagreement with the other radii.
    """
    radii = sorted(float(r) for r in radii)
    if not radii or radii[0] <= 0:
        raise DomainError("radii must be positive")
    fits = [_circle_fit(evaluator, r, points) for r in radii]
    base = fits[0]
    err = 0.0
    for f in fits[1:]:
        err = max(err, float(np.abs(f - base).max()))
    if len(fits) == 1:
        err = float(np.abs(base).max()) * 1e3 * _EPS
    if err > 100 * target:
        raise FitUnstable(f"Laurent fits disagree by {err:.3e} across radii {radii}")
    return LaurentExpansion(*(complex(c) for c in base), fit_err=err)
