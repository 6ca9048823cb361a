"""Eisenstein-type series E(z, w; s) built from K(z, w; s + 2k).

E(s) = Gamma((s + 1 - 2 rho0)/2) / Gamma(s/2) * sum_k (s/2)_k / k! K(s + 2k)

mirrors the expansion sinh(u)^-s = sum_k (s/2)_k / k! cosh(u)^-(s + 2k).
Near s = 0 it is compared with the resolvent series through
D(s) = E(s) - c(s) G(s), whose k = 0 terms cancel.
"""

from __future__ import annotations

import math

import numpy as np

from .control import KernelValue
from .errors import DomainError
from .kseries import KFunctionContext, ladder_series
from .resolvent import LaurentExpansion, _g_series, g_series_coefficients, laurent_at_zero
from .specfun import log_gamma, rgamma

_EPS = np.finfo(float).eps


def e_prefactor(s, rho0: float) -> complex:
    """Gamma((s + 1 - 2 rho0)/2) / Gamma(s/2) (zero where Gamma(s/2) has a pole)."""
    s = complex(s)
    a = 0.5 * (s + 1 - 2 * rho0)
    if a.imag == 0 and a.real <= 0 and a.real == round(a.real):
        raise DomainError(f"Gamma((s + 1 - 2 rho0)/2) has a pole at s = {s}")
    return complex(np.exp(log_gamma(a)) * rgamma(0.5 * s))


def binomial_coefficients(s: complex, kmax: int) -> np.ndarray:
    """(s/2)_k / k! for k = 0..kmax."""
    k = np.arange(kmax)
    return np.concatenate([[1.0 + 0j], np.cumprod((complex(s) / 2 + k) / (k + 1))])


def _tail_exponent(s: complex, rho0: float) -> complex:
    # terms of the series behave like k^(s/2 - rho0 - 3/2) when nothing decays
    return s / 2 - rho0 - 1.5


def _check_series_domain(ctx: KFunctionContext, s: complex):
    if ctx.spectrum.complete and not s.real < 1 + 2 * ctx.rho0:
        raise DomainError(f"without off-diagonal decay the E series needs Re(s) < {1 + 2 * ctx.rho0:g}")


def e_value(ctx: KFunctionContext, z, w, s, *, laplacian: bool = False) -> KernelValue:
    """E(z, w; s) by direct summation of the K series.

    Off the diagonal each K(s + 2k) decays geometrically in k, so the series
    converges for every s away from the poles of its terms.  For a spectrum
    without that decay (the toy spectrum) the terms fall off like
    k^(s/2 - rho0 - 3/2) and Re(s) < 1 + 2 rho0 is required.
    """
    s = complex(s)
    _check_series_domain(ctx, s)
    pre = e_prefactor(s, ctx.rho0)
    val, err = ladder_series(ctx, z, w, s, lambda km: pre * binomial_coefficients(s, km),
                             _tail_exponent(s, ctx.rho0), laplacian=laplacian)
    return KernelValue(val, err)


def e_ddeq_residual(ctx: KFunctionContext, z, w, s) -> float:
    """|(Delta + s(s - 2 rho0)) E(s) + s^2 E(s + 2)|."""
    s = complex(s)
    e0 = e_value(ctx, z, w, s)
    lap = e_value(ctx, z, w, s, laplacian=True)
    e2 = e_value(ctx, z, w, s + 2)
    return float(abs(lap.value + s * (s - 2 * ctx.rho0) * e0.value + s * s * e2.value))


def g_factor(s, rho0: float) -> complex:
    """2^(s+1-rho0) Gamma(s+1-rho0) Gamma((s+1-2 rho0)/2) / (Gamma(s) Gamma(s/2))."""
    s = complex(s)
    lg = ((s + 1 - rho0) * math.log(2.0) + log_gamma(s + 1 - rho0)
          + log_gamma(0.5 * (s + 1 - 2 * rho0)))
    return complex(np.exp(lg) * rgamma(s) * rgamma(0.5 * s))


def d_coefficients(s: complex, rho0: float, kmax: int) -> np.ndarray:
    """Termwise coefficients of D(s); the k = 0 term vanishes identically."""
    s = complex(s)
    c = e_prefactor(s, rho0) * binomial_coefficients(s, kmax) * (1.0 - _pochhammer_ratio(s, rho0, kmax))
    c[0] = 0.0
    return c


def _pochhammer_ratio(s: complex, rho0: float, kmax: int) -> np.ndarray:
    k = np.arange(kmax)
    steps = ((s + 1) / 2 + k) / (s + 1 - rho0 + k)
    return np.concatenate([[1.0 + 0j], np.cumprod(steps)])


def d_difference(ctx: KFunctionContext, z, w, s, method: str = "termwise") -> KernelValue:
    """D(s) = E(s) - g_factor(s) G(s).

    ``termwise`` sums the combined coefficients, so the cancelling k = 0
    terms never appear and D keeps full relative accuracy near s = 0;
    ``direct`` subtracts the two evaluated series.
    """
    s = complex(s)
    _check_series_domain(ctx, s)
    r0 = ctx.rho0
    if method == "termwise":
        val, err = ladder_series(ctx, z, w, s, lambda km: d_coefficients(s, r0, km),
                                 _tail_exponent(s, r0))
        return KernelValue(val, err)
    if method == "direct":
        e = e_value(ctx, z, w, s)
        fac = g_factor(s, r0)
        g = _g_series(ctx, z, w, s)
        return KernelValue(e.value - fac * g.value, e.err + abs(fac) * g.err)
    raise ValueError(f"unknown method {method!r}")


def k0_cancellation(s, rho0: float) -> float:
    """|E-series k = 0 coefficient - g_factor * G-series k = 0 coefficient| (relative)."""
    s = complex(s)
    e0 = e_prefactor(s, rho0)
    g0 = g_factor(s, rho0) * g_series_coefficients(s, rho0, 0)[0]
    return float(abs(e0 - g0) / max(abs(e0), 1e-300))


def e_expansion_at_zero(ctx: KFunctionContext, z, w, radii=(0.05, 0.1),
                        *, target: float = 1e-6) -> LaurentExpansion:
    """Taylor data of E at s = 0 for rho0 = 1/2 by circle fitting.

    a_0 is b_0 and a_1 the s-coefficient; a_m2 and a_m1 come out at the
    noise level because E is regular there.
    """
    if ctx.rho0 != 0.5:
        raise DomainError("the expansion at s = 0 is provided for rho0 = 1/2")
    return laurent_at_zero(lambda s: e_value(ctx, z, w, s), radii, points=16, target=target)


def e_limit_at_zero(ctx: KFunctionContext, z, w, *, method: str = "circle",
                    nodes=(-0.2, -0.1, -0.05), radii=(0.1, 0.2)) -> KernelValue:
    """E(0) for a rho0 at which E is regular at s = 0.

    ``circle`` takes the constant Laurent coefficient from circle fits;
    ``nodes`` extrapolates a polynomial through real s < 0, with the error
    estimated by dropping the farthest node.
    """
    if method == "circle":
        fit = laurent_at_zero(lambda s: e_value(ctx, z, w, s), radii, points=16)
        return KernelValue(fit.a_0, fit.fit_err)
    if method != "nodes":
        raise ValueError(f"unknown method {method!r}")
    nodes = np.asarray(nodes, dtype=float)
    vals = np.array([e_value(ctx, z, w, s).value for s in nodes])

    def extrapolate(x, y):
        # Lagrange polynomial through (x, y) evaluated at 0
        total = 0j
        for i in range(len(x)):
            li = np.prod([(0 - x[j]) / (x[i] - x[j]) for j in range(len(x)) if j != i])
            total += y[i] * li
        return total

    full = extrapolate(nodes, vals)
    order = np.argsort(np.abs(nodes))
    part = extrapolate(nodes[order[:-1]], vals[order[:-1]])
    return KernelValue(complex(full), float(abs(full - part)))


def sinh_cosh_identity_check(s, u: float, K: int) -> float:
    """|sinh(u)^-s - sum_{k<=K} (s/2)_k / k! cosh(u)^-(s + 2k)|."""
    s = complex(s)
    u = float(u)
    if not u > 0:
        raise DomainError("the expansion needs u > 0")
    c = binomial_coefficients(s, int(K))
    terms = c * np.exp(-(s + 2 * np.arange(K + 1)) * math.log(math.cosh(u)))
    lhs = np.exp(-s * math.log(math.sinh(u)))
    return float(abs(lhs - terms.sum()))


def sinh_cosh_adaptive(s, u: float, tol: float = 1e-12, kmax: int = 100_000):
    """Smallest K (doubling) whose geometric tail estimate is below ``tol``.

    Returns (K, deviation at K).
    """
    s = complex(s)
    x = 1.0 / math.cosh(u) ** 2
    K = 8
    while True:
        c = abs(binomial_coefficients(s, K)[-1]) * x ** K * math.cosh(u) ** (-s.real)
        growth = x * max(1.0, (K + 1 + abs(s)) / (K + 1))
        tail = c * growth / max(1.0 - growth, 1e-300)
        if tail < tol or K >= kmax:
            return K, sinh_cosh_identity_check(s, u, K)
        K *= 2
