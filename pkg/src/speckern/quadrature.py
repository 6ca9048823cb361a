"""Adaptive Gauss-Kronrod quadrature for complex and vector-valued integrands.

The integrator works on batches of intervals so that one call to the
integrand evaluates every pending node at once; integrands must therefore
accept a 1-D array of abscissae and return either an array of the same
length or an array of shape ``(len(x), m)``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NonConvergence

# Kronrod 15-point abscissae/weights with the embedded 7-point Gauss rule.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])  # 15 nodes on [-1, 1]
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5]] = _WG[:3]
_W7[[13, 11, 9]] = _WG[:3]
_W7[7] = _WG[3]

_EPS = np.finfo(float).eps


def _gk15(f, a, b):
    """Apply the 15/7 rule to every interval ``[a_i, b_i]``."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = (c[:, None] + h[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x))
    if fx.shape[0] != x.shape[0]:
        raise ValueError("integrand must return one row per abscissa")
    vector = fx.ndim > 1
    fx = fx.reshape(a.size, 15, -1)
    k15 = np.einsum("nkm,k->nm", fx, _W15) * h[:, None]
    g7 = np.einsum("nkm,k->nm", fx, _W7) * h[:, None]
    absint = (np.einsum("nkm,k->nm", np.abs(fx), _W15) * np.abs(h)[:, None]).max(axis=1)
    diff = np.abs(k15 - g7).max(axis=1)
    if not vector:
        k15 = k15[:, 0]
    return k15, diff, absint


def quad(f, a: float, b: float, *, epsabs: float = 0.0, epsrel: float = 1e-12,
         max_rounds: int = 60, max_intervals: int = 200_000, raise_on_fail: bool = False):
    """Integrate ``f`` over ``[a, b]`` by globally adaptive bisection.

    Returns ``(value, err)`` where ``err`` is the Kronrod-minus-Gauss error
    estimate summed over the final partition plus a rounding allowance.
    ``value`` is complex (or a complex/real array for vector integrands).
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("quad needs a finite interval; map infinite ranges first")
    if a == b:
        probe = np.asarray(f(np.array([a])))
        return np.zeros(probe.shape[1:], dtype=probe.dtype) if probe.ndim > 1 else 0.0, 0.0

    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0

    done_val = None
    done_err = 0.0
    done_round = 0.0
    pa = np.array([a], dtype=float)
    pb = np.array([b], dtype=float)
    pv, pe, pabs = _gk15(f, pa, pb)
    for _ in range(max_rounds):
        total = pv.sum(axis=0) if done_val is None else done_val + pv.sum(axis=0)
        err = done_err + pe.sum()
        rounding = done_round + 50 * _EPS * pabs.sum()
        target = max(epsabs, epsrel * float(np.max(np.abs(total))))
        if err <= target or err <= rounding:
            return sign * total, err + rounding
        if pv.shape[0] > max_intervals:
            break
        # split the intervals carrying the error; retire the rest
        share = target / max(pv.shape[0], 1)
        width_ok = (pb - pa) > 64 * _EPS * np.maximum(np.abs(pa), np.abs(pb))
        split = (pe > 0.5 * share) & width_ok
        if not split.any():
            split = (pe == pe.max()) & width_ok
            if not split.any():
                break
        keep = ~split
        if keep.any():
            kept = pv[keep].sum(axis=0)
            done_val = kept if done_val is None else done_val + kept
            done_err += pe[keep].sum()
            done_round += 50 * _EPS * pabs[keep].sum()
        mid = 0.5 * (pa[split] + pb[split])
        na = np.concatenate([pa[split], mid])
        nb = np.concatenate([mid, pb[split]])
        pa, pb = na, nb
        pv, pe, pabs = _gk15(f, pa, pb)

    total = pv.sum(axis=0) if done_val is None else done_val + pv.sum(axis=0)
    err = done_err + pe.sum() + done_round + 50 * _EPS * pabs.sum()
    if raise_on_fail:
        raise NonConvergence(f"quadrature stalled with error estimate {err:.3e}")
    return sign * total, err


def gauss_legendre(n: int, a: float, b: float):
    """Fixed ``n``-point Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(n)
    h = 0.5 * (b - a)
    return 0.5 * (a + b) + h * x, h * w


def sum_series(terms, *, tol: float = 1e-12, exponent: complex | None = None):
    """Sum a slowly or geometrically converging series from its first terms.

    Geometric tails (last-block ratio clearly below one) are left as an
    error estimate.  Otherwise the terms are treated as C k^p (1 + O(1/k))
    with p = ``exponent`` (estimated if not given, and required to have
    Re p < -1): the Euler-Maclaurin tail t_K (K/(-p-1) - 1/2) is added and
    Richardson steps over K/4, K/2, K remove the next two remainders.

    Returns (value, err, converged).
    """
    t = np.asarray(terms, dtype=complex)
    K = t.size
    S = np.cumsum(t)
    a = np.abs(t)
    total = complex(S[-1])
    rounding = 8 * _EPS * float(a.sum())
    if K < 8:
        tail = float(a[-1])
        return total, tail + rounding, tail <= tol * abs(total)
    m = max(1, K // 8)
    if a[-1] == 0.0:
        return total, rounding, True
    ratio = (a[-1] / a[-1 - m]) ** (1.0 / m) if a[-1 - m] > 0 else 0.0
    if exponent is None and ratio < 1.0 - 4.0 / K:
        tail = float(a[-1] * ratio / (1.0 - ratio))
        return total, tail + rounding, tail <= tol * max(abs(total), 1e-300)
    if exponent is None:
        h = K // 2
        exponent = math.log(a[-1] / a[h - 1]) / math.log(K / h)
    p = complex(exponent)
    if p.real >= -1:
        return total, math.inf, False

    def corrected(n):
        # partial sum of the first n terms plus the leading tail estimate
        return S[n - 1] + t[n - 1] * ((n - 1) / (-p - 1) - 0.5)

    # Richardson levels remove the n^p, n^(p-1), n^(p-2) remainders in turn;
    # the last change estimates the error of the final level
    c = [corrected(K // 8), corrected(K // 4), corrected(K // 2), corrected(K)]
    prev = c[-1]
    for level in range(3):
        f = 2.0 ** (p - level)
        prev = c[-1]
        c = [(c[i + 1] - f * c[i]) / (1 - f) for i in range(len(c) - 1)]
    best = c[0]
    # cumulative sums of K terms lose about sqrt(K) ulps
    err = float(abs(best - prev)) + math.sqrt(K) * _EPS * float(a.sum())
    return complex(best), err, err <= tol * max(abs(best), 1e-300)
