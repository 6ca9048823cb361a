"""The building block K(z, w; s) of the resolvent and Eisenstein series.

With nu = s - rho0 and t_j the spectral parameters,

    K(s) = Gamma(nu)/Gamma(s) sum_j H(t_j, cosh^-nu) psi_j(z) conj psi_j(w)
         = sum_j 2^(nu-1) Gamma((nu - i t_j)/2) Gamma((nu + i t_j)/2) / Gamma(s) ...

The second line is the meromorphic continuation in s.  Series in s + 2k
(:func:`k_ladder`) evaluate every rung from one table of level sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .control import DEFAULT_CONTROL, KernelValue, SeriesControl
from .errors import CoincidenceError, DomainError, NonConvergence, PoleProximity
from .kernels import ensure_cutoff, numeric_moment, tail_bound
from .specfun import cosh_coeff_continued, log_gamma, pochhammer, rgamma
from .quadrature import sum_series
from .spectra import CP1Geometry, RhoParameter, Spectrum

_EPS = np.finfo(float).eps
LOG2 = math.log(2.0)
POLE_RADIUS = 1e-3


@dataclass
class KFunctionContext:
    """A spectrum, the shift rho0 and the truncation policy."""

    spectrum: Spectrum
    rho: RhoParameter = field(default_factory=RhoParameter)
    ctrl: SeriesControl = DEFAULT_CONTROL
    pole_radius: float = POLE_RADIUS

    def __post_init__(self):
        if not isinstance(self.rho, RhoParameter):
            self.rho = RhoParameter(float(self.rho))

    @property
    def rho0(self) -> float:
        return self.rho.rho0

    @property
    def vol(self) -> float:
        return self.spectrum.vol


def log_weights(nu: np.ndarray, t: np.ndarray) -> np.ndarray:
    """log of 2^(nu-1) Gamma((nu - i t)/2) Gamma((nu + i t)/2), shape (len(nu), len(t))."""
    nu = np.atleast_1d(np.asarray(nu, dtype=complex))[:, None]
    t = np.atleast_1d(np.asarray(t, dtype=complex))[None, :]
    a = 0.5 * (nu - 1j * t)
    b = 0.5 * (nu + 1j * t)
    shape = np.broadcast(a, b).shape
    la = log_gamma(np.broadcast_to(a, shape).ravel()).reshape(shape)
    lb = log_gamma(np.broadcast_to(b, shape).ravel()).reshape(shape)
    return (nu - 1) * LOG2 + la + lb


def _check_poles(ctx: KFunctionContext, s: complex, levels, mmax: int):
    """Refuse s within the exclusion radius of rho0 +- i t_j - 2m, 0 <= m <= mmax."""
    t = ctx.rho.t_values(levels)
    r0 = ctx.rho0
    for m in range(mmax + 1):
        for sign in (1, -1):
            poles = r0 + sign * 1j * t - 2 * m
            dist = np.abs(s - poles)
            if dist.min() < ctx.pole_radius:
                j = int(dist.argmin())
                raise PoleProximity(f"s = {s} lies within {ctx.pole_radius:g} of the pole "
                                    f"{complex(poles[j])} (level {j}, m = {m})")


def _majorant(nu: complex, rho0: float, s0: complex):
    """Decreasing majorant of |weight(t)| in lambda = rho0^2 + t^2 (tail only).

    The weight is shifted to Re(nu + 2n) >= 1/2 through
    Gamma(nu)/Gamma(s) H(t, cosh^-nu) = Gamma(nu+2n)/(2^2n Gamma(s)) H(t, cosh^-(nu+2n))/Q_n,
    and |Gamma(a + iy)| decreasing in |y| gives the majorant.  Computed in
    logs so that large rungs do not overflow.
    """
    nu = complex(nu)
    n = 0
    while nu.real + 2 * n < 0.5:
        n += 1
    nun = nu + 2 * n
    a = 0.5 * nun.real
    shift = abs(nu.imag)
    log_pre = (nun.real - 1 - 2 * n) * LOG2 - float(np.real(log_gamma_or_inf(np.array([s0]))[0]))

    def m(lam):
        lam = np.asarray(lam, dtype=float)
        t = np.sqrt(np.maximum(lam - rho0 ** 2, 0.0))
        y = np.maximum(0.5 * (t - shift), 0.0)
        lg = 2.0 * np.real(log_gamma(a + 1j * np.atleast_1d(y).ravel())).reshape(np.shape(y))
        if n:
            lg = lg - 2 * n * np.log(np.maximum(y, 1e-300))
        return np.exp(log_pre + lg)

    return m


def ladder_bound(ctx: KFunctionContext, spec: Spectrum, s: complex, kmax: int):
    """Tail bound (as a function of the cutoff) covering every rung 0..kmax."""
    ms = [_majorant(s + 2 * k - ctx.rho0, ctx.rho0, s + 2 * k) for k in sorted({0, kmax})]
    shift = max(abs(s.imag), 1.0)

    def bound(L):
        if spec.complete:
            return 0.0
        if L - ctx.rho0 ** 2 <= (shift + 1.0) ** 2:
            return math.inf
        return max(tail_bound(spec, L, lambda x: float(m(np.array([x]))[0]),
                              lambda x: numeric_moment(spec, m, x)) for m in ms)
    return bound


def k_ladder(ctx: KFunctionContext, pairs, s, kmax: int, *, target: float | None = None,
             check_poles: bool = True, laplacian: bool = False):
    """K(z_p, w_p; s + 2k) for k = 0..kmax via the continued Gamma form.

    Returns (values of shape (len(pairs), kmax+1), absolute error bound).
    ``target`` is the absolute truncation error accepted per rung; by default
    ``ctrl.tol`` times the rung-0 magnitude.  With ``laplacian`` the level
    sums are weighted by lambda, giving Delta_z K instead.
    """
    s = complex(s)
    spec = ctx.spectrum
    for _ in range(3):
        levels, A = spec.pair_coefficients(pairs)
        if check_poles:
            _check_poles(ctx, s, levels, max(0, math.ceil((ctx.rho0 - s.real) / 2)) + 1)
        t = ctx.rho.t_values(levels)
        W = np.exp(ladder_log_weights(s, ctx.rho0, t, kmax))
        if laplacian:
            A = A * levels[None, :]
        vals = A @ W.T
        if spec.complete:
            rounding = 8 * _EPS * float((np.abs(A) @ np.abs(W).T).max())
            return vals, rounding
        bound = ladder_bound(ctx, spec, s, kmax)
        if laplacian:
            plain = bound
            bound = lambda L, plain=plain: 2.0 * max(L, 1.0) * plain(L)
        tgt = target if target is not None else ctx.ctrl.tol * max(float(np.abs(vals[:, 0]).min()), 1e-300)
        tail = bound(spec.cutoff)
        if tail <= tgt:
            rounding = 8 * _EPS * float((np.abs(A) @ np.abs(W).T).max())
            return vals, tail + rounding
        spec = ensure_cutoff(spec, bound, tgt, ctx.ctrl)
        if spec is ctx.spectrum:
            break
    raise NonConvergence("K ladder truncation did not settle")


def ladder_log_weights(s: complex, rho0: float, t, kmax: int) -> np.ndarray:
    """log of the K weights at s + 2k, k = 0..kmax, shape (kmax+1, len(t)).

    Rungs with Re(s + 2k) < 1 are evaluated directly; later ones by the
    ratio 4 (a+k)(b+k) / ((s+2k)(s+2k+1)) accumulated in log space.
    """
    t = np.atleast_1d(np.asarray(t, dtype=complex))
    ks = np.arange(kmax + 1)
    svals = s + 2 * ks
    k0 = int(min(kmax, max(0, math.ceil((1.0 - s.real) / 2))))
    out = np.empty((kmax + 1, t.size), dtype=complex)
    out[:k0 + 1] = log_weights(svals[:k0 + 1] - rho0, t) - log_gamma_or_inf(svals[:k0 + 1])[:, None]
    if kmax > k0:
        nu = s - rho0
        kk = ks[k0:kmax][:, None]
        a = 0.5 * (nu - 1j * t)[None, :] + kk
        b = 0.5 * (nu + 1j * t)[None, :] + kk
        sk = (s + 2 * kk)
        steps = np.log(4 * a * b / (sk * (sk + 1)))
        out[k0 + 1:] = out[k0][None, :] + np.cumsum(steps, axis=0)
    return out


def point_distance(spectrum: Spectrum, z, w) -> float:
    """Geodesic distance between z and w (inf for the toy spectrum)."""
    kind = spectrum.kind
    if kind == "torus":
        g = spectrum.geometry
        return g.min_image_distance(g.as_point(z) - g.as_point(w))
    if kind == "cp1":
        return CP1Geometry.distance(z, w)
    return math.inf


def ladder_series(ctx: KFunctionContext, z, w, s, coef_fn, exponent, laplacian: bool = False):
    """sum_k c_k K(z, w; s + 2k) with c_k = coef_fn(kmax)[k].

    For z != w the full K(s + 2k) decays like cosh(d)^(-2k) (finite
    propagation speed of the wave kernel), which fixes kmax.  A complete
    spectrum has no such decay; its terms behave like k^exponent and the
    tail is handled by :func:`sum_series`.  Returns (value, err).
    """
    s = complex(s)
    tol = ctx.ctrl.tol
    spec = ctx.spectrum
    if spec.complete:
        kmax = 4095
        vals, err = k_ladder(ctx, [(z, w)], s, kmax, laplacian=laplacian)
        c = coef_fn(kmax)
        val, serr, ok = sum_series(c * vals[0], tol=tol, exponent=exponent)
        if not ok and serr > 1e3 * tol * max(abs(val), 1e-300):
            raise NonConvergence(f"series tail estimate {serr:.3e} too large")
        return val, serr + err * float(np.abs(c).sum())
    d = point_distance(spec, z, w)
    if d < 1e-12:
        raise CoincidenceError("the series diverges at z = w")
    rate = 2.0 * math.log(math.cosh(d))
    kmax = int(math.ceil((math.log(1.0 / tol) + 8.0) / rate)) + 4
    if kmax > ctx.ctrl.max_terms:
        raise NonConvergence(f"{kmax} terms needed at distance {d:.3g} (cap {ctx.ctrl.max_terms})")
    c = coef_fn(kmax)
    vals, err = k_ladder(ctx, [(z, w)], s, kmax, laplacian=laplacian)
    terms = c * vals[0]
    val = complex(terms.sum())
    q = math.exp(-rate)
    tail = float(np.abs(terms[-4:]).max()) * q / (1.0 - q)
    rounding = 8 * _EPS * float(np.abs(terms).sum())
    return val, tail + rounding + err * float(np.abs(c).sum())


def log_gamma_or_inf(s):
    """log Gamma(s) with +inf at the poles, so exp(-value) gives 1/Gamma."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.full(s.shape, np.inf, dtype=complex)
    pole = (s.imag == 0) & (s.real <= 0) & (s.real == np.round(s.real))
    if (~pole).any():
        out[~pole] = log_gamma(s[~pole])
    return out


def k_value(ctx: KFunctionContext, z, w, s) -> KernelValue:
    """K(z, w; s) from its spectral series, for Re(s) > 2 rho0."""
    s = complex(s)
    if not s.real > 2 * ctx.rho0:
        raise DomainError(f"k_value needs Re(s) > 2 rho0 = {2 * ctx.rho0:g}")
    vals, err = k_ladder(ctx, [(z, w)], s, 0)
    return KernelValue(complex(vals[0, 0]), err)


def k_continued(ctx: KFunctionContext, z, w, s, n: int) -> KernelValue:
    """Continuation of K to Re(s) > 2 rho0 - 2n through the Q_n rescaling.

    K(s) = Gamma(nu + 2n)/(2^(2n) Gamma(s)) sum_j H(t_j, cosh^-(nu+2n)) / Q_n(t_j, nu) psi psi-bar,
    Q_n(r, nu) = ((nu + i r)/2)_n ((nu - i r)/2)_n.
    """
    s = complex(s)
    n = int(n)
    if n < 0:
        raise DomainError("n must be >= 0")
    if n == 0:
        return k_value(ctx, z, w, s)
    r0 = ctx.rho0
    if not s.real > 2 * r0 - 2 * n:
        raise DomainError(f"k_continued with n = {n} needs Re(s) > {2 * r0 - 2 * n:g}")
    spec = ctx.spectrum
    nu = s - r0
    nun = nu + 2 * n
    bound = ladder_bound(ctx, spec, s, 0)
    for _ in range(3):
        levels, A = spec.pair_coefficients([(z, w)])
        _check_poles(ctx, s, levels, n - 1)
        t = ctx.rho.t_values(levels)
        H = cosh_coeff_continued(nun, t)
        Q = pochhammer(0.5 * (nu + 1j * t), n) * pochhammer(0.5 * (nu - 1j * t), n)
        pre = np.exp(log_gamma(nun) - 2 * n * LOG2) * rgamma(s)
        wts = pre * H / Q
        val = complex(A[0] @ wts)
        bound = ladder_bound(ctx, spec, s, 0)
        tgt = ctx.ctrl.tol * max(abs(val), 1e-300)
        tail = bound(spec.cutoff)
        if tail <= tgt or spec.complete:
            return KernelValue(val, tail + 8 * _EPS * float(np.abs(A[0]) @ np.abs(wts)))
        spec = ensure_cutoff(spec, bound, tgt, ctx.ctrl)
    raise NonConvergence("continued K truncation did not settle")


def k_ddeq_residual(ctx: KFunctionContext, z, w, s) -> float:
    """|(Delta + s(s - 2 rho0)) K(s) - s(s+1) K(s+2)| with Delta applied per level."""
    s = complex(s)
    if not s.real > 2 * ctx.rho0:
        raise DomainError(f"k_ddeq_residual needs Re(s) > {2 * ctx.rho0:g}")
    vals, err = k_ladder(ctx, [(z, w)], s, 1)
    lap = k_laplacian(ctx, z, w, s)
    lhs = lap + s * (s - 2 * ctx.rho0) * vals[0, 0]
    return float(abs(lhs - s * (s + 1) * vals[0, 1]))


def k_laplacian(ctx: KFunctionContext, z, w, s) -> complex:
    """Delta_z K(z, w; s): each level term multiplied by its eigenvalue."""
    s = complex(s)
    spec = ctx.spectrum
    # weighting by lambda costs at most a factor ~2L in the tail
    bound0 = ladder_bound(ctx, spec, s, 0)
    probe, _ = k_ladder(ctx, [(z, w)], s, 0)
    tgt = ctx.ctrl.tol * 1e-3 * max(abs(probe[0, 0]), 1e-300)
    spec = ensure_cutoff(spec, lambda L: 2.0 * bound0(L) * max(L, 1.0), tgt, ctx.ctrl)
    levels, A = spec.pair_coefficients([(z, w)])
    t = ctx.rho.t_values(levels)
    W = np.exp(log_weights(np.array([s - ctx.rho0]), t)[0] - log_gamma_or_inf(np.array([s]))[0])
    return complex(A[0] @ (levels * W))


def k_zero_mode(ctx: KFunctionContext, s) -> complex:
    """Contribution of the constant mode, 2^(nu-1) Gamma((nu-i t0)/2) Gamma((nu+i t0)/2) / (Gamma(s) vol)."""
    s = complex(s)
    t0 = ctx.rho.t_values(np.array([0.0]))
    lw = log_weights(np.array([s - ctx.rho0]), t0)[0, 0] - log_gamma(s)
    return complex(np.exp(lw)) / ctx.vol
