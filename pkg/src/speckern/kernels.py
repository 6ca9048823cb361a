"""Heat kernel, translated Poisson kernel and the wave-distribution pairing.

Every evaluation goes through the level sums A_i(z, w) of
:meth:`Spectrum.pair_coefficients`, so a kernel is sum_i f(lambda_i) A_i.
Truncation is controlled by a Weyl-type majorant of the discarded modes;
when it misses the tolerance the spectrum is extended (up to
``ctrl.max_modes``) and the sum is redone.
"""

from __future__ import annotations

import math

import numpy as np

from .control import DEFAULT_CONTROL, KernelValue, SeriesControl
from .errors import (AdmissibilityError, BranchError, CapacityError, DomainError,
                     MethodMismatch, NonConvergence)
from .quadrature import quad
from .spectra import RhoParameter, Spectrum, TorusGeometry
from .specfun import TestFunction, cosh_coeff_continued, log_gamma

_EPS = np.finfo(float).eps
IMAGES_CROSSOVER = 0.2


# -- truncation machinery ------------------------------------------------------

def _upper_gamma_int(n: int, x: float) -> float:
    """Upper incomplete Gamma(n, x) for a positive integer n."""
    term, acc = 1.0, 1.0
    for k in range(1, n):
        term *= x / k
        acc += term
    return math.gamma(n) * math.exp(-x) * acc


def weyl_constant(spec: Spectrum) -> float:
    """C with  #{lambda_j <= L} * sup|psi_j|^2 <= C L^N  past the cutoff.

    Twice the Weyl coefficient divided by the volume, enlarged if the stored
    spectrum already shows a larger ratio.
    """
    n = spec.geometry.N
    ball = math.pi ** n / math.gamma(n + 1)
    c = 2.0 * (2 * math.pi) ** (-2 * n) * ball
    if math.isfinite(spec.cutoff) and spec.cutoff > 0:
        c = max(c, 1.5 * len(spec) / spec.vol / spec.cutoff ** n)
    return c


def tail_bound(spec: Spectrum, L: float, m_at, m_moment) -> float:
    """Bound on sum_{lambda_j > L} m(lambda_j)|psi_j(z) psi_j(w)|.

    ``m_at(L)`` is the (eventually decreasing) majorant at L and
    ``m_moment(L)`` is N int_L^inf m(lambda) lambda^(N-1) d lambda.  By a
    Stieltjes integration against the counting bound C lambda^N the tail is at
    most C (m(L) L^N + m_moment(L)).
    """
    if spec.complete:
        return 0.0
    n = spec.geometry.N
    return weyl_constant(spec) * (m_at(L) * L ** n + m_moment(L))


def numeric_moment(spec: Spectrum, m_vec, L: float) -> float:
    """N int_L^inf m(lambda) lambda^(N-1) d lambda on doubling Gauss panels."""
    n = spec.geometry.N
    edges = L * 2.0 ** np.arange(0, 61)
    x, w = np.polynomial.legendre.leggauss(32)
    a, b = edges[:-1, None], edges[1:, None]
    lam = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
    vals = np.asarray(m_vec(lam.ravel()), dtype=float).reshape(lam.shape)
    return float(n * (vals * lam ** (n - 1) * 0.5 * (b - a) * w[None, :]).sum())


def _mode_cap_cutoff(spec: Spectrum, ctrl: SeriesControl) -> float:
    """Largest cutoff whose Weyl count stays below ``ctrl.max_modes``."""
    n = spec.geometry.N
    ball = math.pi ** n / math.gamma(n + 1)
    dens = (2 * math.pi) ** (-2 * n) * ball * spec.vol
    return (ctrl.max_modes / dens) ** (1.0 / n)


def ensure_cutoff(spec: Spectrum, bound, target: float, ctrl: SeriesControl) -> Spectrum:
    """Return a spectrum whose tail bound(cutoff) is at most ``target``."""
    if spec.complete or bound(spec.cutoff) <= target:
        return spec
    cap = _mode_cap_cutoff(spec, ctrl)
    L = max(spec.cutoff, 1.0)
    while bound(L) > target:
        L *= 1.5
        if L > cap:
            raise NonConvergence(f"tail bound {bound(cap):.3e} misses target {target:.3e} "
                                 f"within the mode cap {ctrl.max_modes}")
    try:
        return spec.extended(L, ctrl)
    except CapacityError as exc:
        raise NonConvergence(str(exc)) from exc


def level_sum(spec: Spectrum, pairs, weights_fn, bound, ctrl: SeriesControl,
              rel_tol: float | None = None):
    """sum_i weights(lambda_i) A_i(z_p, w_p) for every pair, with tail control.

    ``weights_fn(levels)`` returns the per-level factors (complex array, or
    a 2-D array (k, levels) to get k sums at once).  Returns
    (values, tail bound, spectrum used).
    """
    tol = ctrl.tol if rel_tol is None else rel_tol
    for _ in range(3):
        levels, A = spec.pair_coefficients(pairs)
        wts = np.asarray(weights_fn(levels))
        vals = A @ wts.T if wts.ndim > 1 else A @ wts
        scale = np.abs(vals).min() if np.size(vals) else 0.0
        if scale == 0.0:
            scale = float(np.abs(A).max() * np.abs(wts).max()) * _EPS
        target = tol * scale
        tail = bound(spec.cutoff)
        if tail <= target or spec.complete:
            rounding = 4 * _EPS * float((np.abs(A) @ np.abs(wts).T).max()) if wts.ndim > 1 \
                else 4 * _EPS * float((np.abs(A) @ np.abs(wts)).max())
            return vals, tail + rounding, spec
        spec = ensure_cutoff(spec, bound, target, ctrl)
    raise NonConvergence("spectral sum did not settle after extending the spectrum")


# -- heat kernel ---------------------------------------------------------------

def _heat_bound(spec: Spectrum, t: float):
    n = spec.geometry.N
    return lambda L: tail_bound(spec, L, lambda x: math.exp(-x * t),
                                lambda x: n * _upper_gamma_int(n, x * t) / t ** n)


def _torus_displacement(spec: Spectrum, z, w) -> np.ndarray:
    g = spec.geometry
    return g.as_point(z) - g.as_point(w)


def images_heat(geom: TorusGeometry, d, ts, tol: float = 1e-16):
    """Lattice-image heat kernel sum_v (4 pi t)^(-N) exp(-|d - v|^2 / 4t).

    ``ts`` may be an array; returns (values, tail bounds).
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    n = geom.N
    diam = float(np.linalg.norm(geom.real_basis.sum(axis=1))) + float(np.abs(geom.real_basis).sum())
    L = -math.log(tol) + 5.0
    R = math.sqrt(4 * ts.max() * L) + diam
    vecs = lattice_ball(geom, d, R)
    r2 = ((vecs - d) ** 2).sum(axis=1)
    vals = (4 * math.pi * ts[:, None]) ** (-n) * np.exp(-r2[None, :] / (4 * ts[:, None]))
    out = vals.sum(axis=1)
    # Gaussian mass outside radius R - diam, spread over cells of volume covol
    x = (R - diam) ** 2 / (4 * ts)
    tails = np.array([_upper_gamma_int(n, xi) / math.gamma(n) for xi in x]) * 2.0 / geom.covolume
    return out, tails


def lattice_ball(geom: TorusGeometry, center, R: float) -> np.ndarray:
    """All lattice vectors v with |v - center| <= R."""
    b = geom.real_basis
    frac = geom.basis_inverse @ np.asarray(center, dtype=float)
    spread = R * np.sqrt(np.diag(np.linalg.inv(b.T @ b)))
    lo = np.floor(frac - spread).astype(int)
    hi = np.ceil(frac + spread).astype(int)
    axes = [np.arange(a, c + 1) for a, c in zip(lo, hi)]
    n = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    v = n.astype(float) @ b.T
    keep = ((v - center) ** 2).sum(axis=1) <= R * R
    return v[keep]


def heat_kernel(spectrum: Spectrum, z, w, t: float, method: str = "auto",
                ctrl: SeriesControl = DEFAULT_CONTROL) -> KernelValue:
    """Heat kernel K(z, w; t) = sum_j exp(-lambda_j t) psi_j(z) conj psi_j(w).

    ``method="images"`` uses the periodised Euclidean kernel (tori only);
    ``"auto"`` picks images when t < 0.2 * (shortest lattice vector)^2.
    """
    t = float(t)
    if not t > 0:
        raise DomainError("heat kernel needs t > 0")
    is_torus = spectrum.kind == "torus"
    if method == "auto":
        method = "images" if is_torus and t < IMAGES_CROSSOVER * spectrum.geometry.shortest_vector ** 2 \
            else "spectral"
    if method == "images":
        if not is_torus:
            raise MethodMismatch("the image method needs a torus geometry")
        d = _torus_displacement(spectrum, z, w)
        val, tail = images_heat(spectrum.geometry, d, t, tol=ctrl.tol * 1e-3)
        return KernelValue(complex(val[0]), float(tail[0] + 8 * _EPS * abs(val[0])))
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    vals, err, _ = level_sum(spectrum, [(z, w)], lambda lv: np.exp(-lv * t) + 0j,
                             _heat_bound(spectrum, t), ctrl)
    return KernelValue(complex(vals[0]), err)


def heat_many(spectrum: Spectrum, z, w, ts, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Heat kernel at an array of times with the automatic method choice.

    Returns (values, error bounds) as arrays.
    """
    ts = np.asarray(ts, dtype=float)
    out = np.empty(ts.shape, dtype=complex)
    err = np.empty(ts.shape)
    if spectrum.kind == "torus":
        small = ts < IMAGES_CROSSOVER * spectrum.geometry.shortest_vector ** 2
    else:
        small = np.zeros(ts.shape, dtype=bool)
    if small.any():
        d = _torus_displacement(spectrum, z, w)
        v, tl = images_heat(spectrum.geometry, d, ts[small], tol=ctrl.tol * 1e-3)
        out[small], err[small] = v, tl
    if (~small).any():
        tb = ts[~small]
        tmin = float(tb.min())
        spec = ensure_cutoff(spectrum, _heat_bound(spectrum, tmin),
                             ctrl.tol * 1e-3 / max(spectrum.vol, 1e-300), ctrl)
        levels, A = spec.pair_coefficients([(z, w)])
        E = np.exp(-np.outer(tb, levels))
        out[~small] = E @ A[0]
        err[~small] = _heat_bound(spec, tmin)(spec.cutoff) + 8 * _EPS * (E @ np.abs(A[0]))
    return out, err


# -- Poisson kernel --------------------------------------------------------------

def _sqrt_shift(levels, Z, rho: RhoParameter | None):
    """sqrt(lambda + Z), with the continuation branch when Z = -rho0^2."""
    if rho is not None and Z == -rho.rho0 ** 2:
        return rho.t_values(levels)
    arg = levels + Z
    on_cut = (np.imag(arg) == 0) & (np.real(arg) < 0)
    if np.any(on_cut):
        raise BranchError("sqrt(lambda + Z) falls on the branch cut; pass Z = -rho0^2 "
                          "with a RhoParameter to select the continuation")
    return np.sqrt(arg)


def _poisson_bound(spec: Spectrum, u: complex, Z: complex):
    n = spec.geometry.N
    a = u.real

    def bound(L):
        if spec.complete:
            return 0.0
        eff = max(L - abs(Z), 0.0)
        x = a * math.sqrt(eff)
        return weyl_constant(spec) * (math.exp(-x) * L ** n
                                      + n * 2.0 * _upper_gamma_int(2 * n, x) / a ** (2 * n)
                                      * (1.0 + abs(Z) / max(eff, 1.0)) ** n)
    return bound


def poisson_spectral(spectrum: Spectrum, z, w, u, Z, rho=None,
                     ctrl: SeriesControl = DEFAULT_CONTROL) -> KernelValue:
    u = complex(u)
    vals, err, _ = level_sum(spectrum, [(z, w)],
                             lambda lv: np.exp(-u * _sqrt_shift(lv, Z, rho)),
                             _poisson_bound(spectrum, u, Z), ctrl)
    return KernelValue(complex(vals[0]), err)


def poisson_integral(spectrum: Spectrum, z, w, u, Z,
                     ctrl: SeriesControl = DEFAULT_CONTROL, time_scale: float = 1.0) -> KernelValue:
    """Quadrature of u/sqrt(4 pi) int_0^inf K(t/c) e^(-Z t/c) e^(-u^2/4t) t^(-3/2) dt.

    The range is split at t = 1 and the tail mapped by t = 1/sigma^2.  With
    ``time_scale`` c != 1 this is the rescaled parameterisation, which equals
    the ordinary kernel at u / sqrt(c).
    """
    u, Z, c = complex(u), complex(Z), float(time_scale)
    if Z.real < 0 or (Z.real == 0 and Z != 0):
        raise DomainError("the integral representation needs Re(Z) > 0 or Z = 0")
    if Z == 0 and spectrum.kind != "torus" and spectrum.kind != "cp1" and u.real <= 0:
        raise DomainError("Re(u) must be positive")
    pref = u / math.sqrt(4 * math.pi)
    herr = [0.0]

    def head(t):
        h, e = heat_many(spectrum, z, w, t / c, ctrl)
        herr[0] = max(herr[0], float(e.max()))
        with np.errstate(over="ignore", invalid="ignore"):
            g = np.exp(-Z * t / c - u * u / (4 * t)) * t ** -1.5
        return np.where(t > 0, h * g, 0.0)

    def tail(sig):
        t = 1.0 / np.maximum(sig, 1e-300) ** 2
        h, e = heat_many(spectrum, z, w, t / c, ctrl)
        herr[0] = max(herr[0], float(e.max()))
        return np.where(sig > 0, 2.0 * h * np.exp(-Z * t / c - u * u / (4 * t)), 0.0)

    ea = ctrl.tol * 1e-6
    v1, e1 = quad(head, 0.0, 1.0, epsrel=ctrl.quad_tol, epsabs=ea)
    v2, e2 = quad(tail, 0.0, 1.0, epsrel=ctrl.quad_tol, epsabs=ea)
    val = pref * (v1 + v2)
    err = abs(pref) * (e1 + e2 + herr[0] * (1.0 + abs(v1 + v2)))
    return KernelValue(complex(val), float(err))


def poisson_images(spectrum: Spectrum, z, w, u, ctrl: SeriesControl = DEFAULT_CONTROL,
                   window: tuple[float, float] = (12.0, 2.0)) -> KernelValue:
    """Image sum of the half-space Poisson kernel on a torus (Z = 0).

    P = sum_v c_N u / (u^2 + |d - v|^2)^(N + 1/2),  c_N = Gamma(N + 1/2) / pi^(N + 1/2).
    The slowly decaying sum is split with a smooth window chi: the part
    f (1 - chi) is summed directly and the smooth part f chi is replaced by its
    mean (1/covol) int f chi, which is exact up to the Fourier transform of
    f chi at the non-zero dual vectors (Gaussian-small for a wide window).
    """
    if spectrum.kind != "torus":
        raise MethodMismatch("the image method needs a torus geometry")
    u = complex(u)
    if u.real <= 0:
        raise DomainError("poisson_images needs Re(u) > 0")
    geom = spectrum.geometry
    n = geom.N
    cn = math.gamma(n + 0.5) / math.pi ** (n + 0.5)
    d = _torus_displacement(spectrum, z, w)
    Rc, width = window
    Rc = max(Rc, 6 * abs(u))
    rmax = Rc + 7.0 * width

    def f(rho):
        return cn * u / (u * u + rho * rho) ** (n + 0.5)

    def chi(rho):
        from math import erfc
        return 0.5 * np.vectorize(erfc)((Rc - rho) / width)

    vecs = lattice_ball(geom, d, rmax)
    rho = np.sqrt(((vecs - d) ** 2).sum(axis=1))
    direct = np.sum(f(rho) * (1.0 - chi(rho)))
    # int_{R^2N} f = 1, so int f chi = 1 - int f (1 - chi), a compact integral
    area = 2 * math.pi ** n / math.gamma(n)
    inner, qerr = quad(lambda r: f(r) * (1.0 - chi(r)) * r ** (2 * n - 1), 0.0, rmax,
                       epsrel=ctrl.quad_tol, epsabs=1e-18)
    smooth = (1.0 - area * inner) / geom.covolume
    val = direct + smooth
    err = area * qerr / geom.covolume + 16 * _EPS * (abs(direct) + abs(smooth)) \
        + abs(f(Rc + 7 * width)) * 0.5 * math.erfc(7.0) * 1e3
    return KernelValue(complex(val), float(err))


def poisson_kernel(spectrum: Spectrum, rho: RhoParameter | None, Z, z, w, u,
                   method: str = "auto", ctrl: SeriesControl = DEFAULT_CONTROL) -> KernelValue:
    """Translated Poisson kernel P_{X,-Z}(z, w; u).

    ``Z=None`` means Z = -rho0^2 (the continued kernel, spectral only).
    """
    if rho is None:
        rho = RhoParameter(0.0)
    Z = -rho.rho0 ** 2 if Z is None else complex(Z)
    if Z.imag == 0:
        Z = Z.real
    u = complex(u)
    if u.real <= 0:
        raise DomainError("Poisson kernel needs Re(u) > 0")
    if method == "auto":
        if spectrum.kind == "torus" and Z == 0 and u.real < 0.5 * spectrum.geometry.shortest_vector:
            method = "images"
        else:
            method = "spectral"
    if method == "spectral":
        return poisson_spectral(spectrum, z, w, u, Z, rho, ctrl)
    if method == "integral":
        return poisson_integral(spectrum, z, w, u, Z, ctrl)
    if method == "images":
        if Z != 0:
            raise MethodMismatch("the image formula is for Z = 0")
        return poisson_images(spectrum, z, w, u, ctrl)
    raise ValueError(f"unknown method {method!r}")


def rescaled_poisson_integral(spectrum: Spectrum, Z, z, w, u, c: float,
                              ctrl: SeriesControl = DEFAULT_CONTROL) -> KernelValue:
    """Poisson integral built from the heat kernel of Delta + c d/dt.

    The substitution t -> c t shows this equals poisson_kernel at u / sqrt(c).
    """
    return poisson_integral(spectrum, z, w, u, Z, ctrl, time_scale=c)


# -- wave distribution ---------------------------------------------------------

def _check_admissible(g: TestFunction, rho: RhoParameter):
    r0 = rho.rho0
    if not g.decay_rate > r0:
        raise AdmissibilityError(f"{g.name}: decay rate {g.decay_rate:g} does not beat rho0 = {r0:g}")
    probe = np.array([5.0, 10.0, 20.0, 40.0])
    with np.errstate(over="ignore", under="ignore"):
        vals = np.abs(np.asarray(g.func(probe), dtype=complex)) * np.exp(r0 * probe)
    if not np.all(np.isfinite(vals)) or np.any(np.diff(vals) > 1e-300 + 1e-12 * vals[:-1]):
        raise AdmissibilityError(f"{g.name}: exp(rho0 u)|g(u)| fails the decay spot check")


def h_values(ts, g: TestFunction, method: str, ctrl: SeriesControl) -> np.ndarray:
    """H(t, g) for an array of spectral parameters."""
    ts = np.asarray(ts, dtype=complex)
    if method == "closed":
        if g.cosh_power is None:
            raise MethodMismatch("closed-form H needs a cosh-power test function")
        return cosh_coeff_continued(g.cosh_power, ts)
    kappa = float(np.abs(ts.imag).max()) if ts.size else 0.0
    U = 4.0
    while g.tail_bound(U, kappa) > ctrl.tol * 1e-3 and U < 1e4:
        U *= 2
    if g.tail_bound(U, kappa) > ctrl.tol:
        raise NonConvergence("test-function tail bound does not reach tolerance")

    def integrand(u):
        return 2.0 * np.cos(np.outer(u, ts)) * np.asarray(g.func(u))[:, None]

    val, _ = quad(integrand, 0.0, U, epsrel=ctrl.quad_tol, epsabs=ctrl.quad_tol * 1e-3)
    return np.asarray(val)


def _h_bound(spec: Spectrum, g: TestFunction, rho: RhoParameter):
    r2 = rho.rho0 ** 2
    if g.cosh_power is not None:
        nu = complex(g.cosh_power)

        def m(lam):
            t = np.sqrt(np.maximum(np.asarray(lam, dtype=float) - r2, 0.0))
            return coeff_majorant(nu, t)
    elif g.h_majorant is not None:
        def m(lam):
            return g.h_majorant(np.sqrt(np.maximum(np.asarray(lam, dtype=float) - r2, 0.0)))
    else:
        return None
    return lambda L: tail_bound(spec, L, lambda x: float(m(np.array([x]))[0]),
                                lambda x: numeric_moment(spec, m, x))


def coeff_majorant(nu: complex, t) -> np.ndarray:
    """Decreasing majorant of |H(t, cosh^-nu)| for real t >= 0.

    |Gamma(a + iy)| decreases in |y| for a > 0, so |y| is replaced by
    max(t/2 - |Im nu|/2, 0).
    """
    nu = complex(nu)
    a = 0.5 * nu.real
    y = np.maximum(0.5 * np.asarray(t, dtype=float) - 0.5 * abs(nu.imag), 0.0)
    if a <= 0:
        return np.full(np.shape(t), np.inf)
    lg = 2.0 * np.real(log_gamma(a + 1j * np.atleast_1d(y)))
    val = np.exp((nu.real - 1) * math.log(2.0) + lg - np.real(log_gamma(nu)))
    return val.reshape(np.shape(t))


def wave_apply(spectrum: Spectrum, rho: RhoParameter, z, w, g: TestFunction,
               ctrl: SeriesControl = DEFAULT_CONTROL, method: str = "auto") -> KernelValue:
    """Wave distribution paired with g: sum_j H(t_j, g) psi_j(z) conj psi_j(w)."""
    _check_admissible(g, rho)
    if method == "auto":
        method = "closed" if g.cosh_power is not None else "quadrature"
    bound = _h_bound(spectrum, g, rho)
    if bound is None:
        if not spectrum.complete:
            raise NonConvergence(f"no coefficient majorant known for {g.name}; "
                                 "use a complete (finite) spectrum")
        bound = lambda L: 0.0  # noqa: E731
    vals, err, _ = level_sum(spectrum, [(z, w)],
                             lambda lv: h_values(rho.t_values(lv), g, method, ctrl),
                             bound, ctrl)
    return KernelValue(complex(vals[0]), err)
