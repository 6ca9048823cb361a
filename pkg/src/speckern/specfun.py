"""Complex special functions: log-Gamma, Pochhammer, Gauss 2F1 at unit
argument, cosine transforms of even test functions and a Laplace-method
estimate.

Everything here is vectorised over numpy arrays where that is useful to the
kernel code (``log_gamma``, ``cosh_coeff``); scalar inputs give scalar
outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .control import DEFAULT_CONTROL, KernelValue, SeriesControl
from .errors import DivergenceError, DomainError, NonConvergence, PoleError
from .quadrature import quad

LOG_2PI_HALF = 0.5 * math.log(2.0 * math.pi)
LOG_PI = math.log(math.pi)
_EPS = np.finfo(float).eps

# Bernoulli numbers B_2 .. B_22
BERNOULLI = (
    Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30),
    Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510),
    Fraction(43867, 798), Fraction(-174611, 330), Fraction(854513, 138),
)
_STIRLING_C = np.array([float(b) / ((2 * k + 2) * (2 * k + 1)) for k, b in enumerate(BERNOULLI)])

_LANCZOS_G = 7.0
_LANCZOS = np.array([
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
])
_STIRLING_RADIUS = 15.0
_EULER_GAMMA = 0.57721566490153286061


def _zeta_m1_table(kmax=48, n=1000):
    """zeta(k) - 1 for k = 2..kmax by direct summation plus an Euler-Maclaurin tail."""
    j = np.arange(2, n, dtype=float)
    out = np.empty(kmax + 1)
    for k in range(2, kmax + 1):
        tail = n ** (1.0 - k) / (k - 1) + 0.5 * n ** (-k) + k * n ** (-k - 1.0) / 12.0
        out[k] = (j ** -k)[::-1].sum() + tail
    return out


# Taylor coefficients of log Gamma(1 + x) and log Gamma(2 + x)
_ZETA_M1 = _zeta_m1_table()
_LG1_TAYLOR = np.array([0.0, -_EULER_GAMMA]
                       + [(-1) ** k * (_ZETA_M1[k] + 1.0) / k for k in range(2, _ZETA_M1.size)])
_LG2_TAYLOR = np.array([0.0, 1.0 - _EULER_GAMMA]
                       + [(-1) ** k * _ZETA_M1[k] / k for k in range(2, _ZETA_M1.size)])
_TAYLOR_RADIUS = 0.2


@dataclass(frozen=True)
class StirlingPolicy:
    """Number of Bernoulli corrections and the modulus beyond which the
    asymptotic series is trusted without shifting."""

    M: int = 10
    shift_threshold: float = _STIRLING_RADIUS

    def __post_init__(self):
        if not 1 <= self.M <= 10:
            raise DomainError("StirlingPolicy.M must lie in 1..10")
        if self.shift_threshold < 1:
            raise DomainError("StirlingPolicy.shift_threshold must be >= 1")


def _as_complex(x):
    arr = np.asarray(x, dtype=complex)
    return arr, arr.ndim == 0


def _is_nonpos_int(z):
    return (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))


def _stirling_series(z, M=10):
    """(z-1/2)log z - z + log(2 pi)/2 + sum_{k<=M} B_2k / (2k(2k-1) z^(2k-1))."""
    out = (z - 0.5) * np.log(z) - z + LOG_2PI_HALF
    if M:
        zi2 = 1.0 / (z * z)
        acc = np.zeros_like(z)
        for c in _STIRLING_C[:M][::-1]:
            acc = acc * zi2 + c
        out = out + acc / z
    return out


def _lanczos(z):
    zm = z - 1.0
    x = np.full_like(z, _LANCZOS[0])
    for i in range(1, _LANCZOS.size):
        x = x + _LANCZOS[i] / (zm + i)
    t = zm + _LANCZOS_G + 0.5
    return LOG_2PI_HALF + (zm + 0.5) * np.log(t) - t + np.log(x)


def _taylor(coeffs, x):
    acc = np.zeros_like(x)
    for c in coeffs[::-1]:
        acc = acc * x + c
    return acc


def _loggamma_right(z):
    """log Gamma for Re z >= 1/2; Taylor series near the zeros at 1 and 2."""
    out = np.empty_like(z)
    big = np.abs(z) >= _STIRLING_RADIUS
    near1 = np.abs(z - 1.0) < _TAYLOR_RADIUS
    near2 = np.abs(z - 2.0) < _TAYLOR_RADIUS
    rest = ~(big | near1 | near2)
    if big.any():
        out[big] = _stirling_series(z[big])
    if near1.any():
        out[near1] = _taylor(_LG1_TAYLOR, z[near1] - 1.0)
    if near2.any():
        out[near2] = _taylor(_LG2_TAYLOR, z[near2] - 2.0)
    if rest.any():
        out[rest] = _lanczos(z[rest])
    return out


def log_sinpi(z):
    """Principal log of sin(pi z), free of overflow for large |Im z|."""
    z = np.asarray(z, dtype=complex)
    x = z.real - 2.0 * np.round(0.5 * z.real)
    y = z.imag
    ay = np.abs(y)
    # |sin(pi z)| e^(-pi|y|) = hypot(sin(pi x) e^(-pi|y|), (1 - e^(-2 pi |y|)) / 2)
    s = np.sin(np.pi * x)
    c = np.cos(np.pi * x)
    half = -0.5 * np.expm1(-2.0 * np.pi * ay)
    with np.errstate(divide="ignore"):
        mod = np.pi * ay + np.log(np.hypot(s * np.exp(-np.pi * ay), half))
    return mod + 1j * np.arctan2(c * np.tanh(np.pi * y), s)


def log_gamma(s):
    """Principal branch of log Gamma(s), analytic off the negative real axis.

    Uses the Stirling series for |s| >= 15, a Lanczos sum below that, and the
    reflection formula when Re s < 1/2.
    """
    z, scalar = _as_complex(s)
    z = np.atleast_1d(z)
    if not np.all(np.isfinite(z)):
        raise DomainError("log_gamma needs finite input")
    if _is_nonpos_int(z).any():
        raise PoleError("log_gamma has poles at the non-positive integers")
    out = np.empty_like(z)
    right = z.real >= 0.5
    if right.any():
        out[right] = _loggamma_right(z[right])
    left = ~right
    if left.any():
        zl = z[left]
        branch = np.copysign(2.0 * np.pi, zl.imag) * np.floor(0.5 * zl.real + 0.25)
        out[left] = LOG_PI + 1j * branch - log_sinpi(zl) - _loggamma_right(1.0 - zl)
    return complex(out[0]) if scalar else out


def gamma(s):
    """Gamma(s) through ``exp(log_gamma(s))``."""
    return np.exp(log_gamma(s)) if np.ndim(s) else complex(np.exp(log_gamma(s)))


def rgamma(s):
    """1/Gamma(s), equal to zero at the non-positive integers."""
    z, scalar = _as_complex(s)
    z = np.atleast_1d(z)
    out = np.zeros_like(z)
    ok = ~_is_nonpos_int(z)
    if ok.any():
        out[ok] = np.exp(-log_gamma(z[ok]))
    return complex(out[0]) if scalar else out


def pochhammer(s, n: int):
    """Rising factorial (s)_n = Gamma(s+n)/Gamma(s).

    A direct product is used for n <= 64 or when s is a non-positive
    integer, so that products through zero come out exactly zero.
    """
    n = int(n)
    if n < 0:
        raise DomainError("pochhammer needs n >= 0")
    z, scalar = _as_complex(s)
    z = np.atleast_1d(z)
    direct = (n <= 64) | _is_nonpos_int(z)
    out = np.empty_like(z)
    if direct.any():
        zz = z[direct]
        acc = np.ones_like(zz)
        for k in range(n):
            acc = acc * (zz + k)
        out[direct] = acc
    if (~direct).any():
        zz = z[~direct]
        out[~direct] = np.exp(log_gamma(zz + n) - log_gamma(zz))
    return complex(out[0]) if scalar else out


def gauss_2f1_at_one(a, b, c, *, method: str = "closed",
                     ctrl: SeriesControl = DEFAULT_CONTROL) -> KernelValue:
    """Gauss hypergeometric series 2F1(a, b; c; 1).

    ``method="closed"`` evaluates Gauss's product of Gamma functions;
    ``method="series"`` sums the series with an asymptotic tail correction
    and reports the size of that correction as the error.
    """
    a, b, c = complex(a), complex(b), complex(c)
    delta = c - a - b
    if delta.real <= 0:
        raise DivergenceError(f"2F1(a,b;c;1) diverges: Re(c-a-b) = {delta.real:g} <= 0")
    for name, v in (("c", c), ("c-a", c - a), ("c-b", c - b)):
        if v.imag == 0 and v.real <= 0 and v.real == round(v.real):
            raise PoleError(f"2F1 at unit argument: {name} is a non-positive integer")
    if method == "closed":
        lg = log_gamma(np.array([c, delta, c - a, c - b]))
        val = complex(np.exp(lg[0] + lg[1] - lg[2] - lg[3]))
        err = abs(val) * 8 * _EPS * (1.0 + float(np.abs(lg).sum()))
        return KernelValue(val, err)
    if method != "series":
        raise ValueError(f"unknown method {method!r}")
    # term ratio (a+k)(b+k)/((k+1)(c+k)) ~ 1 - (1+delta)/k
    total = 0j
    absum = 0.0
    t = 1 + 0j
    k0 = 0
    chunk = 512
    while True:
        k = np.arange(k0, k0 + chunk, dtype=float)
        ratios = (a + k) * (b + k) / ((k + 1) * (c + k))
        terms = t * np.concatenate([[1.0], np.cumprod(ratios[:-1])])
        total += terms.sum()
        absum += np.abs(terms).sum()
        t = terms[-1] * ratios[-1]
        k0 += chunk
        K = k0
        corr = t * (K / delta + 0.5)
        if abs(corr) <= ctrl.tol * abs(total) or t == 0:
            break
        if K >= ctrl.max_terms * 5:
            break
    err = abs(corr) + 4 * _EPS * absum
    return KernelValue(total + corr, err)


def cosh_coeff(nu, r):
    """Closed form of 2*int_0^inf cos(r u) cosh(u)^(-nu) du.

    Equals 2^(nu-1) Gamma((nu - i r)/2) Gamma((nu + i r)/2) / Gamma(nu).
    ``r`` may be an array; imaginary r with |Im r| < Re nu is allowed.
    """
    nu = complex(nu)
    if nu.real <= 0:
        raise DomainError("cosh_coeff needs Re(nu) > 0")
    r_arr, scalar = _as_complex(r)
    r_arr = np.atleast_1d(r_arr)
    if np.any(np.abs(r_arr.imag) >= nu.real):
        raise DomainError("cosh_coeff: |Im r| must stay below Re(nu)")
    out = cosh_coeff_continued(nu, r_arr)
    return complex(out[0]) if scalar else out


def cosh_coeff_continued(nu, r):
    """Meromorphic continuation of :func:`cosh_coeff` in nu and r (no checks
    beyond the Gamma poles)."""
    nu = complex(nu)
    r = np.atleast_1d(np.asarray(r, dtype=complex))
    a1 = 0.5 * (nu - 1j * r)
    a2 = 0.5 * (nu + 1j * r)
    if (_is_nonpos_int(a1) | _is_nonpos_int(a2)).any():
        raise DomainError("cosh_coeff: a Gamma argument sits on a pole")
    if _is_nonpos_int(np.array([nu]))[0]:
        return np.zeros_like(r)
    return np.exp((nu - 1) * math.log(2.0) + log_gamma(a1) + log_gamma(a2) - log_gamma(nu))


@dataclass(frozen=True)
class TestFunction:
    """Even test function g on [0, inf) together with an integrable majorant.

    ``tail_bound(U, kappa)`` must bound 2*int_U^inf exp(kappa u)|g(u)| du.
    """

    func: Callable[[np.ndarray], np.ndarray]
    tail_bound: Callable[[float, float], float]
    decay_rate: float = math.inf
    cosh_power: complex | None = None
    name: str = field(default="g")
    h_majorant: Callable[[np.ndarray], np.ndarray] | None = None

    __test__ = False  # keep pytest from collecting this class

    @classmethod
    def cosh_power_fn(cls, nu: float) -> "TestFunction":
        nu = float(nu)
        if nu <= 0:
            raise DomainError("cosh^-nu needs nu > 0")

        def g(u):
            e = np.exp(-np.abs(u))
            return (2.0 * e / (1.0 + e * e)) ** nu

        def bound(U, kappa):
            rate = nu - kappa
            if rate <= 0:
                return math.inf
            return 2.0 * 2.0 ** nu * math.exp(-rate * U) / rate

        return cls(g, bound, decay_rate=nu, cosh_power=nu, name=f"cosh^-{nu:g}")

    @classmethod
    def gaussian(cls, alpha: float = 1.0) -> "TestFunction":
        alpha = float(alpha)
        if alpha <= 0:
            raise DomainError("gaussian needs alpha > 0")

        def g(u):
            return np.exp(-alpha * u * u)

        def bound(U, kappa):
            shift = U - kappa / (2 * alpha)
            return (2.0 * math.exp(kappa * kappa / (4 * alpha)) * math.sqrt(math.pi)
                    / (2 * math.sqrt(alpha)) * math.erfc(math.sqrt(alpha) * shift))

        def majorant(t):
            return math.sqrt(math.pi / alpha) * np.exp(-np.asarray(t) ** 2 / (4 * alpha))

        return cls(g, bound, decay_rate=math.inf, name=f"exp(-{alpha:g}u^2)", h_majorant=majorant)


def h_transform(r, g: TestFunction, ctrl: SeriesControl = DEFAULT_CONTROL) -> KernelValue:
    """2*int_0^inf cos(u r) g(u) du by adaptive quadrature on [0, U].

    U is doubled until the tail majorant falls below ``ctrl.tol`` times the
    running integral; the final majorant is added to the error estimate.
    """
    r = complex(r)
    kappa = abs(r.imag)

    def integrand(u):
        return 2.0 * np.cos(u * r) * g.func(u)

    U = 4.0
    while g.tail_bound(U, kappa) > 1e-3 and U < 1e4:
        U *= 2
    total, err = quad(integrand, 0.0, U, epsrel=ctrl.quad_tol, epsabs=1e-300)
    while True:
        tail = g.tail_bound(U, kappa)
        if tail <= ctrl.tol * max(abs(total), 1e-300):
            break
        if not math.isfinite(tail) or U >= 1e4:
            raise NonConvergence(f"tail bound {tail:.3e} above tolerance at U={U:g}")
        extra, e2 = quad(integrand, U, 2 * U, epsrel=ctrl.quad_tol, epsabs=ctrl.quad_tol * abs(total))
        total += extra
        err += e2
        U *= 2
    return KernelValue(complex(total), float(err + tail))


def laplace_estimate(lam: float, nu: float, a: float, b: float, h0: float, x: float) -> float:
    """Leading Laplace-method approximation of int_0^c t^(lam-1) g(t) e^(x h(t)) dt.

    The maximum of h is at t = 0 with h(t) = h0 - (a/nu) t^nu + ... and
    g(0) = b, giving (b/nu) Gamma(lam/nu) (nu/(a x))^(lam/nu) exp(x h0).
    For h(t) = -log cosh t take nu = 2, a = 1.
    """
    for name, v in (("lambda", lam), ("nu", nu), ("a", a), ("x", x)):
        if not v > 0:
            raise DomainError(f"laplace_estimate needs {name} > 0")
    p = lam / nu
    return float(b / nu * math.gamma(p) * (nu / (a * x)) ** p * math.exp(x * h0))


def stirling_remainder(s, M: int):
    """h_M(s) = log Gamma(s) minus Stirling's series with M Bernoulli terms."""
    s = complex(s)
    if s.real < 5:
        raise DomainError("stirling_remainder needs Re(s) >= 5")
    if not 0 <= M <= 10:
        raise DomainError("stirling_remainder supports 0 <= M <= 10")
    main = complex(_stirling_series(np.array([s]), M)[0])
    return log_gamma(s) - main
