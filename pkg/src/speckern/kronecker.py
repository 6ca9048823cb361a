"""Kronecker limit check on the elliptic curve C/(Z + tau Z).

The theta norm log ||theta_1||^2 has constant Laplacian away from the
divisor point w0 and the same logarithmic singularity as Green's function
up to a factor.  Hence R = G(., w0) - c0 log||theta_1||^2 is bounded,
harmonic and doubly periodic, i.e. constant; this module measures that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, DivisorHit, EvaluationError, GridTooClose
from .eisenstein import e_expansion_at_zero
from .kseries import KFunctionContext
from .parallel import ordered_map
from .resolvent import g_spectral_value, green_function, laurent_at_zero

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ThetaNormContext:
    """Curve C/(Z + tau Z), divisor point w0, weight n and the potential scale.

    F = theta_1(pi (z - w0))^n and ||F||^2 = |F|^2 exp(-2 n scale (Im(z - w0))^2);
    the default scale pi / Im(tau) is the one that makes the norm doubly
    periodic.
    """

    tau: complex
    w0: complex = 0.5 + 0.5j
    n: int = 1
    scale: float | None = field(default=None)

    def __post_init__(self):
        tau = complex(self.tau)
        if not tau.imag > 0:
            raise DomainError("Im(tau) must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("the weight n must be a positive integer")
        a, b = _lattice_coords(complex(self.w0), tau)
        if not (0 <= a < 1 and 0 <= b < 1):
            raise DomainError("w0 must lie in the fundamental cell {a + b tau : 0 <= a, b < 1}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "w0", complex(self.w0))
        if self.scale is None:
            object.__setattr__(self, "scale", math.pi / tau.imag)

    @property
    def nome(self) -> complex:
        return complex(np.exp(1j * math.pi * self.tau))

    @property
    def area(self) -> float:
        return self.tau.imag


def _lattice_coords(u, tau: complex):
    """Real (a, b) with u = a + b tau."""
    u = np.asarray(u, dtype=complex)
    b = u.imag / tau.imag
    a = u.real - b * tau.real
    return a, b


def reduce_to_cell(u, tau: complex):
    """Representative of u modulo Z + tau Z with lattice coordinates in [-1/2, 1/2)."""
    a, b = _lattice_coords(u, tau)
    a = a - np.floor(a + 0.5)
    b = b - np.floor(b + 0.5)
    return a + b * tau


def theta1(x, q, *, terms: int | None = None):
    """Jacobi theta_1(x, q) = 2 sum_n (-1)^n q^((n+1/2)^2) sin((2n+1) x)."""
    x = np.asarray(x, dtype=complex)
    q = complex(q)
    aq = abs(q)
    if not 0 < aq < 1:
        raise DomainError("the nome must satisfy 0 < |q| < 1")
    if terms is None:
        # |q|^((n+1/2)^2) e^((2n+1)|Im x|) below eps relative to the first term
        y = float(np.abs(x.imag).max()) if x.size else 0.0
        lq = -math.log(aq)
        terms = 1
        while (terms + 0.5) ** 2 * lq - 0.25 * lq - 2 * terms * y < 40.0:
            terms += 1
    n = np.arange(terms + 1)
    log_qpow = (n + 0.5) ** 2 * np.log(q)
    coef = 2.0 * (-1.0) ** n * np.exp(log_qpow)
    return (coef[:, None] * np.sin(np.outer(2 * n + 1, x.ravel()))).sum(axis=0).reshape(x.shape)


def theta1_product(x, q, *, terms: int = 60):
    """theta_1 from the Jacobi triple product."""
    x = np.asarray(x, dtype=complex)
    q = complex(q)
    n = np.arange(1, terms + 1)[:, None]
    q2n = q ** (2 * n)
    c = np.cos(2 * x.ravel())[None, :]
    prod = np.prod((1 - q2n) * (1 - 2 * q2n * c + q2n * q2n), axis=0)
    return (2 * q ** 0.25 * np.sin(x.ravel()) * prod).reshape(x.shape)


def theta_norm(ctx: ThetaNormContext, z):
    """log ||F(z)||^2 = 2n log|theta_1(pi(z - w0))| - 2n scale (Im(z - w0))^2."""
    z = np.asarray(z, dtype=complex)
    u = reduce_to_cell(z - ctx.w0, ctx.tau)
    if np.any(np.abs(u) < 1e-14):
        raise DivisorHit("theta_norm is -inf on the divisor z = w0")
    th = theta1(math.pi * u, ctx.nome)
    out = 2 * ctx.n * np.log(np.abs(th)) - 2 * ctx.n * ctx.scale * u.imag ** 2
    return float(out) if out.ndim == 0 else out


# -- finite differences ---------------------------------------------------------------

def _stencil_points(z, h):
    """Points z +- h e_i in the same representation as z (complex scalar or real vector)."""
    if np.ndim(z) == 0:
        z = complex(z)
        return [(z + h, z - h), (z + 1j * h, z - 1j * h)], z
    x = np.asarray(z, dtype=float)
    pairs = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        pairs.append((x + e, x - e))
    return pairs, x


def laplacian_fd(f, z, h: float) -> float:
    """Positive Laplacian -sum_i d^2 f / dx_i^2 by central differences (O(h^2))."""
    if not h > 0:
        raise DomainError("the step h must be positive")
    pairs, z0 = _stencil_points(z, h)
    try:
        f0 = float(np.real(f(z0)))
        acc = 0.0
        for p, m in pairs:
            acc += float(np.real(f(p))) + float(np.real(f(m))) - 2 * f0
    except (ArithmeticError, ValueError) as exc:
        raise EvaluationError(f"function evaluation failed on the stencil: {exc}") from exc
    return -acc / (h * h)


def laplacian_fd_richardson(f, z, h: float):
    """(4 L(h) - L(2h)) / 3 and the estimated O(h^2) error |L(h) - L(2h)| / 3 of L(h)."""
    a = laplacian_fd(f, z, h)
    b = laplacian_fd(f, z, 2 * h)
    return (4 * a - b) / 3, abs(a - b) / 3


# -- the verification report ---------------------------------------------------------------

def _check_curve(kctx: KFunctionContext, tctx: ThetaNormContext):
    spec = kctx.spectrum
    if spec.kind != "torus" or spec.geometry.N != 1:
        raise DomainError("the Kronecker check needs an elliptic-curve (N = 1 torus) spectrum")
    tau = complex(spec.geometry.period_matrix[0, 0])
    if abs(tau - tctx.tau) > 1e-12:
        raise DomainError(f"spectrum tau {tau} does not match the theta context tau {tctx.tau}")


def kronecker_verify(kctx: KFunctionContext, tctx: ThetaNormContext, grid, s_radii=(0.25, 0.5),
                     *, fd_step: float = 0.02, harmonic_step: float = 1e-3,
                     log_distances=(1e-2, 3e-3, 1e-3), cell_points: int = 512,
                     e_side: bool | None = None) -> dict:
    """Measure every ingredient of the Kronecker limit formula on a grid.

    Returns a plain dict: Laurent data of G(z, w0; s) at s = 0, the fitted
    c0 and its matching residual, R(z) with its spread, harmonicity of R,
    the logarithmic matching, the constant c1 two ways, and for rho0 = 1/2
    the fit of the E-series s-coefficient against the theta norm.
    """
    _check_curve(kctx, tctx)
    w0 = tctx.w0
    grid = [complex(z) for z in grid]
    for z in grid:
        d = abs(complex(reduce_to_cell(z - w0, tctx.tau)))
        if d < 1e-3:
            raise GridTooClose(f"grid point {z} lies within 1e-3 of the divisor point {w0}")
    vol = kctx.vol
    rho0 = kctx.rho0

    def green(p):
        return green_function(kctx, complex(p), w0).value.real

    def tnorm(p):
        return theta_norm(tctx, complex(p))

    # (a) Laurent data of the resolvent in s
    def laurent(z):
        fit = laurent_at_zero(lambda s: g_spectral_value(kctx, z, w0, s), s_radii)
        return fit

    fits = ordered_map(laurent, grid)
    if rho0 == 0:
        expected = {"a_m2": 1.0 / vol}
    else:
        expected = {"a_m1": -1.0 / (2 * rho0 * vol)}

    # (b) c0 from matching Laplacians
    lap_g = np.array(ordered_map(lambda z: laplacian_fd_richardson(green, z, fd_step)[0], grid))
    lap_t = np.array(ordered_map(lambda z: laplacian_fd_richardson(tnorm, z, fd_step)[0], grid))
    c0 = float(np.mean(lap_g) / np.mean(lap_t))
    matching = float(np.max(np.abs(lap_g - c0 * lap_t)))

    # (c) the residual R and its harmonicity
    g_vals = np.array(ordered_map(green, grid))
    t_vals = np.array([tnorm(z) for z in grid])
    R = g_vals - c0 * t_vals
    spread = float(np.std(R))
    t_range = float(np.ptp(t_vals))

    def r_fun(p):
        return green(p) - c0 * tnorm(p)

    lap_r = np.array(ordered_map(lambda z: laplacian_fd(r_fun, z, harmonic_step), grid))
    lap_scale = float(np.mean(np.abs(lap_t)))

    # logarithmic matching towards w0
    logm = [green(w0 + d) - c0 * 2 * tctx.n * math.log(d) for d in log_distances]

    # c1 from the zero mean of G: int R = -c0 int theta_norm over the cell
    m = int(cell_points)
    frac = (np.arange(m) + 0.5) / m
    cell = w0 + frac[:, None] + frac[None, :] * tctx.tau
    c1_integrated = float(-c0 * np.mean(theta_norm(tctx, cell.ravel())))
    c1_direct = float(np.mean(R))

    report = {
        "tau": [tctx.tau.real, tctx.tau.imag],
        "w0": [w0.real, w0.imag],
        "rho0": rho0,
        "vol": vol,
        "grid": [[z.real, z.imag] for z in grid],
        "laurent": [fit.as_dict() for fit in fits],
        "laurent_expected": expected,
        "c0": c0,
        "c0_weight_prediction": -1.0 / (4 * math.pi * tctx.n),
        "laplacian_green": lap_g.tolist(),
        "laplacian_theta": lap_t.tolist(),
        "matching_residual": matching,
        "R": R.tolist(),
        "R_std": spread,
        "theta_range": t_range,
        "R_std_over_range": spread / t_range if t_range > 0 else math.inf,
        "laplacian_R": lap_r.tolist(),
        "laplacian_theta_scale": lap_scale,
        "harmonic_ratio": float(np.max(np.abs(lap_r)) / lap_scale),
        "log_distances": list(log_distances),
        "log_matching": logm,
        "log_matching_spread": float(np.ptp(logm)),
        "c1_direct": c1_direct,
        "c1_integrated": c1_integrated,
    }

    if e_side is None:
        e_side = rho0 == 0.5
    if e_side:
        slopes = np.array([e_expansion_at_zero(kctx, z, w0).a_1.real
                           for z in ordered_map(lambda z: z, grid)])
        A = np.column_stack([t_vals, np.ones_like(t_vals)])
        (e_c1, e_c2), *_ = np.linalg.lstsq(A, slopes, rcond=None)
        report["e_slopes"] = slopes.tolist()
        report["e_c1"] = float(e_c1)
        report["e_c2"] = float(e_c2)
        report["e_fit_residual"] = float(np.max(np.abs(A @ np.array([e_c1, e_c2]) - slopes)))
        report["e_c1_prediction"] = math.sqrt(2 * math.pi) * c0
    return report
