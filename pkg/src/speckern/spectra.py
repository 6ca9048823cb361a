"""Truncated Laplace spectra of flat complex tori and of CP^1.

The Laplacian is the positive real Riemannian Laplacian throughout, so on
the torus C^N / (Z^N + Omega Z^N) the eigenvalues are 4 pi^2 |m*|^2 over the
dual lattice and the eigenfunctions are vol^(-1/2) exp(2 pi i <m*, x>).
Points on a torus are real vectors of length 2N (real parts first, then
imaginary parts); a complex number is accepted when N = 1.  Points on CP^1
are affine coordinates (complex numbers).

Kernels only ever need the pair sums  sum_{lambda_j = lambda} psi_j(z) conj psi_j(w)
grouped by distinct eigenvalue; :meth:`Spectrum.pair_coefficients` returns
exactly that, which is what keeps every downstream series cheap.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .control import DEFAULT_CONTROL, SeriesControl
from .errors import CapacityError, DomainError
from .quadrature import quad

TWO_PI = 2.0 * math.pi
FOUR_PI2 = 4.0 * math.pi ** 2


@dataclass(frozen=True)
class RhoParameter:
    """Spectral shift rho0 >= 0 and the branch t_j = sqrt(lambda_j - rho0^2).

    Below the threshold the root is taken on the positive imaginary axis.
    """

    rho0: float = 0.0

    def __post_init__(self):
        r = float(self.rho0)
        if not (math.isfinite(r) and r >= 0):
            raise DomainError("rho0 must be a finite real >= 0")
        object.__setattr__(self, "rho0", r)

    def t_values(self, lam):
        lam = np.asarray(lam, dtype=float)
        diff = lam - self.rho0 ** 2
        return np.where(diff >= 0, np.sqrt(np.abs(diff)) + 0j, 1j * np.sqrt(np.abs(diff)))


@dataclass(frozen=True, eq=False)
class TorusGeometry:
    """Flat torus C^N / (Z^N + Omega Z^N)."""

    period_matrix: np.ndarray

    def __post_init__(self):
        om = np.atleast_2d(np.asarray(self.period_matrix, dtype=complex))
        if om.shape[0] != om.shape[1]:
            raise DomainError("period matrix must be square")
        if not np.all(np.isfinite(om)):
            raise DomainError("period matrix entries must be finite")
        if not np.allclose(om, om.T, rtol=1e-12, atol=1e-12):
            raise DomainError("period matrix must be symmetric")
        im = om.imag
        for k in range(1, om.shape[0] + 1):
            if not np.linalg.det(im[:k, :k]) > 0:
                raise DomainError("imaginary part of the period matrix must be positive definite "
                                  f"(leading minor of order {k} is not positive)")
        om.setflags(write=False)
        object.__setattr__(self, "period_matrix", om)

    @classmethod
    def from_tau(cls, tau: complex) -> "TorusGeometry":
        return cls(np.array([[complex(tau)]]))

    @property
    def N(self) -> int:
        return self.period_matrix.shape[0]

    @cached_property
    def real_basis(self) -> np.ndarray:
        n = self.N
        b = np.zeros((2 * n, 2 * n))
        b[:n, :n] = np.eye(n)
        b[:n, n:] = self.period_matrix.real
        b[n:, n:] = self.period_matrix.imag
        return b

    @cached_property
    def basis_inverse(self) -> np.ndarray:
        return np.linalg.inv(self.real_basis)

    @cached_property
    def covolume(self) -> float:
        return float(abs(np.linalg.det(self.real_basis)))

    @cached_property
    def shortest_vector(self) -> float:
        """Length of the shortest non-zero lattice vector."""
        b = self.real_basis
        gram = b.T @ b
        # Any n with |Bn| <= |B e_1| satisfies |n_i| <= |B e_1| sqrt((G^-1)_ii).
        r = math.sqrt(gram[0, 0])
        bound = np.ceil(r * np.sqrt(np.diag(np.linalg.inv(gram))) + 1e-9).astype(int)
        best = r
        for n in itertools.product(*[range(-k, k + 1) for k in bound]):
            if any(n):
                best = min(best, float(np.linalg.norm(b @ np.array(n, dtype=float))))
        return best

    def as_point(self, z) -> np.ndarray:
        if np.ndim(z) == 0:
            if self.N != 1:
                raise DomainError("a complex scalar point needs N = 1")
            z = complex(z)
            return np.array([z.real, z.imag])
        x = np.asarray(z)
        if np.iscomplexobj(x):
            if x.shape != (self.N,):
                raise DomainError(f"complex point must have {self.N} coordinates")
            return np.concatenate([x.real, x.imag]).astype(float)
        x = x.astype(float)
        if x.shape != (2 * self.N,):
            raise DomainError(f"real point must have {2 * self.N} coordinates")
        return x

    def min_image_distance(self, d) -> float:
        """Distance from the real vector d to the nearest lattice point."""
        d = np.asarray(d, dtype=float)
        frac = self.basis_inverse @ d
        base = np.round(frac)
        best = math.inf
        for n in itertools.product(*[(-1, 0, 1)] * (2 * self.N)):
            v = self.real_basis @ (base + np.array(n))
            best = min(best, float(np.linalg.norm(d - v)))
        return best

    def to_json(self):
        om = self.period_matrix
        return {"type": "torus", "omega": [[[c.real, c.imag] for c in row] for row in om]}


@dataclass(frozen=True)
class CP1Geometry:
    """Complex projective line with the Fubini-Study metric of area pi."""

    vol: float = math.pi

    N = 1

    @staticmethod
    def distance(z, w) -> float:
        """Geodesic distance in [0, pi/2] between affine coordinates z, w."""
        z, w = complex(z), complex(w)
        return math.atan2(abs(z - w), abs(1 + z * w.conjugate()))

    def to_json(self):
        return {"type": "cp1"}


@dataclass(frozen=True)
class ConstantGeometry:
    """Abstract space of volume ``vol`` whose spectrum is the constant mode alone."""

    vol: float = 1.0

    N = 1

    def to_json(self):
        return {"type": "toy", "vol": self.vol}


@dataclass(frozen=True)
class SpectralDatum:
    """One eigenvalue with its label (dual-lattice vector, degree, or 0)."""

    lam: float
    label: tuple

    def to_json(self):
        return {"lambda": self.lam, "label": list(self.label)}


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalue list with labels, truncated at ``cutoff``.

    ``lam`` and ``labels`` are stored as arrays; ``mult`` carries the
    multiplicity of each entry (2l+1 for CP^1 degrees, 1 otherwise).
    """

    geometry: object
    lam: np.ndarray
    labels: np.ndarray
    cutoff: float
    vol: float
    mult: np.ndarray = field(default=None)

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.size == 0 or lam[0] != 0.0:
            raise DomainError("a spectrum starts with the eigenvalue 0")
        if np.any(np.diff(lam) < 0):
            raise DomainError("eigenvalues must be sorted")
        mult = np.ones(lam.size, dtype=int) if self.mult is None else np.asarray(self.mult, dtype=int)
        for name, arr in (("lam", lam), ("labels", np.asarray(self.labels)), ("mult", mult)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_extensions", [])

    @property
    def kind(self) -> str:
        if isinstance(self.geometry, TorusGeometry):
            return "torus"
        if isinstance(self.geometry, CP1Geometry):
            return "cp1"
        return "toy"

    @property
    def complete(self) -> bool:
        """True when no eigenvalue lies beyond the stored list."""
        return self.kind == "toy"

    @property
    def data(self):
        return [SpectralDatum(float(l), tuple(int(v) for v in np.atleast_1d(lb)))
                for l, lb in zip(self.lam, self.labels)]

    def __len__(self):
        return int(self.mult.sum())

    @cached_property
    def levels(self):
        """Distinct eigenvalues and the index ranges that share them."""
        lam = self.lam
        if lam.size == 1:
            return lam.copy(), np.array([0])
        brk = np.flatnonzero(np.diff(lam) > 1e-12 * np.maximum(lam[1:], 1.0)) + 1
        starts = np.concatenate([[0], brk])
        return lam[starts], starts

    # -- eigenfunctions ------------------------------------------------------
    def eigenfunction_values(self, x) -> np.ndarray:
        """psi_j(x) for every torus mode j (torus only)."""
        if self.kind != "torus":
            raise DomainError("pointwise eigenfunctions are available on tori only")
        x = self.geometry.as_point(x)
        phase = self.labels @ (self.geometry.basis_inverse @ x)
        return np.exp(TWO_PI * 1j * phase) / math.sqrt(self.vol)

    def pair_coefficients(self, pairs):
        """Level sums A[p, i] = sum over the level i of psi_j(z_p) conj psi_j(w_p).

        ``pairs`` is a sequence of (z, w).  Returns (distinct eigenvalues, A).
        """
        levels, starts = self.levels
        if self.kind == "toy":
            return levels, np.full((len(pairs), 1), 1.0 / self.vol, dtype=complex)
        if self.kind == "cp1":
            r = np.array([CP1Geometry.distance(z, w) for z, w in pairs])
            ell = self.labels.astype(int)
            return levels, cp1_profiles(int(ell.max()), r).T.astype(complex)
        geom = self.geometry
        ds = np.array([geom.as_point(z) - geom.as_point(w) for z, w in pairs])
        y = ds @ geom.basis_inverse.T
        phase = y @ self.labels.T.astype(float)  # (P, M)
        # pairs of opposite labels combine to cosines
        terms = np.exp(TWO_PI * 1j * phase) / self.vol
        return levels, np.add.reduceat(terms, starts, axis=1)

    # -- truncation ----------------------------------------------------------
    def weyl_density(self) -> float:
        """Weyl estimate of eigenvalues (with multiplicity) per unit lambda, times N T^(N-1)."""
        n = self.geometry.N
        ball = math.pi ** n / math.gamma(n + 1)
        return (TWO_PI) ** (-2 * n) * ball * self.vol

    def extended(self, cutoff: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> "Spectrum":
        """A spectrum of the same geometry with at least the requested cutoff."""
        if cutoff <= self.cutoff or self.complete:
            return self
        for ext in self._extensions:
            if ext.cutoff >= cutoff:
                return ext
        if self.kind == "torus":
            ext = build_torus_spectrum(self.geometry, cutoff, ctrl=ctrl)
            self._extensions.append(ext)
            self._extensions.sort(key=lambda e: e.cutoff)
            return ext
        deg = int(math.ceil(0.5 * (-1 + math.sqrt(1 + cutoff))))
        while 4 * deg * (deg + 1) < cutoff:
            deg += 1
        if deg + 1 > ctrl.max_modes:
            raise CapacityError(f"CP^1 degree {deg} exceeds the mode cap {ctrl.max_modes}")
        return build_cp1_spectrum(deg)

    def restrict(self, T: float) -> "Spectrum":
        keep = self.lam <= T
        return Spectrum(self.geometry, self.lam[keep], self.labels[keep], min(T, self.cutoff),
                        self.vol, self.mult[keep])

    # -- serialisation -------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "geometry": self.geometry.to_json(),
            "cutoff": self.cutoff if math.isfinite(self.cutoff) else "inf",
            "data": [d.to_json() for d in self.data],
        }

    @classmethod
    def from_json(cls, obj) -> "Spectrum":
        if isinstance(obj, str):
            obj = json.loads(obj)
        g = obj["geometry"]
        cutoff = float(obj["cutoff"])
        if g["type"] == "torus":
            om = np.array([[complex(*c) for c in row] for row in g["omega"]])
            geom = TorusGeometry(om)
            labels = np.array([d["label"] for d in obj["data"]], dtype=int)
            return _torus_from_labels(geom, labels, cutoff)
        if g["type"] == "cp1":
            ell = np.array([d["label"][0] for d in obj["data"]], dtype=int)
            return cls(CP1Geometry(), 4.0 * ell * (ell + 1.0), ell, cutoff, math.pi, 2 * ell + 1)
        if g["type"] == "toy":
            return toy_spectrum(float(g["vol"]))
        raise DomainError(f"unknown geometry type {g['type']!r}")


def build_torus_spectrum(geom: TorusGeometry, cutoff: float,
                         ctrl: SeriesControl = DEFAULT_CONTROL) -> Spectrum:
    """All dual-lattice modes with 4 pi^2 |m*|^2 <= cutoff.

    The dual Gram matrix is (B^T B)^-1, so a label k lies in the ellipsoid
    k^T (B^T B)^-1 k <= R^2 only if |k_i| <= R sqrt((B^T B)_ii); the box is
    enumerated and then filtered.
    """
    if not cutoff > 0:
        raise DomainError("cutoff must be positive")
    b = geom.real_basis
    gram = b.T @ b
    dual = np.linalg.inv(gram)
    r2 = cutoff / FOUR_PI2
    bound = np.floor(np.sqrt(r2 * np.diag(gram)) * (1 + 1e-12) + 1e-9).astype(int)
    box = int(np.prod(2 * bound + 1))
    weyl = (math.pi ** geom.N / math.gamma(geom.N + 1)) * r2 ** geom.N * geom.covolume
    if box > 50 * ctrl.max_modes or weyl > ctrl.max_modes:
        raise CapacityError(f"cutoff {cutoff:g} implies about {weyl:.3g} modes "
                            f"(cap {ctrl.max_modes})")
    axes = [np.arange(-k, k + 1) for k in bound]
    labels = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    q = np.einsum("ij,jk,ik->i", labels.astype(float), dual, labels.astype(float))
    return _torus_from_labels(geom, labels[q <= r2 * (1 + 1e-12)], float(cutoff))


def _torus_from_labels(geom: TorusGeometry, labels: np.ndarray, cutoff: float) -> Spectrum:
    dual = np.linalg.inv(geom.real_basis.T @ geom.real_basis)
    lam = FOUR_PI2 * np.einsum("ij,jk,ik->i", labels.astype(float), dual, labels.astype(float))
    lam[~labels.any(axis=1)] = 0.0
    # ascending eigenvalue; numerically equal eigenvalues are snapped to one
    # value and ordered by label so the listing is reproducible
    order = np.argsort(lam, kind="stable")
    lam, labels = lam[order], labels[order]
    level = np.concatenate([[0], np.cumsum(np.diff(lam) > 1e-12 * np.maximum(lam[1:], 1.0))])
    first = np.concatenate([[0], np.flatnonzero(np.diff(level)) + 1])
    lam = lam[first][level]
    order = np.lexsort(tuple(labels.T[::-1]) + (level,))
    return Spectrum(geom, lam[order], labels[order], cutoff, geom.covolume)


def build_cp1_spectrum(cutoff_degree: int) -> Spectrum:
    """Degrees l = 0..cutoff_degree with eigenvalues 4 l (l + 1)."""
    cutoff_degree = int(cutoff_degree)
    if cutoff_degree < 0:
        raise DomainError("cutoff_degree must be >= 0")
    ell = np.arange(cutoff_degree + 1)
    lam = 4.0 * ell * (ell + 1.0)
    # next eigenvalue is excluded, so everything below it is complete
    cutoff = 4.0 * (cutoff_degree + 1) * (cutoff_degree + 2) - 1e-9
    return Spectrum(CP1Geometry(), lam, ell, cutoff, math.pi, 2 * ell + 1)


def toy_spectrum(vol: float = 1.0) -> Spectrum:
    """The single constant mode on a space of volume ``vol``."""
    if not vol > 0:
        raise DomainError("vol must be positive")
    return Spectrum(ConstantGeometry(float(vol)), np.array([0.0]), np.zeros((1, 1), dtype=int),
                    math.inf, float(vol))


def weyl_count(spectrum: Spectrum, T: float) -> int:
    """Number of eigenvalues <= T counted with multiplicity."""
    if T > spectrum.cutoff:
        raise DomainError(f"T = {T:g} exceeds the spectrum cutoff {spectrum.cutoff:g}")
    return int(spectrum.mult[spectrum.lam <= T].sum())


def weyl_prediction(spectrum: Spectrum, T: float) -> float:
    """(2 pi)^(-2N) vol(unit ball in R^2N) vol(X) T^N."""
    n = spectrum.geometry.N
    return spectrum.weyl_density() * T ** n


# -- CP^1 radial profiles -----------------------------------------------------

def _chebyshev_u_even(x, lmax):
    """U_{2l}(x) for l = 0..lmax, stacked along the last axis."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (lmax + 1,))
    u_prev = np.zeros_like(x)
    u = np.ones_like(x)
    out[..., 0] = u
    for n in range(1, 2 * lmax + 1):
        u_prev, u = u, 2 * x * u - u_prev
        if n % 2 == 0:
            out[..., n // 2] = u
    return out


def cp1_profiles(lmax: int, r, ctrl: SeriesControl = DEFAULT_CONTROL) -> np.ndarray:
    """theta_l(r) for l = 0..lmax at each distance in ``r``; shape (lmax+1, len(r)).

    theta_l(r) = (2(2l+1)/pi^2) int_r^{pi/2} sin((2l+1)tau) / sqrt(cos^2 r - cos^2 tau) dtau,
    rewritten with cos tau = cos r sin phi as
    (2(2l+1)/pi^2) int_0^{pi/2} U_{2l}(cos r sin phi) dphi.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any((r < 0) | (r >= math.pi / 2)):
        raise DomainError("CP^1 distance must lie in [0, pi/2)")
    cr = np.cos(r)

    def integrand(phi):
        x = np.sin(phi)[:, None] * cr[None, :]
        return _chebyshev_u_even(x, lmax).reshape(phi.size, -1)

    val, _ = quad(integrand, 0.0, math.pi / 2, epsrel=ctrl.quad_tol, epsabs=1e-15)
    val = np.asarray(val).real.reshape(r.size, lmax + 1).T
    ell = np.arange(lmax + 1)[:, None]
    return 2.0 * (2 * ell + 1) / math.pi ** 2 * val


def theta_ell_cp1(ell: int, r: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Radial profile theta_l(r) of the degree-l eigenspace of CP^1."""
    ell = int(ell)
    if ell < 0:
        raise DomainError("ell must be >= 0")
    if not 0 <= r < math.pi / 2:
        raise DomainError("r must lie in [0, pi/2)")
    return float(cp1_profiles(ell, [r], ctrl)[ell, 0])
