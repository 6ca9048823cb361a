"""Small value types shared by every evaluation routine."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class KernelValue:
    """A computed value together with an a posteriori error estimate.

    ``err`` bounds (or, where no rigorous bound is available, estimates)
    the absolute truncation plus quadrature error of ``value``.
    """

    value: complex
    err: float = 0.0

    def __post_init__(self):
        v = complex(self.value)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ArithmeticError(f"non-finite kernel value {v!r}")
        if not math.isfinite(self.err) or self.err < 0:
            raise ArithmeticError(f"invalid error estimate {self.err!r}")
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "err", float(self.err))

    def __complex__(self):
        return self.value

    @property
    def real(self) -> float:
        return self.value.real

    @property
    def imag(self) -> float:
        return self.value.imag

    @property
    def rel_err(self) -> float:
        a = abs(self.value)
        return self.err / a if a > 0 else math.inf

    def __add__(self, other: KernelValue) -> KernelValue:
        return KernelValue(self.value + other.value, self.err + other.err)

    def __sub__(self, other: KernelValue) -> KernelValue:
        return KernelValue(self.value - other.value, self.err + other.err)

    def scale(self, c: complex) -> KernelValue:
        return KernelValue(self.value * c, self.err * abs(c))


@dataclass(frozen=True)
class SeriesControl:
    """Truncation and quadrature policy shared by all series operations.

    tol
        Relative tail target for spectral and k-series.
    max_terms
        Cap on the number of k-series terms.
    quad_tol
        Relative tolerance for adaptive quadrature.
    max_depth
        Cap on the number of adaptive bisection rounds.
    max_modes
        Cap on the number of eigenmodes a spectrum may be grown to.
    """

    tol: float = 1e-12
    max_terms: int = 20000
    quad_tol: float = 1e-12
    max_depth: int = 60
    max_modes: int = 2_000_000

    def __post_init__(self):
        if not (0 < self.tol < 1 and 0 < self.quad_tol < 1):
            raise ValueError("tol and quad_tol must lie in (0, 1)")
        if self.max_terms <= 0 or self.max_depth <= 0 or self.max_modes <= 0:
            raise ValueError("caps must be positive")

    @property
    def log_tol(self) -> float:
        """-log(tol), the number of e-folds a tail must decay by."""
        return -math.log(self.tol)


DEFAULT_CONTROL = SeriesControl()
