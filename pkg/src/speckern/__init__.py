"""speckern: heat, Poisson and resolvent kernels from Laplace spectra.

The chain runs from a truncated spectrum (flat tori, CP^1 or a one-mode toy)
through the heat and translated Poisson kernels and the wave pairing to
K(z, w; s), the resolvent series G, the Eisenstein-type series E, and a
Kronecker limit check against the Jacobi theta norm.
"""

from .control import DEFAULT_CONTROL, KernelValue, SeriesControl
from .eisenstein import (d_difference, e_ddeq_residual, e_expansion_at_zero, e_limit_at_zero,
                         e_value, sinh_cosh_identity_check)
from .errors import (AdmissibilityError, BranchError, CapacityError, CoincidenceError,
                     DivergenceError, DivisorHit, DomainError, EvaluationError, FitUnstable,
                     GridTooClose, MethodMismatch, NonConvergence, PoleError, PoleProximity,
                     SpectralPole, SpeckernError)
from .kernels import heat_kernel, poisson_kernel, rescaled_poisson_integral, wave_apply
from .kronecker import (ThetaNormContext, kronecker_verify, laplacian_fd, theta1, theta1_product,
                        theta_norm)
from .kseries import KFunctionContext, k_continued, k_ddeq_residual, k_value
from .resolvent import (LaurentExpansion, g_heat_integral, g_series_value, g_spectral_value,
                        green_function, laurent_at_zero)
from .specfun import (StirlingPolicy, TestFunction, cosh_coeff, gauss_2f1_at_one, h_transform,
                      laplace_estimate, log_gamma, pochhammer, stirling_remainder)
from .spectra import (CP1Geometry, RhoParameter, Spectrum, TorusGeometry, build_cp1_spectrum,
                      build_torus_spectrum, toy_spectrum, weyl_count)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
