"""ncbm: multitime correlation functions of non-colliding Brownian particles.

Finite-N correlations are quaternion determinants (Pfaffians) built from
skew-orthogonal Hermite machinery; the package also evaluates the two
N -> infinity scaling limits (extended sine kernel in the bulk, extended
Airy kernel at the edge) and numerically demonstrates convergence.
"""

__version__ = "0.1.0"

from .errors import DomainError, NonConvergenceError, SelfDualityError, SkewSymmetryError
from .finite import (
    KernelEvaluator,
    KernelValues,
    R_k,
    R_k_m,
    F_mn,
    Phi_k_m,
    assemble_Q,
    correlation,
    density_multitime,
    km_density,
    kernels_SDI,
    skew_inner,
    skew_inner_star,
    skew_inner_weighted,
)
from .limits import (
    ScalingMap,
    airy_Itilde,
    airy_D,
    airy_P,
    airy_S,
    airy_Stilde,
    airy_kernel,
    airy_reduction_a,
    convergence_table,
    scaled_finite_kernel,
    sine_D,
    sine_Itilde,
    sine_Stilde,
    sine_kernel,
    sine_reduction_A,
)
from .model import Configuration, FiniteNModel, MultitimeRequest
from .oracle import (
    EstimateWithError,
    McConfig,
    correlation_quadrature,
    estimate_correlation,
    sample_density,
)
from .pfaffian import pfaffian, pfaffian_reference
from .quadrature import QuadratureSpec, QuadratureResult, integrate
from .quaternion import QKernelMatrix, Quaternion, dual, j_matrix, tdet, tdet_reference
from .special import (
    airy_ai,
    airy_ai_prime,
    airy_integral_oracle,
    airy_upper_integral,
    airy_zero,
    heat_kernel,
    hermite,
    hermite_derivative_identity,
    phi,
    phi_values,
)
