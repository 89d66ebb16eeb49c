from .grid import (
    Grid,
    HermitianSymmetryError,
    PhysicalField,
    SpectralField,
    VectorField,
    forward_transform,
    hermitian_defect,
    inverse_transform,
)
from .operators import (
    Norms,
    divergence,
    fractional_laplacian,
    gradient,
    hdot_sq,
    lambda_symbol,
    norms,
    riesz_tensor_lambda2alpha,
    velocity_gradient_type,
    velocity_perp_type,
)
from .quadrature import (
    TailMassWarning,
    epstein_zeta,
    lattice_zeta,
    kernel_velocity,
    lambda_constant,
    singular_integral_lambda,
    unit_ball_volume,
    velocity_kernel_constant,
)
