"""qdisk: arbitrary-precision q-disk polynomial families and numerical
certification of their addition and product formulas, the underlying
operator realizations, and the q -> 1 degenerations."""

from .qcore import (
    BranchError,
    DomainError,
    EvaluationContext,
    GuardBandError,
    NonTerminatingError,
    PhiSeriesSpec,
    PoleError,
    QDiskError,
    TruncationError,
    phi_series,
    q_pochhammer,
    q_pochhammer_infinite,
)
from .qpolys import (
    DiskIndex,
    KrawtchoukParams,
    QJacobiParams,
    affine_q_krawtchouk,
    affine_q_krawtchouk_orthonormal,
    al_salam_carlitz_V,
    disk_polynomial,
    disk_polynomial_pair,
    jacobi_normalized,
    little_q_jacobi,
    r_function,
    wall,
)
from .identities import (
    AdditionInstance,
    ProductInstance,
    ResidualReport,
    addition_lhs,
    addition_residual,
    addition_rhs,
    coefficient_c,
    connection_coefficients,
    connection_residual,
    generating_function_residual,
    little_qjacobi_product_residual,
    product_residual,
    product_rhs,
    two_variable_P,
    wall_addition_residual,
)

__version__ = "0.1.0"
