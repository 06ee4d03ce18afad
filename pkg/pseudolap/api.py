"""Public surface of the library

Operators and model profiles, grid fields, the inf-convolution, sliding
experiments, the Dirichlet solver and the regularity diagnostics. The
experiment driver lives in pseudolap.experiments and is not re-exported.
"""
from pseudolap.fields import (
    GridSpec,
    ScalarField,
    SliceSpec,
    fd_gradient,
    fd_hessian,
    field_io_read,
    field_io_write,
    restrict_slice,
    sample_field,
)
from pseudolap.operators import (
    EllipticityParams,
    lower_residual,
    pseudo_laplacian,
    pucci_minus,
    pucci_plus,
    sym_eigenvalues,
    upper_residual,
    weighted_hessian,
)
from pseudolap.profiles import (
    BarrierParams,
    ParaboloidParams,
    barrier_eval,
    barrier_grad,
    barrier_hess,
    barrier_lower_residual,
    bnorm_eval,
    inverse_gradient_jacobian,
    phi_eval,
    phi_grad,
    phi_hess,
    select_barrier_exponent,
    select_barrier_params,
)
from pseudolap.regularity import (
    DyadicCube,
    children,
    cz_check,
    fit_tail,
    harnack_report,
    holder_report,
    predecessor,
    regularity_report,
    tail_distribution,
)
from pseudolap.regularize import InfConvParams, inf_convolution
from pseudolap.sliding import (
    MeasureReport,
    ThresholdConfig,
    TouchingRecord,
    doubling_experiment,
    measure_estimate_experiment,
    rescan_touching,
    slide_vertex,
    sliced_measure_experiment,
    touch_jacobian_det,
    vertex_from_gradient,
)
from pseudolap.solver import (
    SolveConfig,
    SolveReport,
    convergence_study,
    rescale,
    solve_dirichlet,
    viscosity_residual_check,
)


__all__ = [
    "BarrierParams",
    "DyadicCube",
    "EllipticityParams",
    "GridSpec",
    "InfConvParams",
    "MeasureReport",
    "ParaboloidParams",
    "ScalarField",
    "SliceSpec",
    "SolveConfig",
    "SolveReport",
    "ThresholdConfig",
    "TouchingRecord",
    "barrier_eval",
    "barrier_grad",
    "barrier_hess",
    "barrier_lower_residual",
    "bnorm_eval",
    "children",
    "convergence_study",
    "cz_check",
    "doubling_experiment",
    "fd_gradient",
    "fd_hessian",
    "field_io_read",
    "field_io_write",
    "fit_tail",
    "harnack_report",
    "holder_report",
    "inf_convolution",
    "inverse_gradient_jacobian",
    "lower_residual",
    "measure_estimate_experiment",
    "phi_eval",
    "phi_grad",
    "phi_hess",
    "predecessor",
    "pseudo_laplacian",
    "pucci_minus",
    "pucci_plus",
    "regularity_report",
    "rescale",
    "rescan_touching",
    "restrict_slice",
    "sample_field",
    "select_barrier_exponent",
    "select_barrier_params",
    "slide_vertex",
    "sliced_measure_experiment",
    "solve_dirichlet",
    "sym_eigenvalues",
    "tail_distribution",
    "touch_jacobian_det",
    "upper_residual",
    "vertex_from_gradient",
    "viscosity_residual_check",
    "weighted_hessian",
]
