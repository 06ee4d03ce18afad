"""Explicit relaxation for sum_i |D_i u|^p D_ii u = f with Dirichlet data.

Each step updates every interior node at once from the previous iterate,

    u <- u + dt (sum_i a_i D_ii u - f),   a_i = max(|D_i u|^p, floor),

with the local step dt = safety h^2 / (2 sum_i a_i). Nodes where every
coefficient vanishes are left untouched. The update is nondecreasing in
the neighbouring values, so the discrete comparison principle holds.
"""
from dataclasses import dataclass, field
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from pseudolap.errors import (
    DivergenceError,
    EllipticityNormalizationError,
    InvalidInputError,
    OutOfDomainError,
)
from pseudolap.fields import (
    GridSpec,
    ScalarField,
    central_gradient,
    central_second,
    fd_gradient_field,
    fd_hessian_field,
    interior_mask,
    sample_field,
)
from pseudolap.operators import (
    EllipticityParams,
    check_exponent,
    lower_residual,
    upper_residual,
)


logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 10.0
LOG_EVERY = 5000


@dataclass(frozen=True)
class SolveConfig:
    tol: float = 1e-8
    max_steps: int = 1_000_000
    safety: float = 0.9
    floor: float = 0.0

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidInputError(f"tol must be > 0, got {self.tol}")
        if not self.max_steps >= 1:
            raise InvalidInputError(f"max_steps must be >= 1, got {self.max_steps}")
        if not 0 < self.safety <= 1:
            raise InvalidInputError(f"safety must be in (0, 1], got {self.safety}")
        if not self.floor >= 0:
            raise InvalidInputError(f"floor must be >= 0, got {self.floor}")

    @property
    def mode(self) -> str:
        return "degenerate" if self.floor == 0 else "vanishing-viscosity"


@dataclass
class SolveReport:
    """Outcome of solve_dirichlet; residual is the sup of the true operator
    residual over interior nodes, reported even without convergence."""
    p: float
    h: float
    mode: str
    steps: int = 0
    residual: float = float("inf")
    initial_residual: float = float("inf")
    converged: bool = False
    dt_min: float = 0.0
    dt_max: float = 0.0
    dt_mean: float = 0.0
    history: List[Tuple[int, float]] = field(default_factory=list)

    def summary(self) -> Dict[str, object]:
        return {
            "p": self.p,
            "h": self.h,
            "mode": self.mode,
            "steps": self.steps,
            "residual": self.residual,
            "initial_residual": self.initial_residual,
            "converged": self.converged,
            "dt_min": self.dt_min,
            "dt_max": self.dt_max,
            "dt_mean": self.dt_mean,
        }


def _interior(values: np.ndarray) -> Tuple[slice, ...]:
    return tuple(slice(1, s - 1) for s in values.shape)


def _operator(values: np.ndarray, h: float, p: float, floor: float):
    """Return (true operator, scheme operator, coefficient sum) on the interior."""
    grad = central_gradient(values, h)
    second = central_second(values, h)
    weights = np.abs(grad) ** p
    coeffs = np.maximum(weights, floor)
    return (
        np.sum(weights * second, axis=-1),
        np.sum(coeffs * second, axis=-1),
        np.sum(coeffs, axis=-1),
    )


def discrete_pseudo_laplacian(u: ScalarField, p: float) -> np.ndarray:
    """sum_i |D_i u|^p D_ii u at every interior node, central differences."""
    p = check_exponent(p)
    return _operator(u.values, u.h, p, 0.0)[0]


def _initial_iterate(
        spec: GridSpec,
        f: ScalarField,
        boundary: ScalarField,
        p: float,
        C: SolveConfig,
        initial: Optional[ScalarField],
) -> np.ndarray:
    values = np.array(boundary.values)
    inner = _interior(values)
    if initial is not None:
        values[inner] = initial.values[inner]
    elif p == 0:
        values[inner] = np.mean(boundary.values[~interior_mask(spec)])
    else:
        logger.info(f"Warm start for p={p:g} from the p=0 solution")
        warm, _ = solve_dirichlet(spec, f, boundary, 0.0, C)
        values[inner] = warm.values[inner]
    return values


def solve_dirichlet(
        spec: GridSpec,
        f: ScalarField,
        boundary: ScalarField,
        p: float,
        C: SolveConfig = SolveConfig(),
        initial: Optional[ScalarField] = None,
) -> Tuple[ScalarField, SolveReport]:
    """Relax to the discrete Dirichlet solution of sum |D_i u|^p D_ii u = f.

    Parameters
    ----------
    spec : GridSpec
    f : ScalarField
        Right-hand side; boundary values are ignored.
    boundary : ScalarField
        Dirichlet data on the boundary nodes; interior values are ignored.
    p : float
    C : SolveConfig
    initial : ScalarField, optional
        Interior initial iterate. Defaults to the mean boundary value for
        p = 0 and to the p = 0 solution for p > 0.

    Returns
    -------
    u : ScalarField
    report : SolveReport

    Raises
    ------
    DivergenceError
        If the residual exceeds ten times its initial value.
    """
    p = check_exponent(p)
    if f.spec != spec or boundary.spec != spec:
        raise InvalidInputError("forcing and boundary data must live on the solve grid")
    h = spec.h
    values = _initial_iterate(spec, f, boundary, p, C, initial)
    inner = _interior(values)
    rhs = f.values[inner]
    report = SolveReport(p=p, h=h, mode=C.mode)
    for step in range(C.max_steps + 1):
        true_op, scheme_op, total = _operator(values, h, p, C.floor)
        residual = float(np.max(np.abs(true_op - rhs)))
        if step == 0:
            report.initial_residual = residual
        report.steps, report.residual = step, residual
        if step % LOG_EVERY == 0:
            report.history.append((step, residual))
            logger.debug(f"step {step}: residual {residual:.3e}")
        if residual <= C.tol:
            report.converged = True
            break
        if residual > DIVERGENCE_FACTOR * report.initial_residual:
            logger.error(f"Relaxation diverged at step {step}: residual {residual:.3e}")
            raise DivergenceError(
                f"residual {residual:.3e} exceeds {DIVERGENCE_FACTOR:g} times the"
                f" initial {report.initial_residual:.3e}",
                report,
            )
        if step == C.max_steps:
            break
        active = total > 0
        dt = np.where(active, C.safety * h ** 2 / (2.0 * np.where(active, total, 1.0)), 0.0)
        values[inner] += dt * (scheme_op - rhs)
        report.dt_min = float(np.min(dt[active])) if np.any(active) else 0.0
        report.dt_max = float(np.max(dt))
        report.dt_mean = float(np.mean(dt))
    if report.history[-1][0] != report.steps:
        report.history.append((report.steps, report.residual))
    if report.converged:
        logger.info(f"Converged in {report.steps} steps, residual {report.residual:.3e}")
    else:
        logger.warning(
            f"No convergence in {C.max_steps} steps, residual {report.residual:.3e}"
        )
    return ScalarField(spec, values), report


def viscosity_residual_check(
        u: ScalarField, f: ScalarField, p: float, e: EllipticityParams
) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise lower and upper residuals of the Pucci inequalities.

    Evaluated at interior nodes from central-difference derivatives.

    Raises
    ------
    EllipticityNormalizationError
        Unless lambda <= 1 <= Lambda.
    """
    if not e.is_normalized:
        raise EllipticityNormalizationError(
            f"residual checks need lambda <= 1 <= Lambda, got {e.lam}, {e.Lam}"
        )
    g = fd_gradient_field(u)
    H = fd_hessian_field(u)
    rhs = f.values[_interior(f.values)]
    return lower_residual(g, H, p, e, rhs), upper_residual(g, H, p, e, rhs)


def rescale(
        u: ScalarField,
        r: float,
        Kdiv: float,
        f: ScalarField,
        p: float,
        target: Optional[GridSpec] = None,
) -> Tuple[ScalarField, ScalarField]:
    """u(r x) / K and (r^(p+2) / K^(p+1)) f(r x), resampled at nearest nodes.

    Parameters
    ----------
    target : GridSpec, optional
        Grid of the rescaled fields, u's grid by default.

    Raises
    ------
    OutOfDomainError
        If r times the target cube leaves u's cube.
    """
    p = check_exponent(p)
    if not (r > 0 and Kdiv > 0):
        raise InvalidInputError(f"scales must be positive, got r={r}, K={Kdiv}")
    target = u.spec if target is None else target
    if target.dim != u.dim:
        raise InvalidInputError("target grid dimension differs")
    points = r * target.node_coordinates()
    source = u.spec
    offset = np.abs(points - np.asarray(source.center))
    if np.any(offset > source.half_width * (1.0 + 1e-12)):
        raise OutOfDomainError(
            f"r={r} maps the target cube outside the source cube"
        )
    m = source.points_per_axis
    idx = np.rint((points - np.asarray(source.center)) / source.h).astype(int) + (m - 1) // 2
    idx = tuple(np.moveaxis(np.clip(idx, 0, m - 1), -1, 0))
    u_new = ScalarField(target, u.values[idx] / Kdiv)
    f_new = ScalarField(target, r ** (p + 2) / Kdiv ** (p + 1) * f.values[idx])
    return u_new, f_new


@dataclass(frozen=True)
class ManufacturedProblem:
    """Exact solution and forcing on the unit cube [0, 1]^n."""
    name: str
    exact: Callable[[np.ndarray, float], np.ndarray]
    forcing: Callable[[np.ndarray, float], np.ndarray]


def _exp_coefficients(n: int) -> np.ndarray:
    return 0.5 ** np.arange(n)


def _poisson_exp(x, p):
    c = _exp_coefficients(x.shape[-1])
    return np.exp(x @ c)


def _poisson_exp_forcing(x, p):
    c = _exp_coefficients(x.shape[-1])
    u = np.exp(x @ c)
    return np.sum(np.abs(c * u[..., None]) ** p * c ** 2, axis=-1) * u


MANUFACTURED: Dict[str, ManufacturedProblem] = {
    problem.name: problem
    for problem in (
        ManufacturedProblem(
            "poisson-quadratic",
            lambda x, p: np.sum(x ** 2, axis=-1),
            lambda x, p: np.sum(2.0 * np.abs(2.0 * x) ** p, axis=-1),
        ),
        ManufacturedProblem("poisson-exp", _poisson_exp, _poisson_exp_forcing),
        ManufacturedProblem(
            "pseudo-quadratic",
            lambda x, p: np.sum(x ** 2, axis=-1) / 2.0,
            lambda x, p: np.sum(np.abs(x) ** p, axis=-1),
        ),
        ManufacturedProblem(
            "pseudo-exp",
            lambda x, p: np.sum(np.exp(x), axis=-1),
            lambda x, p: np.sum(np.exp((p + 1.0) * x), axis=-1),
        ),
    )
}


def unit_cube_spec(dim: int, points_per_axis: int) -> GridSpec:
    return GridSpec(dim=dim, points_per_axis=points_per_axis, half_width=0.5, center=(0.5,) * dim)


def manufactured_setup(
        name: str, dim: int, points_per_axis: int, p: float
) -> Tuple[GridSpec, ScalarField, ScalarField]:
    """Grid, forcing and exact solution (also the boundary data) of a problem."""
    if name not in MANUFACTURED:
        raise InvalidInputError(
            f"unknown manufactured problem {name!r}, expected one of {sorted(MANUFACTURED)}"
        )
    problem = MANUFACTURED[name]
    spec = unit_cube_spec(dim, points_per_axis)
    exact = sample_field(spec, lambda x: problem.exact(x, p))
    forcing = sample_field(spec, lambda x: problem.forcing(x, p))
    return spec, forcing, exact


def convergence_study(
        name: str,
        levels: Sequence[int],
        p: float,
        C: SolveConfig = SolveConfig(),
        dim: int = 2,
) -> pd.DataFrame:
    """Solve a manufactured problem on each grid and tabulate max errors.

    Returns
    -------
    pd.DataFrame
        Columns points_per_axis, h, error, order, steps, residual; order is
        log(e_prev / e) / log(h_prev / h) and undefined on the first row.
    """
    rows = []
    for m in levels:
        spec, forcing, exact = manufactured_setup(name, dim, m, p)
        u, report = solve_dirichlet(spec, forcing, exact, p, C)
        error = float(np.max(np.abs(u.values - exact.values)))
        rows.append(
            {
                "points_per_axis": m,
                "h": spec.h,
                "error": error,
                "steps": report.steps,
                "residual": report.residual,
            }
        )
        logger.info(f"{name} p={p:g} m={m}: error {error:.3e} in {report.steps} steps")
    table = pd.DataFrame(rows, columns=["points_per_axis", "h", "error", "steps", "residual"])
    with np.errstate(divide="ignore", invalid="ignore"):
        order = np.log(table["error"].shift(1) / table["error"]) / np.log(
            table["h"].shift(1) / table["h"]
        )
    table.insert(3, "order", order)
    return table


def observed_order(table: pd.DataFrame) -> float:
    """Slope of log error against log h over the whole table."""
    slope, _ = np.polyfit(np.log(table["h"]), np.log(table["error"]), 1)
    return float(slope)
