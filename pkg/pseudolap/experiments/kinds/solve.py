"""solve: manufactured convergence study, or one Dirichlet solve from field files.

JSON schema (manufactured): manufactured, dim, p, levels, observed_order,
max_residual, tol, passed. CSV: the convergence table. SVG: error against
h on log axes.

JSON schema (boundary file): the SolveReport summary plus the extreme
viscosity residuals, min_lower_residual and max_upper_residual. CSV: the
residual history. SVG: residual against step.
"""
import logging

import numpy as np
import pandas as pd

from pseudolap.experiments.config import ExperimentConfig
from pseudolap.experiments.util import Curve, ExperimentResult, load_field
from pseudolap.fields import field_io_read
from pseudolap.solver import (
    convergence_study,
    observed_order,
    solve_dirichlet,
    viscosity_residual_check,
)
from pseudolap.errors import ConfigError


logger = logging.getLogger(__name__)


def run_convergence(config: ExperimentConfig) -> ExperimentResult:
    C = config.solve_config
    table = convergence_study(config.manufactured, config.levels, config.p, C, dim=config.dim)
    order = observed_order(table)
    summary = {
        "manufactured": config.manufactured,
        "dim": config.dim,
        "p": config.p,
        "levels": list(config.levels),
        "observed_order": order,
        "max_residual": float(table["residual"].max()),
        "tol": C.tol,
    }
    passed = bool(np.all(table["residual"] <= C.tol))
    summary["passed"] = passed
    logger.info(f"Observed order {order:.3f} for {config.manufactured}, p={config.p:g}")
    curve = Curve(
        table["h"].tolist(),
        table["error"].tolist(),
        "h",
        "max error",
        f"{config.manufactured}, p = {config.p:g}",
        loglog=True,
    )
    return ExperimentResult(summary, passed, table=table, curve=curve)


def run_boundary_solve(config: ExperimentConfig) -> ExperimentResult:
    boundary = load_field(config.boundary, config, key="boundary")
    if config.forcing is None:
        f = boundary.with_values(np.zeros(boundary.spec.shape))
    else:
        f = field_io_read(config.forcing)
        if f.spec != boundary.spec:
            raise ConfigError(
                "forcing and boundary grids differ", "forcing", config.line_of("forcing")
            )
    u, report = solve_dirichlet(boundary.spec, f, boundary, config.p, config.solve_config)
    lower, upper = viscosity_residual_check(u, f, config.p, config.ellipticity)
    summary = report.summary()
    summary["min_lower_residual"] = float(np.min(lower))
    summary["max_upper_residual"] = float(np.max(upper))
    summary["passed"] = report.converged
    history = pd.DataFrame(report.history, columns=["step", "residual"])
    curve = None
    if len(history) > 1:
        curve = Curve(
            history["step"].tolist(),
            history["residual"].tolist(),
            "step",
            "max residual",
            f"relaxation, p = {config.p:g}",
        )
    return ExperimentResult(summary, report.converged, table=history, curve=curve, field=u)


def run_solve(config: ExperimentConfig) -> ExperimentResult:
    if config.manufactured is not None:
        return run_convergence(config)
    return run_boundary_solve(config)
