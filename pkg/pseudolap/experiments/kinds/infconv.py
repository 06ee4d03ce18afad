"""infconv: discrete inf-convolution of an input field.

JSON schema: epsilon, h, below_input (u_eps <= u everywhere),
max_excess (max of u_eps - u), semiconcavity_bound (2/epsilon),
max_second_difference, passed. CSV: one row per axis with the largest
second difference along it. Field: the convolved values.
"""
import logging

import numpy as np
import pandas as pd

from pseudolap.experiments.config import ExperimentConfig
from pseudolap.experiments.util import ExperimentResult, load_field
from pseudolap.fields import fd_second_field
from pseudolap.regularize import InfConvParams, inf_convolution


logger = logging.getLogger(__name__)

# round-off allowance on the ordering and semiconcavity checks
CHECK_TOLERANCE = 1e-9


def run_infconv(config: ExperimentConfig) -> ExperimentResult:
    u = load_field(config.input, config)
    u_eps = inf_convolution(u, InfConvParams(config.epsilon))
    second = fd_second_field(u_eps)
    per_axis = second.reshape(-1, u.dim).max(axis=0)
    bound = 2.0 / config.epsilon
    max_excess = float(np.max(u_eps.values - u.values))
    max_second = float(per_axis.max())
    scale = 1.0 + float(np.max(np.abs(u.values)))
    passed = (
        max_excess <= CHECK_TOLERANCE * scale
        and max_second <= bound * (1.0 + CHECK_TOLERANCE) + CHECK_TOLERANCE * scale / u.h ** 2
    )
    summary = {
        "epsilon": config.epsilon,
        "h": u.h,
        "below_input": max_excess <= CHECK_TOLERANCE * scale,
        "max_excess": max_excess,
        "semiconcavity_bound": bound,
        "max_second_difference": max_second,
        "passed": passed,
    }
    table = pd.DataFrame(
        {"axis": np.arange(u.dim), "max_second_difference": per_axis, "bound": bound}
    )
    logger.info(f"Inf-convolution: max second difference {max_second:.6g} <= {bound:.6g}")
    return ExperimentResult(summary, passed, table=table, field=u_eps)
