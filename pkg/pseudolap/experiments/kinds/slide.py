"""slide: measure estimate by sliding paraboloids over an input field.

JSON schema: the MeasureReport summary, plus vertex_counts and
touch_counts keyed by nondegenerate index set ("-" for the empty set) and
epsilon (null without an inf-convolution pre-pass). CSV: one row per
vertex with vertex and touch coordinates, touch node, offset, index set,
jac_det and min_eigenvalue.
"""
import logging
from typing import Sequence

import pandas as pd

from pseudolap.errors import ConfigError
from pseudolap.experiments.config import ExperimentConfig
from pseudolap.experiments.util import ExperimentResult, load_field, load_forcing
from pseudolap.regularize import InfConvParams, inf_convolution
from pseudolap.sliding import (
    TouchingRecord,
    format_index_set,
    measure_estimate_experiment,
    sliced_measure_experiment,
)


logger = logging.getLogger(__name__)


def records_frame(records: Sequence[TouchingRecord], n: int) -> pd.DataFrame:
    columns = (
        [f"vertex_{i}" for i in range(n)]
        + [f"touch_{i}" for i in range(n)]
        + [f"node_{i}" for i in range(n)]
        + ["offset", "nondeg_set", "jac_det", "min_eigenvalue"]
    )
    rows = [
        list(r.vertex)
        + list(r.touch)
        + list(r.touch_index)
        + [r.offset, format_index_set(r.nondeg_set), r.jac_det, r.min_eigenvalue]
        for r in records
    ]
    return pd.DataFrame(rows, columns=columns)


def run_slide(config: ExperimentConfig) -> ExperimentResult:
    u = load_field(config.input, config)
    f = load_forcing(config, u)
    if config.epsilon is not None:
        u = inf_convolution(u, InfConvParams(config.epsilon))
        logger.info(f"Inf-convolved input with eps={config.epsilon:g}")
    axes = config.slice_axes
    if any(j >= u.dim for j in axes) or len(axes) >= u.dim:
        raise ConfigError(
            f"slice_axes must leave a free axis of the {u.dim}-d input",
            "slice_axes",
            config.line_of("slice_axes"),
        )
    P = config.paraboloid(u.dim)
    T = config.thresholds_for(u.dim)
    if axes:
        report = sliced_measure_experiment(u, f, T, P, axes)
    else:
        report = measure_estimate_experiment(u, f, T, P)
    summary = report.summary()
    summary["epsilon"] = config.epsilon
    summary["vertex_counts"] = {
        format_index_set(k): v for k, v in report.vertex_counts.items()
    }
    summary["touch_counts"] = {
        format_index_set(k): v for k, v in report.touch_counts.items()
    }
    return ExperimentResult(summary, report.passed, table=records_frame(report.records, u.dim))
