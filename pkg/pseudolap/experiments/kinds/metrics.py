"""harnack, holder and tail: empirical regularity constants of an input field.

harnack JSON: ratio, sup, inf, forcing_norm, p, notice. CSV: one row.
holder JSON: alpha, residual, radii, notice. CSV: radius and oscillation
per radius. SVG: oscillation against radius on log axes.
tail JSON: epsilon, C, residual, window start and stop, notice. CSV: the
tail curve with an in_fit column. SVG: fraction against threshold on log
axes, zero fractions left out.

None of the three fails; an undefined fit is reported as a notice.
"""
import logging

import numpy as np
import pandas as pd

from pseudolap.experiments.config import ExperimentConfig
from pseudolap.experiments.util import Curve, ExperimentResult, load_field, load_forcing
from pseudolap.regularity import fit_tail, harnack_report, holder_report, tail_distribution


logger = logging.getLogger(__name__)


def run_harnack(config: ExperimentConfig) -> ExperimentResult:
    u = load_field(config.input, config)
    f = load_forcing(config, u)
    report = harnack_report(u, f, config.p)
    summary = {
        "p": config.p,
        "ratio": report.ratio,
        "sup": report.sup,
        "inf": report.inf,
        "forcing_norm": report.forcing_norm,
        "notice": report.notice,
        "passed": True,
    }
    table = pd.DataFrame([summary], columns=["p", "ratio", "sup", "inf", "forcing_norm"])
    return ExperimentResult(summary, True, table=table)


def run_holder(config: ExperimentConfig) -> ExperimentResult:
    u = load_field(config.input, config)
    report = holder_report(u)
    summary = {
        "alpha": report.alpha,
        "residual": report.residual,
        "radii": len(report.radii),
        "h": u.h,
        "notice": report.notice,
        "passed": True,
    }
    table = pd.DataFrame({"radius": report.radii, "oscillation": report.oscillations})
    curve = None
    if len(report.radii) > 0 and np.all(report.oscillations > 0):
        curve = Curve(
            report.radii.tolist(),
            report.oscillations.tolist(),
            "radius",
            "oscillation",
            "oscillation decay",
            loglog=True,
        )
    return ExperimentResult(summary, True, table=table, curve=curve)


def run_tail(config: ExperimentConfig) -> ExperimentResult:
    u = load_field(config.input, config)
    curve = tail_distribution(u, config.thresholds)
    fit = fit_tail(curve)
    summary = {
        "epsilon": fit.epsilon,
        "C": fit.C,
        "residual": fit.residual,
        "start": fit.start,
        "stop": fit.stop,
        "notice": fit.notice,
        "passed": True,
    }
    in_fit = np.zeros(len(curve.thresholds), dtype=bool)
    if fit.epsilon is not None:
        in_fit[fit.start:fit.stop] = True
    table = pd.DataFrame(
        {"threshold": curve.thresholds, "fraction": curve.fractions, "in_fit": in_fit}
    )
    positive = curve.fractions > 0
    plot = None
    if np.count_nonzero(positive) > 1:
        plot = Curve(
            curve.thresholds[positive].tolist(),
            curve.fractions[positive].tolist(),
            "t",
            "fraction of nodes with u > t",
            "distribution tail",
            loglog=True,
        )
    if fit.epsilon is not None:
        logger.info(f"Tail exponent {fit.epsilon:.4g}, C={fit.C:.4g}")
    return ExperimentResult(summary, True, table=table, curve=plot)
