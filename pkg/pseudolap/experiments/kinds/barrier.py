"""barrier-verify: exponent ladder and amplitude of the doubling barrier.

JSON schema: dim, p, lambda, Lambda, samples, sample_points, a, log2_K,
shift_log2_K, min_normalized_residual, min_log_shifted_residual,
max_closed_form_gap (relative), passed. CSV: one row per ladder exponent with its
minimum normalized residual. SVG: that minimum against a.
"""
import logging

import numpy as np
import pandas as pd

from pseudolap.experiments.config import ExperimentConfig
from pseudolap.experiments.util import Curve, ExperimentResult
from pseudolap.profiles import (
    BarrierParams,
    bnorm_eval,
    barrier_log_shifted_residual,
    barrier_lower_residual,
    barrier_normalized_residual,
    barrier_residual_closed_form,
    barrier_shift_log2_amplitude,
    sample_minimum,
    select_barrier_params,
    verification_sample,
)


logger = logging.getLogger(__name__)

# |log| of the largest residual scale evaluated directly
LOG_RANGE = 600.0


def _closed_form_gap(pts, B: BarrierParams, e) -> np.ndarray:
    """Relative gap between the two residual code paths.

    Only points where the unnormalized residual is representable count;
    elsewhere the gap is 0.
    """
    gap = np.zeros(len(pts))
    log_scale = -(B.a + 1.0) * (B.p + 1.0) * np.log(bnorm_eval(pts, B.b))
    ok = np.abs(log_scale) < LOG_RANGE
    if np.any(ok):
        closed = barrier_residual_closed_form(pts[ok], B, e)
        direct = barrier_lower_residual(pts[ok], B, e)
        gap[ok] = np.abs(closed - direct) / np.maximum(np.abs(direct), np.finfo(float).tiny)
    return gap


def run_barrier_verify(config: ExperimentConfig) -> ExperimentResult:
    n, p, e = config.dim, config.p, config.ellipticity
    B = select_barrier_params(n, p, e, config.samples)
    sample = verification_sample(n, config.samples)
    rows = []
    a = 2.0
    while a <= B.a:
        trial = BarrierParams(a=a, p=p)
        rows.append(
            {
                "a": a,
                "min_normalized_residual": sample_minimum(
                    lambda pts: barrier_normalized_residual(pts, trial, e), sample
                ),
            }
        )
        a *= 2.0
    table = pd.DataFrame(rows, columns=["a", "min_normalized_residual"])
    min_normalized = float(table["min_normalized_residual"].iloc[-1])
    min_log_shifted = sample_minimum(
        lambda pts: barrier_log_shifted_residual(pts, B, e), sample
    )
    closed_form_gap = -sample_minimum(lambda pts: -_closed_form_gap(pts, B, e), sample)
    passed = min_normalized > 1.0 and min_log_shifted > 0.0
    summary = {
        "dim": n,
        "p": p,
        "lambda": e.lam,
        "Lambda": e.Lam,
        "samples": config.samples,
        "sample_points": len(sample),
        "a": B.a,
        "log2_K": B.log2_K,
        "shift_log2_K": barrier_shift_log2_amplitude(n, B.a, p),
        "min_normalized_residual": min_normalized,
        "min_log_shifted_residual": min_log_shifted,
        "max_closed_form_gap": closed_form_gap,
        "passed": passed,
    }
    logger.info(
        f"Barrier a={B.a:g}, K=2**{B.log2_K:g}: normalized residual >= {min_normalized:.6g}"
    )
    curve = Curve(
        table["a"].tolist(),
        table["min_normalized_residual"].tolist(),
        "a",
        "min normalized residual",
        f"barrier ladder, n = {n}, p = {p:g}",
        loglog=bool(np.all(table["min_normalized_residual"] > 0)),
    )
    return ExperimentResult(summary, passed, table=table, curve=curve)
