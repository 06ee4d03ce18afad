"""cz-check: the dyadic covering statement on random instances.

Each instance draws E with density about `density`, closes it under the
predecessor rule and checks the conclusion with cz_check.

JSON schema: dim, level, instances, density, delta, seed, confirmed,
violations (instance numbers), passed. CSV: one row per instance with
measure_E, measure_F, violated.
"""
import logging

import numpy as np
import pandas as pd

from pseudolap.experiments.config import ExperimentConfig
from pseudolap.experiments.util import ExperimentResult
from pseudolap.regularity import cz_check, random_cz_instance


logger = logging.getLogger(__name__)


def run_cz_check(config: ExperimentConfig) -> ExperimentResult:
    rng = np.random.default_rng(config.seed)
    rows = []
    for instance in range(config.instances):
        E, F = random_cz_instance(rng, config.dim, config.level, config.density, config.delta)
        verdict = cz_check(E, F, config.delta)
        rows.append(
            {
                "instance": instance,
                "measure_E": verdict.measure_E,
                "measure_F": verdict.measure_F,
                "violated": verdict.violated or "-",
            }
        )
    table = pd.DataFrame(rows, columns=["instance", "measure_E", "measure_F", "violated"])
    violations = table.loc[table["violated"] != "-", "instance"].tolist()
    if violations:
        logger.error(f"Covering check failed on instances {violations}")
    summary = {
        "dim": config.dim,
        "level": config.level,
        "instances": config.instances,
        "density": config.density,
        "delta": config.delta,
        "seed": config.seed,
        "confirmed": config.instances - len(violations),
        "violations": violations,
        "passed": not violations,
    }
    return ExperimentResult(summary, not violations, table=table)
