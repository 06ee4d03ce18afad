"""Report writers and shared plumbing for the experiment kinds.

Reports must be byte-identical across reruns: JSON is written with sorted
keys, CSV floats with a fixed format, and SVG with a fixed hash salt and
no date stamp.
"""
from contextlib import contextmanager
from dataclasses import dataclass
import json
import logging
import math
import os
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from pseudolap.errors import ConfigError  # noqa: E402
from pseudolap.fields import ScalarField, field_io_read  # noqa: E402


logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.12g"
SVG_HASH_SALT = "pseudolap"


@dataclass
class Curve:
    x: Sequence[float]
    y: Sequence[float]
    xlabel: str
    ylabel: str
    title: str
    loglog: bool = False


@dataclass
class ExperimentResult:
    """What one experiment kind hands back to the driver.

    summary becomes <kind>.json, table <kind>.csv, curve <kind>.svg and
    field <kind>.field.
    """
    summary: Dict[str, object]
    passed: bool
    table: Optional[pd.DataFrame] = None
    curve: Optional[Curve] = None
    field: Optional[ScalarField] = None


def jsonable(value):
    """Plain JSON types; non-finite floats become the strings inf, -inf, nan."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    return value


def write_json(summary: Dict[str, object], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(jsonable(summary), indent=2, sort_keys=True))
        f.write("\n")
    logger.info(f"Wrote report {path}")


def write_csv(table: pd.DataFrame, path: str) -> None:
    table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.info(f"Wrote {len(table)} rows to {path}")


@contextmanager
def managed_figure():
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        try:
            yield fig, ax
        finally:
            plt.close(fig)


def write_svg(curve: Curve, path: str) -> None:
    """Line plot of a curve, log-log when curve.loglog is set."""
    with managed_figure() as (fig, ax):
        ax.plot(curve.x, curve.y, marker="o")
        if curve.loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(curve.xlabel)
        ax.set_ylabel(curve.ylabel)
        ax.set_title(curve.title)
        ax.grid(True, which="both", linewidth=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    logger.info(f"Wrote plot {path}")


def load_field(path: str, config=None, key: str = "input") -> ScalarField:
    """Read a field file; grid keys given explicitly in config must match it.

    Raises
    ------
    ConfigError
        If dim, points_per_axis, half_width or center were set and differ
        from the field's grid.
    """
    u = field_io_read(path)
    if config is None:
        return u
    expected = {
        "dim": u.dim,
        "points_per_axis": u.spec.points_per_axis,
        "half_width": u.spec.half_width,
        "center": u.spec.center,
    }
    for name, actual in expected.items():
        if config.has(name) and getattr(config, name) != actual:
            raise ConfigError(
                f"{path} has {name}={actual}, config says {getattr(config, name)}",
                name,
                config.line_of(name),
            )
    logger.info(f"Loaded {key} field {u.spec.shape} from {path}")
    return u


def load_forcing(config, u: ScalarField) -> ScalarField:
    """Forcing field from config.forcing, zero on u's grid when not given."""
    if config.forcing is None:
        return u.with_values(np.zeros(u.spec.shape))
    f = field_io_read(config.forcing)
    if f.spec != u.spec:
        raise ConfigError(
            f"forcing grid {f.spec} differs from {u.spec}", "forcing", config.line_of("forcing")
        )
    return f


def output_paths(out: str, kind: str) -> Dict[str, str]:
    return {
        suffix: os.path.join(out, f"{kind}.{suffix}")
        for suffix in ("json", "csv", "svg", "field", "log")
    }
