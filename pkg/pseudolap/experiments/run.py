"""Run one experiment kind from a config file and write its reports.

    python -m pseudolap.experiments.run slide --config slide.cfg --out results

writes results/slide.json, results/slide.csv, results/slide.svg when the
kind produces a curve, results/slide.field when it produces a field, and
appends to results/slide.log. Exit status is 0 on success, 2 when the
experiment's checks fail and 1 on usage, configuration or I/O errors.
"""
import argparse
import logging
import os
import sys
from typing import List, Optional

from pseudolap import locations
from pseudolap.errors import (
    ConfigError,
    DivergenceError,
    FieldFormatError,
    InvalidInputError,
    SearchFailureError,
)
from pseudolap.experiments.config import KINDS, ExperimentConfig, read_config
from pseudolap.experiments.kinds import RUNNERS
from pseudolap.experiments.util import output_paths, write_csv, write_json, write_svg
from pseudolap.fields import field_io_write


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2


def run(config: ExperimentConfig, out: str) -> int:
    """Run config.kind and write its reports into out.

    Returns
    -------
    int
        EXIT_OK, or EXIT_FAILED when the experiment's checks fail. A solver
        divergence or an exhausted exponent ladder also counts as a failed
        experiment and leaves a JSON report with the error message.

    Raises
    ------
    OSError
        If out or a report file cannot be written.
    """
    os.makedirs(out, exist_ok=True)
    paths = output_paths(out, config.kind)
    try:
        result = RUNNERS[config.kind](config)
    except (DivergenceError, SearchFailureError) as err:
        logger.exception(f"{config.kind} experiment failed")
        write_json({"kind": config.kind, "passed": False, "error": str(err)}, paths["json"])
        return EXIT_FAILED
    summary = dict(result.summary, kind=config.kind)
    write_json(summary, paths["json"])
    if result.table is not None:
        write_csv(result.table, paths["csv"])
    if result.curve is not None:
        write_svg(result.curve, paths["svg"])
    if result.field is not None:
        field_io_write(result.field, paths["field"])
    if not result.passed:
        logger.error(f"{config.kind} experiment checks failed, see {paths['json']}")
        return EXIT_FAILED
    logger.info(f"{config.kind} experiment passed")
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pseudolap",
        description="Numerical experiments for degenerate pseudo-p-Laplacian regularity.",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", required=True, help="key = value config file")
    parser.add_argument(
        "--out",
        default=locations.OUTPUT_DIR,
        help="report directory (default $PSEUDOLAP_OUTPUT_DIR or ./pseudolap_out)",
    )
    parser.add_argument("--seed", type=int, help="overrides the config seed")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_USAGE
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as err:
        print(f"cannot create output directory {args.out}: {err}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        filename=os.path.join(args.out, f"{args.kind}.log"),
        filemode='a',
        format='%(asctime)s %(name)-12s %(levelname)-8s %(message)s',
        datefmt='%m-%d %H:%M',
        level=logging.DEBUG if args.verbose else logging.INFO,
        force=True,
    )
    try:
        config = read_config(args.config).with_seed(args.seed)
        if config.kind != args.kind:
            raise ConfigError(
                f"config is for {config.kind}, not {args.kind}", "kind", config.line_of("kind")
            )
        return run(config, args.out)
    except (ConfigError, InvalidInputError, FieldFormatError, OSError) as err:
        logger.exception(f"{args.kind} experiment could not run")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
