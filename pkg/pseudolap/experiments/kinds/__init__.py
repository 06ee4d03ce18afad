"""One module per experiment kind; RUNNERS maps a kind to its entry point."""
from typing import Callable, Dict

from pseudolap.experiments.config import ExperimentConfig
from pseudolap.experiments.util import ExperimentResult

from .barrier import run_barrier_verify
from .cz import run_cz_check
from .infconv import run_infconv
from .metrics import run_harnack, run_holder, run_tail
from .slide import run_slide
from .solve import run_solve


RUNNERS: Dict[str, Callable[[ExperimentConfig], ExperimentResult]] = {
    "solve": run_solve,
    "barrier-verify": run_barrier_verify,
    "slide": run_slide,
    "infconv": run_infconv,
    "harnack": run_harnack,
    "holder": run_holder,
    "tail": run_tail,
    "cz-check": run_cz_check,
}
