"""Line-oriented experiment configuration.

A config is a sequence of ``key = value`` lines; ``#`` starts a comment and
blank lines are ignored. List values are comma separated::

    # convergence of the Poisson problem
    kind = solve
    manufactured = poisson-exp
    levels = 9, 17, 33, 65
    p = 0

Every key is checked against the keys of the selected kind, so a typo is
an error rather than a silently ignored setting. Values are re-validated
with the constructors of the library types they feed.
"""
from dataclasses import dataclass, replace
import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from pseudolap.errors import (
    ConfigError,
    ConstraintViolationError,
    InvalidInputError,
    MissingKeyError,
    TypeMismatchError,
    UnknownKeyError,
)
from pseudolap.fields import GridSpec, MAX_GRID_DIM
from pseudolap.operators import EllipticityParams, check_exponent
from pseudolap.profiles import ParaboloidParams, lemma_amplitude, lemma_threshold
from pseudolap.sliding import ThresholdConfig
from pseudolap.solver import MANUFACTURED, SolveConfig


logger = logging.getLogger(__name__)


KINDS = (
    "solve",
    "barrier-verify",
    "slide",
    "infconv",
    "harnack",
    "holder",
    "tail",
    "cz-check",
)

# cz-check indicator arrays hold at most 2**MAX_CZ_CELLS_LOG2 cells
MAX_CZ_CELLS_LOG2 = 24


def _text(value: str) -> str:
    if not value:
        raise ValueError("empty value")
    return value


def _float(value: str) -> float:
    number = float(value)
    if not np.isfinite(number):
        raise ValueError(f"{value} is not finite")
    return number


def _int(value: str) -> int:
    return int(value)


def _list_of(parse: Callable[[str], object]) -> Callable[[str], tuple]:
    def parse_list(value: str) -> tuple:
        items = [item.strip() for item in value.split(",")]
        if not items or any(item == "" for item in items):
            raise ValueError(f"malformed list {value!r}")
        return tuple(parse(item) for item in items)
    return parse_list


# config key -> (ExperimentConfig attribute, parser)
COMMON_KEYS: Dict[str, Tuple[str, Callable]] = {
    "kind": ("kind", _text),
    "dim": ("dim", _int),
    "points_per_axis": ("points_per_axis", _int),
    "half_width": ("half_width", _float),
    "center": ("center", _list_of(_float)),
    "p": ("p", _float),
    "lambda": ("lam", _float),
    "Lambda": ("Lam", _float),
    "seed": ("seed", _int),
    "input": ("input", _text),
    "forcing": ("forcing", _text),
}

KIND_KEYS: Dict[str, Dict[str, Tuple[str, Callable]]] = {
    "solve": {
        "manufactured": ("manufactured", _text),
        "levels": ("levels", _list_of(_int)),
        "tol": ("tol", _float),
        "max_steps": ("max_steps", _int),
        "safety": ("safety", _float),
        "floor": ("floor", _float),
        "boundary": ("boundary", _text),
    },
    "barrier-verify": {"samples": ("samples", _int)},
    "slide": {
        "K": ("K", _float),
        "delta": ("delta", _float),
        "mu": ("mu", _float),
        "M": ("M", _float),
        "eps_deg": ("eps_deg", _float),
        "epsilon": ("epsilon", _float),
        "slice_axes": ("slice_axes", _list_of(_int)),
    },
    "infconv": {"epsilon": ("epsilon", _float)},
    "harnack": {},
    "holder": {},
    "tail": {"thresholds": ("thresholds", _list_of(_float))},
    "cz-check": {
        "level": ("level", _int),
        "instances": ("instances", _int),
        "density": ("density", _float),
        "delta": ("delta", _float),
    },
}

REQUIRED_KEYS: Dict[str, Tuple[str, ...]] = {
    "infconv": ("input", "epsilon"),
    "slide": ("input",),
    "harnack": ("input",),
    "holder": ("input",),
    "tail": ("input", "thresholds"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration.

    Attributes left as None are optional settings whose defaults depend on
    other values (K and M of the slide experiment) or that switch a
    feature off (epsilon pre-pass, forcing file).
    """
    kind: str
    dim: int = 2
    points_per_axis: int = 33
    half_width: float = 1.0
    center: Optional[Tuple[float, ...]] = None
    p: float = 0.0
    lam: float = 1.0
    Lam: float = 1.0
    seed: int = 0
    input: Optional[str] = None
    forcing: Optional[str] = None
    # solve
    manufactured: Optional[str] = None
    levels: Tuple[int, ...] = (9, 17, 33, 65)
    tol: float = 1e-8
    max_steps: int = 1_000_000
    safety: float = 0.9
    floor: float = 0.0
    boundary: Optional[str] = None
    # barrier-verify
    samples: int = 41
    # slide
    K: Optional[float] = None
    delta: float = 0.5
    mu: float = 0.5
    M: Optional[float] = None
    eps_deg: Optional[float] = None
    epsilon: Optional[float] = None
    slice_axes: Tuple[int, ...] = ()
    # tail
    thresholds: Tuple[float, ...] = ()
    # cz-check
    level: int = 5
    instances: int = 100
    density: float = 0.2
    # keys given explicitly, with their line numbers
    lines: Tuple[Tuple[str, int], ...] = ()

    def line_of(self, key: str) -> Optional[int]:
        return dict(self.lines).get(key)

    def has(self, key: str) -> bool:
        return self.line_of(key) is not None

    @property
    def ellipticity(self) -> EllipticityParams:
        return EllipticityParams(self.lam, self.Lam)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.dim, self.points_per_axis, self.half_width, self.center)

    @property
    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            tol=self.tol, max_steps=self.max_steps, safety=self.safety, floor=self.floor
        )

    def paraboloid(self, n: int) -> ParaboloidParams:
        """Sliding paraboloid, K defaulting to lemma_amplitude(n, p)."""
        K = lemma_amplitude(n, self.p) if self.K is None else self.K
        return ParaboloidParams(K=K, p=self.p)

    def thresholds_for(self, n: int) -> ThresholdConfig:
        """Measure thresholds, M defaulting to lemma_threshold(n, p, K)."""
        K = self.paraboloid(n).K
        M = lemma_threshold(n, self.p, K) if self.M is None else self.M
        return ThresholdConfig(delta=self.delta, mu=self.mu, M=M, eps_deg=self.eps_deg)

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        if seed is None:
            return self
        if seed < 0:
            raise ConstraintViolationError(f"seed must be >= 0, got {seed}", "seed")
        return replace(self, seed=seed)


def _split_line(raw: str, number: int) -> Optional[Tuple[str, str]]:
    text = raw.split("#", 1)[0].strip()
    if not text:
        return None
    if "=" not in text:
        raise ConfigError(f"expected 'key = value', got {text!r}", line=number)
    key, value = (part.strip() for part in text.split("=", 1))
    if not key:
        raise ConfigError("missing key before '='", line=number)
    return key, value


def _raw_entries(text: str) -> Dict[str, Tuple[str, int]]:
    entries: Dict[str, Tuple[str, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        pair = _split_line(raw, number)
        if pair is None:
            continue
        key, value = pair
        if key in entries:
            raise ConfigError(
                f"duplicate key, first set on line {entries[key][1]}", key, number
            )
        entries[key] = (value, number)
    return entries


def _check(condition: bool, message: str, config: ExperimentConfig, key: str) -> None:
    if not condition:
        raise ConstraintViolationError(message, key, config.line_of(key))


def _validate_with(build: Callable[[], object], config: ExperimentConfig, *keys: str) -> None:
    """Run a library constructor; its InvalidInputError names the first
    explicitly given key among keys."""
    try:
        build()
    except InvalidInputError as err:
        given = [key for key in keys if config.has(key)]
        key = given[0] if given else keys[0]
        raise ConstraintViolationError(str(err), key, config.line_of(key)) from err


def _validate_common(c: ExperimentConfig) -> None:
    _check(1 <= c.dim <= MAX_GRID_DIM, f"dim must be in 1..{MAX_GRID_DIM}", c, "dim")
    _validate_with(lambda: check_exponent(c.p), c, "p")
    _validate_with(lambda: c.ellipticity, c, "lambda", "Lambda")
    _validate_with(lambda: c.grid, c, "points_per_axis", "half_width", "center")
    _check(c.seed >= 0, "seed must be >= 0", c, "seed")


def _validate_solve(c: ExperimentConfig) -> None:
    if c.manufactured is None and c.boundary is None:
        raise MissingKeyError("solve needs either 'manufactured' or 'boundary'", "manufactured")
    _check(
        c.manufactured is None or c.boundary is None,
        "'manufactured' and 'boundary' are mutually exclusive",
        c,
        "boundary",
    )
    if c.manufactured is not None:
        _check(
            c.manufactured in MANUFACTURED,
            f"manufactured must be one of {sorted(MANUFACTURED)}",
            c,
            "manufactured",
        )
    _check(
        len(c.levels) >= 2 and all(b > a for a, b in zip(c.levels, c.levels[1:])),
        "levels must hold at least two increasing grid sizes",
        c,
        "levels",
    )
    for m in c.levels:
        _validate_with(lambda: GridSpec(c.dim, m), c, "levels")
    _validate_with(lambda: c.solve_config, c, "tol", "max_steps", "safety", "floor")


def _validate_slide(c: ExperimentConfig) -> None:
    _validate_with(lambda: c.paraboloid(c.dim), c, "K")
    _validate_with(lambda: c.thresholds_for(c.dim), c, "M", "delta", "mu", "eps_deg")
    if c.epsilon is not None:
        _check(c.epsilon > 0, "epsilon must be > 0", c, "epsilon")
    _check(
        len(set(c.slice_axes)) == len(c.slice_axes) and all(j >= 0 for j in c.slice_axes),
        "slice_axes must be distinct nonnegative axes",
        c,
        "slice_axes",
    )


def _validate_kind(c: ExperimentConfig) -> None:
    if c.kind == "solve":
        _validate_solve(c)
    elif c.kind == "barrier-verify":
        _check(c.dim <= 4, "barrier verification supports dim <= 4", c, "dim")
        _check(c.samples >= 3, "samples must be >= 3", c, "samples")
    elif c.kind == "slide":
        _validate_slide(c)
    elif c.kind == "infconv":
        _check(c.epsilon > 0, "epsilon must be > 0", c, "epsilon")
    elif c.kind == "tail":
        t = c.thresholds
        _check(
            all(x > 0 for x in t) and all(b > a for a, b in zip(t, t[1:])),
            "thresholds must be positive and strictly increasing",
            c,
            "thresholds",
        )
    elif c.kind == "cz-check":
        _check(
            1 <= c.level and c.level * c.dim <= MAX_CZ_CELLS_LOG2,
            f"level must be >= 1 with (2^level)^dim <= 2^{MAX_CZ_CELLS_LOG2}",
            c,
            "level",
        )
        _check(c.instances >= 1, "instances must be >= 1", c, "instances")
        _check(0 < c.density <= 1, "density must be in (0, 1]", c, "density")
        _check(0 < c.delta < 1, "delta must be in (0, 1)", c, "delta")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an experiment configuration.

    Parameters
    ----------
    text : str
        Config file contents.

    Returns
    -------
    ExperimentConfig
        With defaults filled for every key not given.

    Raises
    ------
    MissingKeyError
        No kind, or a key the kind requires is absent.
    UnknownKeyError
        A key that the selected kind does not accept.
    TypeMismatchError
        A value that does not parse as the key's type.
    ConstraintViolationError
        A value outside its admissible range.
    """
    entries = _raw_entries(text)
    if "kind" not in entries:
        raise MissingKeyError("no experiment kind given", "kind")
    kind, kind_line = entries["kind"]
    if kind not in KINDS:
        raise ConstraintViolationError(
            f"kind must be one of {', '.join(KINDS)}", "kind", kind_line
        )
    accepted = dict(COMMON_KEYS, **KIND_KEYS[kind])
    values = {}
    for key, (value, number) in entries.items():
        if key not in accepted:
            raise UnknownKeyError(f"unknown key for kind {kind}", key, number)
        attribute, parse = accepted[key]
        try:
            values[attribute] = parse(value)
        except ValueError as err:
            raise TypeMismatchError(f"cannot parse {value!r}: {err}", key, number) from err
    for key in REQUIRED_KEYS.get(kind, ()):
        if key not in entries:
            raise MissingKeyError(f"kind {kind} requires this key", key)
    lines = tuple(sorted((key, number) for key, (_, number) in entries.items()))
    config = ExperimentConfig(lines=lines, **values)
    _validate_common(config)
    _validate_kind(config)
    logger.debug(f"Parsed {kind} config with keys {sorted(entries)}")
    return config


def read_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        return parse_config(f.read())

