"""Dyadic cubes, the Calderon-Zygmund check and empirical regularity metrics.

Measures are node-counting measures. The dyadic tree lives on Q_1 = [-1, 1]^n:
level L cubes have side 2^(1-L) and are indexed by integer vectors in
0..2^L - 1. Indicator sets for cz_check are sampled once per finest cube,
so an array of side 2^L holds level L and |Q_1| = 1.
"""
from dataclasses import dataclass, field
import itertools
import logging
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from pseudolap.errors import DyadicTreeError, InvalidInputError
from pseudolap.fields import ScalarField, ball_mask

if TYPE_CHECKING:
    from pseudolap.sliding import MeasureReport


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DyadicCube:
    level: int
    index: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if self.level < 0:
            raise DyadicTreeError(f"negative dyadic level {self.level}")
        if any(not 0 <= i < 2 ** self.level for i in self.index):
            raise DyadicTreeError(
                f"index {self.index} outside 0..{2 ** self.level - 1} at level {self.level}"
            )

    @property
    def dim(self) -> int:
        return len(self.index)

    @property
    def side(self) -> float:
        return 2.0 ** (1 - self.level)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lower = -1.0 + self.side * np.asarray(self.index, dtype=float)
        return lower, lower + self.side

    def contains(self, point) -> bool:
        lower, upper = self.bounds()
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= lower) and np.all(point < upper))


def predecessor(c: DyadicCube) -> DyadicCube:
    """The cube of level - 1 containing c."""
    if c.level == 0:
        raise DyadicTreeError("Q_1 has no predecessor")
    return DyadicCube(c.level - 1, tuple(i // 2 for i in c.index))


def children(c: DyadicCube) -> List[DyadicCube]:
    """The 2^n cubes of level + 1 inside c, in row-major order."""
    return [
        DyadicCube(c.level + 1, tuple(2 * i + o for i, o in zip(c.index, offsets)))
        for offsets in itertools.product((0, 1), repeat=c.dim)
    ]


def dyadic_cube_of(point, level: int) -> DyadicCube:
    """Level-level cube containing point; the upper faces of Q_1 go to the last cube."""
    point = np.asarray(point, dtype=float)
    if np.any(np.abs(point) > 1.0):
        raise InvalidInputError(f"point {point} outside Q_1")
    index = np.floor((point + 1.0) * 2.0 ** level / 2.0).astype(int)
    return DyadicCube(level, tuple(np.clip(index, 0, 2 ** level - 1)))


def _check_indicator(E: np.ndarray) -> int:
    E = np.asarray(E)
    side = E.shape[0]
    if E.ndim < 1 or E.ndim > 4 or any(s != side for s in E.shape):
        raise InvalidInputError(f"indicator array must be a cube, got {E.shape}")
    level = int(round(np.log2(side)))
    if 2 ** level != side:
        raise InvalidInputError(f"indicator side {side} is not a power of two")
    return level


def _block_reduce(E: np.ndarray, level: int, reducer) -> np.ndarray:
    """Apply reducer over every level-level cube of a cell-sampled array."""
    n = E.ndim
    count = 2 ** level
    side = E.shape[0] // count
    blocks = E.reshape(sum(([count, side] for _ in range(n)), []))
    return reducer(blocks, axis=tuple(range(1, 2 * n, 2)))


@dataclass(frozen=True)
class CZVerdict:
    """Outcome of cz_check; violated is None when the conclusion is confirmed."""
    violated: Optional[str]
    measure_E: float
    measure_F: float
    delta: float
    cube: Optional[DyadicCube] = None

    @property
    def holds(self) -> bool:
        return self.violated is None


def cz_check(E, F, delta: float) -> CZVerdict:
    """Check the Calderon-Zygmund covering statement on cell-sampled sets.

    Hypotheses: (1) |E| <= delta; (2) every dyadic cube Q of level >= 1 with
    |E cap Q| > delta |Q| has its predecessor inside F. Conclusion:
    |E| <= delta |F|.

    Parameters
    ----------
    E, F : array_like of bool, shape (2^L,) * n
        One sample per finest dyadic cube, E subset of F.
    delta : float
        In (0, 1).

    Returns
    -------
    CZVerdict
        violated is "hypothesis-1", "hypothesis-2" (with the offending
        cube), "conclusion" or None.

    Raises
    ------
    InvalidInputError
        If E is not a subset of F or the arrays are not dyadic cubes.
    """
    E = np.asarray(E, dtype=bool)
    F = np.asarray(F, dtype=bool)
    if E.shape != F.shape:
        raise InvalidInputError(f"E shape {E.shape} differs from F shape {F.shape}")
    L = _check_indicator(E)
    if not 0 < delta < 1:
        raise InvalidInputError(f"delta must be in (0, 1), got {delta}")
    if np.any(E & ~F):
        raise InvalidInputError("E is not a subset of F")
    measure_E = float(np.mean(E))
    measure_F = float(np.mean(F))

    def verdict(violated, cube=None):
        return CZVerdict(violated, measure_E, measure_F, delta, cube)

    if measure_E > delta:
        return verdict("hypothesis-1")
    for level in range(1, L + 1):
        density = _block_reduce(E.astype(float), level, np.mean)
        parent_full = _block_reduce(F, level - 1, np.all)
        for index in zip(*np.nonzero(density > delta)):
            if not parent_full[tuple(i // 2 for i in index)]:
                cube = DyadicCube(level, index)
                logger.debug(f"hypothesis 2 fails at {cube}")
                return verdict("hypothesis-2", cube)
    if measure_E > delta * measure_F:
        logger.error(
            f"Covering conclusion fails with |E|={measure_E}, |F|={measure_F},"
            f" delta={delta}"
        )
        return verdict("conclusion")
    return verdict(None)


def cz_closure(E, delta: float) -> np.ndarray:
    """Smallest F containing E and the predecessor of every cube where E
    has density above delta."""
    E = np.asarray(E, dtype=bool)
    L = _check_indicator(E)
    F = E.copy()
    for level in range(1, L + 1):
        density = _block_reduce(E.astype(float), level, np.mean)
        side = E.shape[0] // 2 ** (level - 1)
        for index in zip(*np.nonzero(density > delta)):
            parent = tuple(i // 2 for i in index)
            F[tuple(slice(j * side, (j + 1) * side) for j in parent)] = True
    return F


def random_cz_instance(
        rng: np.random.Generator, n: int, level: int, density: float, delta: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Random E with |E| <= delta and F = cz_closure(E, delta)."""
    E = rng.random((2 ** level,) * n) < density
    while np.mean(E) > delta:
        E &= rng.random(E.shape) < 0.5
    return E, cz_closure(E, delta)


def lp_norm_grid(f: ScalarField, exponent: Optional[float] = None, mask=None) -> float:
    """(sum |f|^q h^n)^(1/q) over masked nodes, q = n and mask = B_1 by default."""
    q = float(f.dim if exponent is None else exponent)
    if mask is None:
        mask = ball_mask(f.spec, 1.0)
    total = np.sum(np.abs(f.values[mask]) ** q) * f.h ** f.dim
    return float(total ** (1.0 / q))


@dataclass(frozen=True)
class TailCurve:
    thresholds: np.ndarray
    fractions: np.ndarray


@dataclass(frozen=True)
class TailFit:
    """Fit |{u > t}| ~ C t^(-epsilon) over thresholds[start:stop]."""
    epsilon: Optional[float]
    C: Optional[float]
    residual: Optional[float]
    start: int
    stop: int
    notice: Optional[str] = None


def tail_distribution(u: ScalarField, thresholds: Sequence[float], mask=None) -> TailCurve:
    """Fraction of (masked) nodes with u > t for every threshold t.

    Raises
    ------
    InvalidInputError
        If min u > 1 (the field must be normalized) or the thresholds are
        not positive and increasing.
    """
    t = np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise InvalidInputError("thresholds must be positive and strictly increasing")
    values = u.values if mask is None else u.values[mask]
    if np.min(values) > 1.0:
        raise InvalidInputError(
            f"tail distribution needs inf u <= 1, got {float(np.min(values))}"
        )
    fractions = np.array([np.mean(values > level) for level in t])
    return TailCurve(t, fractions)


def fit_tail(curve: TailCurve, min_points: int = 3) -> TailFit:
    """Least-squares fit of log fraction against log t.

    The window drops the flat head (the leading run equal to the first
    fraction) and the empty tail (zero fractions).
    """
    f = curve.fractions
    run = 1
    while run < len(f) and f[run] == f[0]:
        run += 1
    if run > 1 or f[0] >= 1.0:
        start = run
    else:
        start = 0
    stop = start
    while stop < len(f) and f[stop] > 0:
        stop += 1
    if stop - start < min_points:
        notice = f"fit undefined: {stop - start} decaying points"
        logger.warning(notice)
        return TailFit(None, None, None, start, stop, notice)
    x = np.log(curve.thresholds[start:stop])
    y = np.log(f[start:stop])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return TailFit(float(-slope), float(np.exp(intercept)), residual, start, stop)


@dataclass(frozen=True)
class HarnackReport:
    ratio: Optional[float]
    sup: float
    inf: float
    forcing_norm: float
    notice: Optional[str] = None


def harnack_report(u: ScalarField, f: ScalarField, p: float) -> HarnackReport:
    """sup over B_{1/2} of u divided by (inf over B_{1/2} + ||f||_{L^n(B_1)}^(1/(1+p)))."""
    if np.min(u.values) < 0:
        raise InvalidInputError("Harnack ratio needs u >= 0")
    if f.spec != u.spec:
        raise InvalidInputError("forcing and solution grids differ")
    half = ball_mask(u.spec, 0.5)
    if not np.any(half):
        raise InvalidInputError("grid has no node in B_{1/2}")
    sup = float(np.max(u.values[half]))
    inf = float(np.min(u.values[half]))
    norm = lp_norm_grid(f)
    denominator = inf + norm ** (1.0 / (1.0 + p))
    if denominator == 0:
        notice = "Harnack denominator is zero (u and f vanish on B_{1/2})"
        logger.warning(notice)
        return HarnackReport(None, sup, inf, norm, notice)
    return HarnackReport(sup / denominator, sup, inf, norm)


@dataclass(frozen=True)
class HolderReport:
    alpha: Optional[float]
    radii: np.ndarray
    oscillations: np.ndarray
    residual: Optional[float]
    notice: Optional[str] = None


def _ball_footprint(radius: float, h: float, n: int) -> np.ndarray:
    R = int(np.ceil(radius / h))
    offsets = np.arange(-R, R + 1) * h
    grid = np.meshgrid(*([offsets] * n), indexing="ij")
    return sum(g ** 2 for g in grid) <= radius ** 2 * (1.0 + 1e-12)


def holder_report(u: ScalarField, min_radius_cells: int = 8) -> HolderReport:
    """Fit osc(r) ~ r^alpha over dyadic radii 1/4, 1/8, ... down to 8h.

    osc(r) is the largest oscillation of u over the nodes of closed balls
    B_r(c) with centers c at the nodes of B_{1/2}.
    """
    h = u.h
    radii = []
    r = 0.25
    while r >= min_radius_cells * h:
        radii.append(r)
        r /= 2.0
    centers = ball_mask(u.spec, 0.5)
    oscillations = []
    for r in radii:
        footprint = _ball_footprint(r, h, u.dim)
        upper = ndimage.maximum_filter(u.values, footprint=footprint, mode="nearest")
        lower = ndimage.minimum_filter(u.values, footprint=footprint, mode="nearest")
        oscillations.append(float(np.max((upper - lower)[centers])))
    radii = np.array(radii)
    oscillations = np.array(oscillations)
    if len(radii) < 2 or np.any(oscillations <= 0):
        notice = "fit undefined: zero oscillation or fewer than two radii"
        logger.warning(notice)
        return HolderReport(None, radii, oscillations, None, notice)
    x, y = np.log(radii), np.log(oscillations)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return HolderReport(float(slope), radii, oscillations, residual)


@dataclass
class RegularityReport:
    """Empirical regularity constants of one field, with their fit residuals."""
    harnack_ratio: Optional[float] = None
    holder_alpha: Optional[float] = None
    holder_residual: Optional[float] = None
    tail_epsilon: Optional[float] = None
    tail_C: Optional[float] = None
    tail_residual: Optional[float] = None
    measure_C: Optional[float] = None
    notices: List[str] = field(default_factory=list)


def regularity_report(
        u: ScalarField,
        f: ScalarField,
        p: float,
        thresholds: Sequence[float],
        measure: Optional["MeasureReport"] = None,
) -> RegularityReport:
    """Harnack ratio, Holder exponent and tail fit of u in one report.

    The tail curve is taken over the nodes of B_1 after dividing u by its
    infimum there when that infimum exceeds 1. measure_C is copied from a
    measure experiment run on the same field, when one is given.
    """
    report = RegularityReport()
    if measure is not None:
        report.measure_C = measure.empirical_C
    harnack = harnack_report(u, f, p)
    report.harnack_ratio = harnack.ratio
    holder = holder_report(u)
    report.holder_alpha, report.holder_residual = holder.alpha, holder.residual
    ball = ball_mask(u.spec, 1.0)
    low = float(np.min(u.values[ball]))
    scaled = u if low <= 1.0 else u.with_values(u.values / low)
    fit = fit_tail(tail_distribution(scaled, thresholds, mask=ball))
    report.tail_epsilon, report.tail_C, report.tail_residual = fit.epsilon, fit.C, fit.residual
    report.notices = [n for n in (harnack.notice, holder.notice, fit.notice) if n]
    return report
