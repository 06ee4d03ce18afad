"""Sliding paraboloids and barriers from below, and the measure experiments.

A slide fixes a vertex y and finds the grid node x minimizing
u(z) - phi(z - y); the minimum is the offset C_0 and the touching profile
is phi(. - y) + C_0. Records are classified by their nondegenerate index
set I = {i : |x_i - y_i| > eps_deg}.

The measure experiment slides from every grid node of
{u > M} intersected with Q_{1/4n} and compares vertex counts with touching
counts class by class. The doubling experiment slides the shifted barrier
from every node of Q_{1/8n}.
"""
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pseudolap import locations
from pseudolap.errors import BoundaryProximityError, InvalidInputError
from pseudolap.fields import (
    GridSpec,
    ScalarField,
    cube_mask,
    fd_hessian,
    iter_slices,
    restrict_slice,
)
from pseudolap.operators import sym_eigenvalues, weighted_hessian
from pseudolap.profiles import (
    BarrierParams,
    ParaboloidParams,
    barrier_grad_inverse,
    barrier_log2_sup,
    barrier_shifted_eval,
    barrier_shifted_grad,
    barrier_shifted_hess,
    inverse_gradient_jacobian,
    phi_eval,
    phi_grad,
    phi_hess,
)
from pseudolap.regularity import lp_norm_grid


logger = logging.getLogger(__name__)

PSD_TOLERANCE = 1e-6
RESCAN_TOLERANCE = 1e-12

IndexSet = Tuple[int, ...]


@dataclass(frozen=True)
class ThresholdConfig:
    """Thresholds of the measure estimate.

    eps_deg = None means one grid spacing.
    """
    delta: float
    mu: float
    M: float
    eps_deg: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidInputError(f"delta must be in (0, 1), got {self.delta}")
        if not 0 < self.mu < 1:
            raise InvalidInputError(f"mu must be in (0, 1), got {self.mu}")
        if not self.M > 1:
            raise InvalidInputError(f"M must be > 1, got {self.M}")
        if self.eps_deg is not None and not self.eps_deg >= 0:
            raise InvalidInputError(f"eps_deg must be >= 0, got {self.eps_deg}")

    def degeneracy_threshold(self, h: float) -> float:
        return h if self.eps_deg is None else self.eps_deg


@dataclass(frozen=True)
class TouchingRecord:
    """One slide: vertex y, touching node x and the offset C_0.

    jac_det and min_eigenvalue are filled by the experiments when the
    touch is an interior node.
    """
    vertex: Tuple[float, ...]
    touch: Tuple[float, ...]
    touch_index: Tuple[int, ...]
    offset: float
    nondeg_set: IndexSet
    jac_det: Optional[float] = None
    min_eigenvalue: Optional[float] = None


def format_index_set(index_set: IndexSet) -> str:
    return ",".join(str(i) for i in index_set) if index_set else "-"


def _set_order(index_set: IndexSet):
    return (len(index_set), index_set)


@dataclass
class MeasureReport:
    """Class-by-class vertex and touching counts of a measure experiment."""
    n: int
    p: float
    K: float
    M: float
    delta: float
    mu: float
    eps_deg: float
    h: float
    vertex_counts: Dict[IndexSet, int] = field(default_factory=dict)
    touch_counts: Dict[IndexSet, int] = field(default_factory=dict)
    records: List[TouchingRecord] = field(default_factory=list)
    density_fraction: float = 0.0
    forcing_norm: float = 0.0
    hypothesis_active: bool = False
    touch_violations: int = 0
    self_touch_violations: int = 0
    rescan_failures: int = 0
    psd_violations: int = 0
    min_eigenvalue: Optional[float] = None
    slices: int = 1
    slice_axes: IndexSet = ()
    notice: Optional[str] = None

    @property
    def total_vertices(self) -> int:
        return sum(self.vertex_counts.values())

    @property
    def total_touches(self) -> int:
        return sum(self.touch_counts.values())

    @property
    def empirical_C(self) -> Optional[float]:
        """max over I of |V_I| / (|T_I| + mu^n / h^n), None without vertices."""
        if not self.vertex_counts:
            return None
        budget = self.mu ** self.n / self.h ** self.n
        return max(
            count / (self.touch_counts.get(index_set, 0) + budget)
            for index_set, count in self.vertex_counts.items()
        )

    @property
    def density_ok(self) -> bool:
        return self.density_fraction >= 1.0 - self.delta

    @property
    def forcing_ok(self) -> bool:
        return self.forcing_norm <= self.mu

    @property
    def passed(self) -> bool:
        """False on a failed rescan, or on a touch inside {u >= M} (or above M
        at the vertex itself) while some node of Q_{1/4n} has u <= 1."""
        if self.rescan_failures:
            return False
        return not (
            self.hypothesis_active
            and (self.touch_violations > 0 or self.self_touch_violations > 0)
        )

    def summary(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "p": self.p,
            "K": self.K,
            "M": self.M,
            "delta": self.delta,
            "mu": self.mu,
            "eps_deg": self.eps_deg,
            "h": self.h,
            "total_vertices": self.total_vertices,
            "total_touches": self.total_touches,
            "empirical_C": self.empirical_C,
            "density_fraction": self.density_fraction,
            "density_ok": self.density_ok,
            "forcing_norm": self.forcing_norm,
            "forcing_ok": self.forcing_ok,
            "hypothesis_active": self.hypothesis_active,
            "touch_violations": self.touch_violations,
            "self_touch_violations": self.self_touch_violations,
            "rescan_failures": self.rescan_failures,
            "psd_violations": self.psd_violations,
            "min_eigenvalue": self.min_eigenvalue,
            "slices": self.slices,
            "slice_axes": format_index_set(self.slice_axes),
            "passed": self.passed,
            "notice": self.notice,
        }

    def to_text(self) -> str:
        """Flat key = value block; class counts follow as V[I] and T[I]."""
        lines = [f"{key} = {_format_value(value)}" for key, value in self.summary().items()]
        for index_set in sorted(self.vertex_counts, key=_set_order):
            lines.append(f"V[{format_index_set(index_set)}] = {self.vertex_counts[index_set]}")
            lines.append(
                f"T[{format_index_set(index_set)}] = {self.touch_counts.get(index_set, 0)}"
            )
        return "\n".join(lines) + "\n"


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _vertex_point(u: ScalarField, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (u.dim,) or not u.spec.contains(y):
        raise InvalidInputError(f"vertex {y} is not a point of the grid cube")
    return y


def _touch_from_gap(
        u: ScalarField, gap: np.ndarray, y: np.ndarray, eps_deg: float
) -> TouchingRecord:
    # argmin returns the first minimum in row-major order
    flat = int(np.argmin(gap))
    touch_index = tuple(int(i) for i in np.unravel_index(flat, u.spec.shape))
    x = u.spec.coordinates(touch_index)
    nondeg = tuple(int(i) for i in np.nonzero(np.abs(x - y) > eps_deg)[0])
    return TouchingRecord(
        vertex=tuple(float(c) for c in y),
        touch=tuple(float(c) for c in x),
        touch_index=touch_index,
        offset=float(gap.reshape(-1)[flat]),
        nondeg_set=nondeg,
    )


def paraboloid_gap(u: ScalarField, y, P: ParaboloidParams) -> np.ndarray:
    """u(z) - phi(z - y) at every node."""
    return u.values - phi_eval(u.spec.node_coordinates() - np.asarray(y, dtype=float), P)


def slide_vertex(
        u: ScalarField, y, P: ParaboloidParams, eps_deg: Optional[float] = None
) -> TouchingRecord:
    """Slide phi(. - y) from below until it first touches u.

    Parameters
    ----------
    u : ScalarField
    y : array_like
        Vertex, a point of the grid cube.
    P : ParaboloidParams
    eps_deg : float, optional
        Degeneracy threshold for the index set; one grid spacing by default.
    """
    y = _vertex_point(u, y)
    eps_deg = u.h if eps_deg is None else eps_deg
    return _touch_from_gap(u, paraboloid_gap(u, y, P), y, eps_deg)


def rescan_touching(
        u: ScalarField, record: TouchingRecord, P: ParaboloidParams
) -> bool:
    """Check u(z) - phi(z - y) >= offset everywhere with equality at the touch."""
    gap = paraboloid_gap(u, record.vertex, P)
    tol = RESCAN_TOLERANCE * max(1.0, float(np.max(np.abs(gap))))
    return bool(
        np.all(gap >= record.offset - tol)
        and abs(gap[record.touch_index] - record.offset) <= tol
    )


def vertex_from_gradient(x, g, P: ParaboloidParams) -> np.ndarray:
    """y_i = x_i + K^(-(1+p)) |g_i|^p g_i."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    return x + np.abs(g) ** P.p * g / P.K ** (1.0 + P.p)


def touch_jacobian_det(g, H, P: ParaboloidParams) -> float:
    """det(I + ((1+p)/K^(1+p)) weighted_hessian(g, H, p))."""
    W = weighted_hessian(g, H, P.p)
    n = W.shape[-1]
    return np.linalg.det(np.eye(n) + (1.0 + P.p) / P.K ** (1.0 + P.p) * W)


def touch_jacobian_det_unsymmetrized(g, H, P: ParaboloidParams) -> float:
    """det(I + ((1+p)/K^(1+p)) diag(|g_i|^p) H); equal to touch_jacobian_det."""
    g = np.asarray(g, dtype=float)
    H = np.asarray(H, dtype=float)
    n = H.shape[-1]
    D = np.abs(g) ** P.p
    return np.linalg.det(np.eye(n) + (1.0 + P.p) / P.K ** (1.0 + P.p) * D[..., :, None] * H)


def touch_matrix_A(
        record: TouchingRecord, u: ScalarField, P: ParaboloidParams
) -> np.ndarray:
    """((1+p)/K^(1+p)) W(D phi(x-y), D^2 u(x) - D^2 phi(x-y)) on the axes of I.

    D^2 u is the central-difference Hessian at the touching node.

    Raises
    ------
    BoundaryProximityError
        If the touching node is on the grid boundary.
    """
    axes = list(record.nondeg_set)
    H_u = fd_hessian(u, record.touch_index)[np.ix_(axes, axes)]
    z = (np.asarray(record.touch) - np.asarray(record.vertex))[axes]
    if not axes:
        return np.zeros((0, 0))
    g = phi_grad(z, P)
    return (1.0 + P.p) / P.K ** (1.0 + P.p) * weighted_hessian(g, H_u - phi_hess(z, P), P.p)


def _with_jacobian(
        record: TouchingRecord, u: ScalarField, P: ParaboloidParams
) -> TouchingRecord:
    try:
        A = touch_matrix_A(record, u, P)
    except BoundaryProximityError:
        return record
    axes = list(record.nondeg_set)
    if not axes:
        return replace(record, jac_det=1.0)
    z = (np.asarray(record.touch) - np.asarray(record.vertex))[axes]
    H_u = fd_hessian(u, record.touch_index)[np.ix_(axes, axes)]
    jac = float(touch_jacobian_det(phi_grad(z, P), H_u, P))
    lowest = float(sym_eigenvalues(A)[0])
    return replace(record, jac_det=jac, min_eigenvalue=lowest)


def _run_slides(func, vertices: Sequence[np.ndarray]) -> List[TouchingRecord]:
    if locations.WORKERS > 1 and len(vertices) > 1:
        with ThreadPoolExecutor(max_workers=locations.WORKERS) as pool:
            return list(pool.map(func, vertices))
    return [func(y) for y in vertices]


def _check_unit_cube(u: ScalarField, f: ScalarField, half_width: float):
    spec = u.spec
    if abs(spec.half_width - half_width) > 1e-12 * half_width or any(spec.center):
        raise InvalidInputError(
            f"expected a grid on the centered cube of half width {half_width},"
            f" got half_width={spec.half_width}, center={spec.center}"
        )
    if f.spec != spec:
        raise InvalidInputError("forcing and solution grids differ")
    if np.min(u.values) < -1e-12:
        raise InvalidInputError("the measure experiments need u >= 0")


def _lift(
        record: TouchingRecord,
        kept: Sequence[int],
        frozen: Dict[int, Tuple[float, int]],
        n: int,
) -> TouchingRecord:
    """Embed a slice record into full-dimensional coordinates."""
    vertex, touch, index = [0.0] * n, [0.0] * n, [0] * n
    for local, axis in enumerate(kept):
        vertex[axis] = record.vertex[local]
        touch[axis] = record.touch[local]
        index[axis] = record.touch_index[local]
    for axis, (value, node) in frozen.items():
        vertex[axis] = touch[axis] = value
        index[axis] = node
    return replace(
        record,
        vertex=tuple(vertex),
        touch=tuple(touch),
        touch_index=tuple(index),
        nondeg_set=tuple(kept[i] for i in record.nondeg_set),
    )


def _slide_cube(
        u: ScalarField,
        P: ParaboloidParams,
        T: ThresholdConfig,
        vertex_half_width: float,
) -> Tuple[List[TouchingRecord], int]:
    """Slide from every node of {u > M} in the vertex cube; count rescan failures."""
    eps_deg = T.degeneracy_threshold(u.h)
    mask = cube_mask(u.spec, vertex_half_width) & (u.values > T.M)
    vertices = [u.spec.coordinates(idx) for idx in zip(*np.nonzero(mask))]

    def slide(y):
        record = slide_vertex(u, y, P, eps_deg)
        return _with_jacobian(record, u, P)

    records = _run_slides(slide, vertices)
    failures = sum(not rescan_touching(u, r, P) for r in records)
    return records, failures


def _tally(report: MeasureReport, records: Sequence[TouchingRecord], u_full: ScalarField):
    touches: Dict[IndexSet, set] = defaultdict(set)
    vertex_counts: Dict[IndexSet, int] = defaultdict(int)
    for record in records:
        vertex_counts[record.nondeg_set] += 1
        touches[record.nondeg_set].add(record.touch_index)
        u_touch = u_full.at(record.touch_index)
        if u_touch >= report.M:
            report.touch_violations += 1
        if u_touch > report.M and record.touch_index == u_full.spec.nearest_index(
                record.vertex
        ):
            report.self_touch_violations += 1
        if record.min_eigenvalue is not None:
            if report.min_eigenvalue is None or record.min_eigenvalue < report.min_eigenvalue:
                report.min_eigenvalue = record.min_eigenvalue
    report.vertex_counts = dict(vertex_counts)
    report.touch_counts = {key: len(value) for key, value in touches.items()}
    report.records = list(records)
    report.psd_violations = sum(
        r.min_eigenvalue is not None and r.min_eigenvalue < -PSD_TOLERANCE
        for r in records
    )


def _base_report(
        u: ScalarField, f: ScalarField, T: ThresholdConfig, P: ParaboloidParams
) -> MeasureReport:
    n = u.dim
    inner = cube_mask(u.spec, 1.0 / (4 * n))
    return MeasureReport(
        n=n,
        p=P.p,
        K=P.K,
        M=T.M,
        delta=T.delta,
        mu=T.mu,
        eps_deg=T.degeneracy_threshold(u.h),
        h=u.h,
        density_fraction=float(np.mean(u.values > T.M)),
        forcing_norm=lp_norm_grid(f, exponent=n, mask=np.ones(u.spec.shape, dtype=bool)),
        hypothesis_active=bool(np.any(inner & (u.values <= 1.0))),
    )


def _finish(report: MeasureReport) -> MeasureReport:
    if not report.vertex_counts:
        report.notice = "empty vertex set: no node of Q_{1/4n} has u > M"
        logger.warning(report.notice)
    logger.info(
        f"Measure experiment: {report.total_vertices} vertices,"
        f" {report.total_touches} touching nodes, C={report.empirical_C}"
    )
    return report


def measure_estimate_experiment(
        u: ScalarField, f: ScalarField, T: ThresholdConfig, P: ParaboloidParams
) -> MeasureReport:
    """Slide from every node of {u > M} in Q_{1/4n} and compare |V_I| with |T_I|.

    Parameters
    ----------
    u : ScalarField
        Nonnegative field on a grid of Q_1.
    f : ScalarField
        Forcing on the same grid; only its L^n norm is used.
    T : ThresholdConfig
    P : ParaboloidParams

    Returns
    -------
    MeasureReport
        An empty vertex set gives a report with a notice, not an error.
    """
    _check_unit_cube(u, f, 1.0)
    report = _base_report(u, f, T, P)
    records, report.rescan_failures = _slide_cube(u, P, T, 1.0 / (4 * u.dim))
    _tally(report, records, u)
    return _finish(report)


def sliced_measure_experiment(
        u: ScalarField,
        f: ScalarField,
        T: ThresholdConfig,
        P: ParaboloidParams,
        J: Sequence[int],
) -> MeasureReport:
    """Measure experiment run slice by slice with the axes J frozen.

    Each slice is a lower-dimensional field slid with the restricted
    paraboloid; slices whose frozen values lie outside Q_{1/4n} hold no
    vertices and are skipped. Counts are summed over slices, with index
    sets and touching nodes expressed in full-dimensional axes.
    """
    J = tuple(sorted(set(int(j) for j in J)))
    if not J:
        return measure_estimate_experiment(u, f, T, P)
    _check_unit_cube(u, f, 1.0)
    n = u.dim
    vertex_half_width = 1.0 / (4 * n)
    kept = [i for i in range(n) if i not in J]
    report = _base_report(u, f, T, P)
    report.slice_axes = J
    records: List[TouchingRecord] = []
    slices = 0
    for s in iter_slices(u.spec, J):
        if max(abs(a) for a in s.frozen_values) >= vertex_half_width:
            continue
        slices += 1
        us = restrict_slice(u, s)
        slice_records, failures = _slide_cube(us, P, T, vertex_half_width)
        report.rescan_failures += failures
        frozen = {
            axis: (value, u.spec.nearest_index(_axis_point(n, axis, value))[axis])
            for axis, value in zip(s.frozen_axes, s.frozen_values)
        }
        records.extend(_lift(r, kept, frozen, n) for r in slice_records)
        logger.debug(f"slice {s.frozen_values}: {len(slice_records)} vertices")
    report.slices = slices
    _tally(report, records, u)
    return _finish(report)


def _axis_point(n: int, axis: int, value: float) -> np.ndarray:
    point = np.zeros(n)
    point[axis] = value
    return point


# barrier sliding


def barrier_extended_eval(z, B: BarrierParams):
    """Shifted barrier, extended inside Q_{1/8n} by its values on the boundary
    along rays; the origin takes the maximum, attained at the face centers."""
    z = np.asarray(z, dtype=float)
    shape = z.shape
    n = shape[-1]
    z = z.reshape(-1, n).copy()
    radius = 1.0 / (8 * n)
    sup = np.max(np.abs(z), axis=1)
    inside = sup < radius
    scale = np.where(inside & (sup > 0), radius / np.where(sup > 0, sup, 1.0), 1.0)
    z *= scale[:, None]
    z[inside & (sup == 0)] = _axis_point(n, 0, radius)
    return barrier_shifted_eval(z, B).reshape(shape[:-1])


def barrier_sup(n: int, B: BarrierParams) -> float:
    """||Phi||_inf of the extended barrier, the doubling threshold M.

    inf when it leaves the double range; barrier_log2_sup stays finite.
    """
    return float(barrier_shifted_eval(_axis_point(n, 0, 1.0 / (8 * n)), B))


def barrier_vertex_from_gradient(x, g, B: BarrierParams) -> np.ndarray:
    """y = x - (D Phi)^(-1)(g)."""
    return np.asarray(x, dtype=float) - barrier_grad_inverse(g, B)


def barrier_touch_jacobian_det(x_minus_y, g, H, B: BarrierParams) -> float:
    """|det(D((D Phi)^(-1))(g) (D^2 Phi(x - y) - H))|.

    Raises
    ------
    SingularityError
        If g = 0 or x - y lies on a coordinate hyperplane.
    """
    J = inverse_gradient_jacobian(g, B)
    return float(abs(np.linalg.det(J @ (barrier_shifted_hess(x_minus_y, B) - np.asarray(H)))))


def slide_barrier_vertex(
        u: ScalarField, y, B: BarrierParams, eps_deg: Optional[float] = None
) -> TouchingRecord:
    """Slide the extended barrier Phi(. - y) from below until it touches u."""
    y = _vertex_point(u, y)
    eps_deg = u.h if eps_deg is None else eps_deg
    gap = u.values - barrier_extended_eval(u.spec.node_coordinates() - y, B)
    return _touch_from_gap(u, gap, y, eps_deg)


@dataclass
class DoublingReport:
    """Barrier slides from every node of Q_{1/8n} over a field on Q_{6n}."""
    n: int
    p: float
    a: float
    log2_K: float
    M: float
    log2_M: float
    mu: float
    eps_deg: float
    h: float
    vertex_counts: Dict[IndexSet, int] = field(default_factory=dict)
    touch_counts: Dict[IndexSet, int] = field(default_factory=dict)
    records: List[TouchingRecord] = field(default_factory=list)
    forcing_norm: float = 0.0
    premise_holds: bool = False
    hypothesis_active: bool = False
    conclusion_holds: bool = False
    inner_touches: int = 0
    boundary_touches: int = 0
    notice: Optional[str] = None

    @property
    def empirical_C(self) -> Optional[float]:
        """max over I of |V_I| / (mu^n / h^n)."""
        if not self.vertex_counts:
            return None
        budget = self.mu ** self.n / self.h ** self.n
        return max(self.vertex_counts.values()) / budget

    @property
    def passed(self) -> bool:
        """False when u > M on Q_{1/4n}, u <= 1 somewhere on Q_3 and a touch
        still lands inside Q_{1/4n}."""
        return not (
            self.premise_holds and self.hypothesis_active and self.inner_touches > 0
        )

    def summary(self) -> Dict[str, object]:
        return {
            "n": self.n,
            "p": self.p,
            "a": self.a,
            "log2_K": self.log2_K,
            "M": self.M,
            "log2_M": self.log2_M,
            "mu": self.mu,
            "eps_deg": self.eps_deg,
            "h": self.h,
            "total_vertices": sum(self.vertex_counts.values()),
            "total_touches": sum(self.touch_counts.values()),
            "empirical_C": self.empirical_C,
            "forcing_norm": self.forcing_norm,
            "premise_holds": self.premise_holds,
            "hypothesis_active": self.hypothesis_active,
            "conclusion_holds": self.conclusion_holds,
            "inner_touches": self.inner_touches,
            "boundary_touches": self.boundary_touches,
            "passed": self.passed,
            "notice": self.notice,
        }

    def to_text(self) -> str:
        lines = [f"{key} = {_format_value(value)}" for key, value in self.summary().items()]
        for index_set in sorted(self.vertex_counts, key=_set_order):
            lines.append(f"V[{format_index_set(index_set)}] = {self.vertex_counts[index_set]}")
            lines.append(
                f"T[{format_index_set(index_set)}] = {self.touch_counts.get(index_set, 0)}"
            )
        return "\n".join(lines) + "\n"


def _with_barrier_jacobian(
        record: TouchingRecord, u: ScalarField, B: BarrierParams
) -> TouchingRecord:
    if len(record.nondeg_set) != u.dim:
        return record
    try:
        H = fd_hessian(u, record.touch_index)
    except BoundaryProximityError:
        return record
    z = np.asarray(record.touch) - np.asarray(record.vertex)
    if np.max(np.abs(z)) < 1.0 / (8 * u.dim):
        # touched the extension, where the closed forms do not apply
        return record
    g = barrier_shifted_grad(z, B)
    jac = barrier_touch_jacobian_det(z, g, H, B)
    A = weighted_hessian(g, H - barrier_shifted_hess(z, B), B.p)
    return replace(record, jac_det=jac, min_eigenvalue=float(sym_eigenvalues(A)[0]))


def doubling_experiment(
        u: ScalarField,
        f: ScalarField,
        B: BarrierParams,
        mu: float,
        eps_deg: Optional[float] = None,
) -> DoublingReport:
    """Slide the barrier from every node of Q_{1/8n} and classify the touches.

    With M = ||Phi||_inf, u > M on Q_{1/4n} keeps every touch outside
    Q_{1/4n}; inner_touches counts violations. conclusion_holds reports
    whether u > 1 on Q_3.
    """
    n = u.dim
    _check_unit_cube(u, f, 6.0 * n)
    if not 0 < mu < 1:
        raise InvalidInputError(f"mu must be in (0, 1), got {mu}")
    eps_deg = u.h if eps_deg is None else eps_deg
    M = barrier_sup(n, B)
    spec: GridSpec = u.spec
    inner = cube_mask(spec, 1.0 / (4 * n))
    report = DoublingReport(
        n=n,
        p=B.p,
        a=B.a,
        log2_K=B.log2_K,
        M=M,
        log2_M=barrier_log2_sup(n, B),
        mu=mu,
        eps_deg=eps_deg,
        h=u.h,
        forcing_norm=lp_norm_grid(f, exponent=n, mask=np.ones(spec.shape, dtype=bool)),
        premise_holds=bool(np.all(u.values[inner] > M)),
        hypothesis_active=bool(np.any(cube_mask(spec, 3.0) & (u.values <= 1.0))),
    )
    report.conclusion_holds = not report.hypothesis_active
    if not np.isfinite(M):
        # no finite field exceeds M on Q_{1/4n}, and the slid values are inf
        report.notice = (
            f"barrier sup 2**{report.log2_M:.1f} exceeds the double range; slides skipped"
        )
        logger.warning(report.notice)
        return report
    vertex_mask = cube_mask(spec, 1.0 / (8 * n))
    vertices = [spec.coordinates(idx) for idx in zip(*np.nonzero(vertex_mask))]

    def slide(y):
        return _with_barrier_jacobian(slide_barrier_vertex(u, y, B, eps_deg), u, B)

    records = _run_slides(slide, vertices)
    touches: Dict[IndexSet, set] = defaultdict(set)
    counts: Dict[IndexSet, int] = defaultdict(int)
    last = spec.points_per_axis - 1
    for record in records:
        counts[record.nondeg_set] += 1
        touches[record.nondeg_set].add(record.touch_index)
        if inner[record.touch_index]:
            report.inner_touches += 1
        if any(i in (0, last) for i in record.touch_index):
            report.boundary_touches += 1
    report.vertex_counts = dict(counts)
    report.touch_counts = {key: len(value) for key, value in touches.items()}
    report.records = records
    if not records:
        report.notice = "empty vertex set"
        logger.warning(report.notice)
    logger.info(
        f"Doubling experiment: {len(records)} vertices, {report.inner_touches}"
        f" inner touches, conclusion {'holds' if report.conclusion_holds else 'fails'}"
    )
    return report
