"""Uniform grids over cubes, scalar fields and finite differences.

A GridSpec describes the cube Q_r(x0) = x0 + [-r, r]^n sampled with an odd
number of nodes per axis, so the center and the coordinate hyperplanes
through it are grid nodes. Fields are immutable once built.

Field files are little-endian:

    offset 0   magic b"PLFD"
    offset 4   version (uint8, currently 1)
    offset 5   dim (uint8, 1..4)
    offset 6   points_per_axis (uint16)
    offset 8   half_width (float64)
    offset 16  center (dim float64)
    then       values (points_per_axis**dim float64, row-major)
"""
from dataclasses import dataclass, field
import itertools
import logging
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np

from pseudolap.errors import (
    BoundaryProximityError,
    DimensionOverflowError,
    FieldFormatError,
    InvalidInputError,
    InvalidSliceError,
    MalformedHeaderError,
    OutOfDomainError,
    TruncatedPayloadError,
)


logger = logging.getLogger(__name__)

MAX_GRID_DIM = 4
FIELD_MAGIC = b"PLFD"
FIELD_VERSION = 1
HEADER_DTYPE = np.dtype(
    [
        ("magic", "S4"),
        ("version", "u1"),
        ("dim", "u1"),
        ("points_per_axis", "<u2"),
        ("half_width", "<f8"),
    ]
)


@dataclass(frozen=True)
class GridSpec:
    """Cube Q_{half_width}(center) with points_per_axis nodes per axis."""
    dim: int
    points_per_axis: int
    half_width: float = 1.0
    center: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_GRID_DIM:
            raise InvalidInputError(
                f"grid dimension must be in 1..{MAX_GRID_DIM}, got {self.dim}"
            )
        if self.points_per_axis < 9 or self.points_per_axis % 2 == 0:
            raise InvalidInputError(
                "points_per_axis must be an odd integer >= 9, got"
                f" {self.points_per_axis}"
            )
        if not (np.isfinite(self.half_width) and self.half_width > 0):
            raise InvalidInputError(f"half_width must be > 0, got {self.half_width}")
        center = (0.0,) * self.dim if self.center is None else self.center
        center = tuple(float(c) for c in center)
        if len(center) != self.dim or not all(np.isfinite(center)):
            raise InvalidInputError(f"center {center} does not match dim {self.dim}")
        object.__setattr__(self, "center", center)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.points_per_axis - 1)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def center_index(self) -> Tuple[int, ...]:
        return ((self.points_per_axis - 1) // 2,) * self.dim

    def axis_values(self, axis: int) -> np.ndarray:
        m = self.points_per_axis
        offsets = (np.arange(m) - (m - 1) // 2) * self.h
        return self.center[axis] + offsets

    def coordinates(self, idx: Sequence[int]) -> np.ndarray:
        """Coordinates of the node with multi-index idx."""
        idx = np.asarray(idx, dtype=int)
        return np.asarray(self.center) + (idx - (self.points_per_axis - 1) // 2) * self.h

    def node_coordinates(self) -> np.ndarray:
        """Array of shape (m, ..., m, dim) with the coordinates of every node."""
        axes = [self.axis_values(i) for i in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def contains(self, point, tol: float = 1e-12) -> bool:
        offset = np.abs(np.asarray(point, dtype=float) - np.asarray(self.center))
        return bool(np.all(offset <= self.half_width * (1.0 + tol)))

    def nearest_index(self, point) -> Tuple[int, ...]:
        """Multi-index of the node nearest to point.

        Raises
        ------
        OutOfDomainError
            If point lies outside the cube.
        """
        point = np.asarray(point, dtype=float)
        if point.shape != (self.dim,) or not self.contains(point):
            raise OutOfDomainError(f"point {point} outside grid cube")
        m = self.points_per_axis
        idx = np.rint((point - np.asarray(self.center)) / self.h) + (m - 1) // 2
        return tuple(int(i) for i in np.clip(idx, 0, m - 1))

    def indices(self) -> Iterator[Tuple[int, ...]]:
        """All multi-indices in row-major order."""
        return itertools.product(range(self.points_per_axis), repeat=self.dim)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Values on the nodes of a GridSpec; read-only after construction."""
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.spec.shape:
            raise InvalidInputError(
                f"field shape {values.shape} does not match grid {self.spec.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("field has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def h(self) -> float:
        return self.spec.h

    def at(self, idx: Sequence[int]) -> float:
        return float(self.values[tuple(idx)])

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.spec, values)


@dataclass(frozen=True)
class SliceSpec:
    """Frozen axes J with values a_j; the slice keeps the remaining axes."""
    frozen_axes: Tuple[int, ...]
    frozen_values: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "frozen_axes", tuple(int(j) for j in self.frozen_axes))
        object.__setattr__(
            self, "frozen_values", tuple(float(v) for v in self.frozen_values)
        )
        if len(self.frozen_axes) != len(self.frozen_values):
            raise InvalidSliceError("one frozen value is needed per frozen axis")
        if len(set(self.frozen_axes)) != len(self.frozen_axes):
            raise InvalidSliceError(f"repeated frozen axes {self.frozen_axes}")


def sample_field(spec: GridSpec, func: Callable[[np.ndarray], np.ndarray]) -> ScalarField:
    """Evaluate func on every node; func receives an array (..., dim) of points."""
    values = np.asarray(func(spec.node_coordinates()), dtype=float)
    return ScalarField(spec, np.broadcast_to(values, spec.shape))


def interior_mask(spec: GridSpec, margin: int = 1) -> np.ndarray:
    """True at nodes at least margin nodes away from every face."""
    mask = np.zeros(spec.shape, dtype=bool)
    inner = tuple(slice(margin, spec.points_per_axis - margin) for _ in range(spec.dim))
    mask[inner] = True
    return mask


def ball_mask(spec: GridSpec, radius: float, center=None) -> np.ndarray:
    """Nodes with |x - center| < radius."""
    center = np.zeros(spec.dim) if center is None else np.asarray(center, dtype=float)
    dist = np.linalg.norm(spec.node_coordinates() - center, axis=-1)
    return dist < radius


def cube_mask(spec: GridSpec, half_width: float, center=None) -> np.ndarray:
    """Nodes of the open cube |x - center|_inf < half_width."""
    center = np.zeros(spec.dim) if center is None else np.asarray(center, dtype=float)
    dist = np.max(np.abs(spec.node_coordinates() - center), axis=-1)
    return dist < half_width


def _check_clearance(u: ScalarField, idx: Sequence[int], clearance: int = 1):
    idx = tuple(int(i) for i in idx)
    m = u.spec.points_per_axis
    if len(idx) != u.dim:
        raise InvalidInputError(f"index {idx} does not match grid dimension {u.dim}")
    if any(i < clearance or i > m - 1 - clearance for i in idx):
        raise BoundaryProximityError(
            f"node {idx} is closer than {clearance} node(s) to the boundary"
        )
    return idx


def _neighbour(idx: Tuple[int, ...], *steps: Tuple[int, int]) -> Tuple[int, ...]:
    moved = list(idx)
    for axis, step in steps:
        moved[axis] += step
    return tuple(moved)


def fd_gradient(u: ScalarField, idx: Sequence[int]) -> np.ndarray:
    """Central-difference gradient (u_{+e_i} - u_{-e_i}) / 2h at node idx."""
    idx = _check_clearance(u, idx)
    v, h = u.values, u.h
    return np.array(
        [
            (v[_neighbour(idx, (i, 1))] - v[_neighbour(idx, (i, -1))]) / (2.0 * h)
            for i in range(u.dim)
        ]
    )


def fd_hessian(u: ScalarField, idx: Sequence[int]) -> np.ndarray:
    """Central-difference Hessian at node idx.

    Diagonal entries use the three-point stencil, off-diagonal entries the
    four-point cross stencil (u_{++} - u_{+-} - u_{-+} + u_{--}) / 4h^2.
    Only diagonal neighbours are touched, so one node of clearance
    suffices.
    """
    idx = _check_clearance(u, idx)
    v, h = u.values, u.h
    n = u.dim
    H = np.empty((n, n))
    center = v[idx]
    for i in range(n):
        H[i, i] = (
            v[_neighbour(idx, (i, 1))] - 2.0 * center + v[_neighbour(idx, (i, -1))]
        ) / h ** 2
        for j in range(i + 1, n):
            cross = (
                v[_neighbour(idx, (i, 1), (j, 1))]
                - v[_neighbour(idx, (i, 1), (j, -1))]
                - v[_neighbour(idx, (i, -1), (j, 1))]
                + v[_neighbour(idx, (i, -1), (j, -1))]
            ) / (4.0 * h ** 2)
            H[i, j] = H[j, i] = cross
    return H


def _shifted(values: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
    """Interior view of values displaced by offsets (each in -1, 0, 1)."""
    m = values.shape[0]
    return values[tuple(slice(1 + o, m - 1 + o) for o in offsets)]


def _unit(n: int, *steps: Tuple[int, int]) -> Tuple[int, ...]:
    offsets = [0] * n
    for axis, step in steps:
        offsets[axis] += step
    return tuple(offsets)


def central_gradient(v: np.ndarray, h: float) -> np.ndarray:
    """Central first differences of a raw grid array at its interior nodes."""
    n = v.ndim
    return np.stack(
        [
            (_shifted(v, _unit(n, (i, 1))) - _shifted(v, _unit(n, (i, -1)))) / (2.0 * h)
            for i in range(n)
        ],
        axis=-1,
    )


def central_second(v: np.ndarray, h: float) -> np.ndarray:
    """Three-point second differences of a raw grid array, one per axis."""
    n = v.ndim
    center = _shifted(v, (0,) * n)
    return np.stack(
        [
            (_shifted(v, _unit(n, (i, 1))) - 2.0 * center + _shifted(v, _unit(n, (i, -1))))
            / h ** 2
            for i in range(n)
        ],
        axis=-1,
    )


def fd_gradient_field(u: ScalarField) -> np.ndarray:
    """fd_gradient at every interior node, shape (m-2,)*n + (n,)."""
    return central_gradient(u.values, u.h)


def fd_second_field(u: ScalarField) -> np.ndarray:
    """Diagonal of fd_hessian at every interior node, shape (m-2,)*n + (n,)."""
    return central_second(u.values, u.h)


def fd_hessian_field(u: ScalarField) -> np.ndarray:
    """fd_hessian at every interior node, shape (m-2,)*n + (n, n)."""
    n, h, v = u.dim, u.h, u.values
    second = fd_second_field(u)
    H = np.zeros(second.shape + (n,))
    for i in range(n):
        H[..., i, i] = second[..., i]
        for j in range(i + 1, n):
            cross = (
                _shifted(v, _unit(n, (i, 1), (j, 1)))
                - _shifted(v, _unit(n, (i, 1), (j, -1)))
                - _shifted(v, _unit(n, (i, -1), (j, 1)))
                + _shifted(v, _unit(n, (i, -1), (j, -1)))
            ) / (4.0 * h ** 2)
            H[..., i, j] = cross
            H[..., j, i] = cross
    return H


def _frozen_index(spec: GridSpec, axis: int, value: float) -> int:
    axis_values = spec.axis_values(axis)
    k = int(np.argmin(np.abs(axis_values - value)))
    if abs(axis_values[k] - value) > 1e-9 * spec.h:
        raise InvalidSliceError(
            f"frozen value {value} on axis {axis} is not a grid node"
        )
    return k


def restrict_slice(u: ScalarField, s: SliceSpec) -> ScalarField:
    """Restriction of u to the slice {x_j = a_j, j in J}.

    Raises
    ------
    InvalidSliceError
        If J is empty, covers every axis, names a missing axis, or a frozen
        value is off the grid.
    """
    n = u.dim
    if not 0 < len(s.frozen_axes) < n:
        raise InvalidSliceError(
            f"frozen axes {s.frozen_axes} must be a nonempty proper subset of"
            f" {n} axes"
        )
    if any(not 0 <= j < n for j in s.frozen_axes):
        raise InvalidSliceError(f"frozen axes {s.frozen_axes} outside 0..{n - 1}")
    indexer = [slice(None)] * n
    for axis, value in zip(s.frozen_axes, s.frozen_values):
        indexer[axis] = _frozen_index(u.spec, axis, value)
    kept = [i for i in range(n) if i not in s.frozen_axes]
    spec = GridSpec(
        dim=len(kept),
        points_per_axis=u.spec.points_per_axis,
        half_width=u.spec.half_width,
        center=tuple(u.spec.center[i] for i in kept),
    )
    return ScalarField(spec, u.values[tuple(indexer)])


def iter_slices(spec: GridSpec, axes: Sequence[int]) -> Iterator[SliceSpec]:
    """Every SliceSpec freezing axes at grid nodes, in row-major order."""
    axes = tuple(sorted(int(a) for a in axes))
    values = [spec.axis_values(a) for a in axes]
    for combo in itertools.product(*values):
        yield SliceSpec(axes, combo)


def field_nbytes(dim: int, points_per_axis: int) -> int:
    """Size of a field file: header, center and values."""
    return HEADER_DTYPE.itemsize + 8 * dim + 8 * points_per_axis ** dim


def field_io_write(u: ScalarField, path: str) -> None:
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = FIELD_MAGIC
    header["version"] = FIELD_VERSION
    header["dim"] = u.dim
    header["points_per_axis"] = u.spec.points_per_axis
    header["half_width"] = u.spec.half_width
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(np.asarray(u.spec.center, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())
    logger.debug(f"Wrote {u.spec.shape} field to {path}")


def field_io_read(path: str) -> ScalarField:
    """Read a field file written by field_io_write.

    Raises
    ------
    MalformedHeaderError
        Bad magic, unknown version or an invalid grid in the header.
    DimensionOverflowError
        Header dimension outside 1..4.
    TruncatedPayloadError
        Fewer bytes than the header announces.
    """
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < HEADER_DTYPE.itemsize:
        raise MalformedHeaderError(f"{path}: file shorter than the field header")
    header = np.frombuffer(raw, dtype=HEADER_DTYPE, count=1)[0]
    if header["magic"] != FIELD_MAGIC or header["version"] != FIELD_VERSION:
        raise MalformedHeaderError(f"{path}: not a version {FIELD_VERSION} field file")
    dim = int(header["dim"])
    m = int(header["points_per_axis"])
    if not 1 <= dim <= MAX_GRID_DIM:
        raise DimensionOverflowError(f"{path}: dimension {dim} outside 1..{MAX_GRID_DIM}")
    expected = field_nbytes(dim, m)
    if len(raw) < expected:
        raise TruncatedPayloadError(
            f"{path}: expected {expected} bytes, found {len(raw)}"
        )
    if len(raw) > expected:
        raise FieldFormatError(f"{path}: {len(raw) - expected} trailing bytes")
    offset = HEADER_DTYPE.itemsize
    center = np.frombuffer(raw, dtype="<f8", count=dim, offset=offset)
    values = np.frombuffer(raw, dtype="<f8", count=m ** dim, offset=offset + 8 * dim)
    try:
        spec = GridSpec(
            dim=dim,
            points_per_axis=m,
            half_width=float(header["half_width"]),
            center=tuple(center),
        )
        return ScalarField(spec, values.reshape(spec.shape))
    except InvalidInputError as err:
        raise MalformedHeaderError(f"{path}: {err}") from err
