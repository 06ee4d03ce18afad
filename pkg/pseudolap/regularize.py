"""Inf-convolution of grid fields.

    u_eps(x_i) = min_j u(x_j) + |x_i - x_j|^2 / eps

The quadratic penalty is a sum over coordinates, so the minimum over the
grid factors into one minimum per axis; each axis pass is the lower
envelope of parabolas along every grid line. Minimization is over the
grid's own nodes, which biases the result by O(h) against the continuum
infimum over the closed cube.
"""
from dataclasses import dataclass
import logging

import numpy as np

from pseudolap.errors import InvalidInputError
from pseudolap.fields import ScalarField


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InfConvParams:
    epsilon: float

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")


def lower_envelope_1d(values: np.ndarray, weight: float) -> np.ndarray:
    """out[i] = min_j values[j] + weight (i - j)^2.

    Lower envelope of the parabolas rooted at every j, built left to right;
    parabolas hidden by their neighbours are popped.

    Parameters
    ----------
    values : np.ndarray
        One grid line of the field.
    weight : float
        h^2 / eps for node spacing h.
    """
    f = np.asarray(values, dtype=float)
    m = len(f)
    roots = np.zeros(m, dtype=int)
    bounds = np.empty(m + 1)
    k = 0
    bounds[0], bounds[1] = -np.inf, np.inf

    def crossing(q: int, r: int) -> float:
        return ((f[q] + weight * q * q) - (f[r] + weight * r * r)) / (
            2.0 * weight * (q - r)
        )

    for q in range(1, m):
        s = crossing(q, roots[k])
        # bounds[0] is -inf, so the loop stops at the first parabola
        while s <= bounds[k]:
            k -= 1
            s = crossing(q, roots[k])
        k += 1
        roots[k] = q
        bounds[k] = s
        bounds[k + 1] = np.inf
    out = np.empty(m)
    k = 0
    for i in range(m):
        while bounds[k + 1] < i:
            k += 1
        out[i] = f[roots[k]] + weight * (i - roots[k]) ** 2
    return out


def inf_convolution(u: ScalarField, P: InfConvParams) -> ScalarField:
    """Exact discrete inf-convolution of u, one lower-envelope pass per axis."""
    weight = u.h ** 2 / P.epsilon
    values = np.array(u.values)
    for axis in range(u.dim):
        values = np.apply_along_axis(lower_envelope_1d, axis, values, weight)
    logger.debug(f"Inf-convolution with eps={P.epsilon:g} on grid {u.spec.shape}")
    return u.with_values(values)


def sup_convolution(u: ScalarField, P: InfConvParams) -> ScalarField:
    """max_j u(x_j) - |x_i - x_j|^2 / eps, as -inf_convolution(-u)."""
    lowered = inf_convolution(u.with_values(-u.values), P)
    return u.with_values(-lowered.values)


def inf_convolution_bruteforce(u: ScalarField, P: InfConvParams) -> np.ndarray:
    """The O(N^2) definition; only practical on small grids."""
    points = u.spec.node_coordinates().reshape(-1, u.dim)
    flat = u.values.reshape(-1)
    out = np.empty(len(points))
    for i, x in enumerate(points):
        out[i] = np.min(flat + np.sum((points - x) ** 2, axis=1) / P.epsilon)
    return out.reshape(u.spec.shape)
