"""Closed-form anisotropic profiles: the sliding paraboloid and the barrier.

The paraboloid is

    phi(x) = -K (1+p)/(2+p) |x|_b,      b = 1 + 1/(1+p),

with |x|_b = sum |x_i|^b, and the barrier is

    Phi_0(x) = |x|_b^(-a) / (a b),      Phi(x) = K (Phi_0(x) - Phi_0(5n e_1)).

Both are C^1 but not C^2 across the coordinate hyperplanes; closed-form
Hessians refuse points within HYPERPLANE_MARGIN (relative) of them and
raise DegenerateDirectionError instead of returning huge values.

Barrier amplitudes become astronomically large for the exponents needed on
Q_{6n}, so BarrierParams stores log2 K and the residual checks that matter
for exponent selection are carried out in log space.
"""
from dataclasses import dataclass, field
import itertools
import logging
import math
from typing import Tuple

import numpy as np

from pseudolap.errors import (
    DegenerateDirectionError,
    InvalidInputError,
    SearchFailureError,
    SingularityError,
)
from pseudolap.operators import (
    EllipticityParams,
    check_exponent,
    gradient_power,
    lower_residual,
    weighted_hessian,
)


logger = logging.getLogger(__name__)

HYPERPLANE_MARGIN = 1e-8
MAX_LADDER_EXPONENT = 2 ** 20
SAMPLE_CHUNK = 20000


def degeneracy_exponent_b(p: float) -> float:
    """b = 1 + 1/(1+p), the anisotropic power matched to exponent p."""
    return 1.0 + 1.0 / (1.0 + check_exponent(p))


@dataclass(frozen=True)
class ParaboloidParams:
    """Amplitude K > 1 and exponent p of the sliding paraboloid."""
    K: float
    p: float
    b: float = field(init=False)

    def __post_init__(self):
        check_exponent(self.p)
        if not (np.isfinite(self.K) and self.K > 1):
            raise InvalidInputError(f"paraboloid amplitude must be > 1, got {self.K}")
        object.__setattr__(self, "b", degeneracy_exponent_b(self.p))


@dataclass(frozen=True)
class BarrierParams:
    """Decay exponent a > 1, exponent p and shift amplitude K = 2**log2_K."""
    a: float
    p: float
    log2_K: float = 1.0
    b: float = field(init=False)

    def __post_init__(self):
        check_exponent(self.p)
        if not (np.isfinite(self.a) and self.a > 1):
            raise InvalidInputError(f"barrier exponent must be > 1, got {self.a}")
        if not (np.isfinite(self.log2_K) and self.log2_K > 0):
            raise InvalidInputError(
                f"barrier amplitude must be > 1, got 2**{self.log2_K}"
            )
        object.__setattr__(self, "b", degeneracy_exponent_b(self.p))

    @classmethod
    def from_amplitude(cls, a: float, p: float, K: float) -> "BarrierParams":
        if not K > 1:
            raise InvalidInputError(f"barrier amplitude must be > 1, got {K}")
        return cls(a=a, p=p, log2_K=math.log2(K))

    @property
    def K(self) -> float:
        """2**log2_K, inf once it leaves the double range."""
        with np.errstate(over="ignore"):
            return float(np.exp2(self.log2_K))


def _points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise InvalidInputError("expected a point with at least one coordinate")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("point has non-finite coordinates")
    return x


def _check_off_hyperplanes(x: np.ndarray) -> None:
    scale = np.maximum(1.0, np.max(np.abs(x), axis=-1, keepdims=True))
    close = np.abs(x) <= HYPERPLANE_MARGIN * scale
    if np.any(close):
        axes = np.nonzero(close.reshape(-1, x.shape[-1]).any(axis=0))[0]
        raise DegenerateDirectionError(axes)


def _check_nonzero(x: np.ndarray) -> None:
    if np.any(np.all(x == 0, axis=-1)):
        raise SingularityError("profile is singular at the origin")


def _diag(values: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    return values[..., :, None] * np.eye(n)


def bnorm_eval(x, b: float):
    """|x|_b = sum_i |x_i|^b."""
    if not b > 1:
        raise InvalidInputError(f"anisotropic power must be > 1, got {b}")
    return np.sum(np.abs(_points(x)) ** b, axis=-1)


def signed_power(x, b: float) -> np.ndarray:
    """x^b = (|x_i|^(b-1) x_i), written sign(x_i)|x_i|^b to stay finite at 0."""
    x = _points(x)
    return np.sign(x) * np.abs(x) ** b


def phi_eval(x, P: ParaboloidParams):
    return -P.K * (1.0 + P.p) / (2.0 + P.p) * bnorm_eval(x, P.b)


def phi_grad(x, P: ParaboloidParams) -> np.ndarray:
    """D_i phi = -K |x_i|^(1/(1+p)) sgn(x_i); continuous across z_i = 0."""
    return -P.K * signed_power(x, 1.0 / (1.0 + P.p))


def phi_hess(x, P: ParaboloidParams) -> np.ndarray:
    """D^2 phi = -(K/(1+p)) diag(|x_i|^(-p/(1+p)))."""
    x = _points(x)
    _check_off_hyperplanes(x)
    return _diag(-P.K / (1.0 + P.p) * np.abs(x) ** (-P.p / (1.0 + P.p)))


def phi_identity_constant(P: ParaboloidParams) -> float:
    """c with weighted_hessian(D phi, D^2 phi, p) = -c I, c = K^(1+p)/(1+p)."""
    return P.K ** (1.0 + P.p) / (1.0 + P.p)


def lemma_amplitude(n: int, p: float) -> float:
    """Smallest power of two K with the measure-lemma boundary separation.

    The condition is K c (1 - 1/4n)^2 > 1 + K c / (2n) with
    c = (1+p)/(2+p).
    """
    p = check_exponent(p)
    c = (1.0 + p) / (2.0 + p)
    K = 2.0
    while not K * c * (1.0 - 1.0 / (4 * n)) ** 2 > 1.0 + K * c / (2.0 * n):
        K *= 2.0
    return K


def lemma_threshold(n: int, p: float, K: float) -> float:
    """M = K (1+p)/(2+p) (1 - 1/4n)^2."""
    return K * (1.0 + p) / (2.0 + p) * (1.0 - 1.0 / (4 * n)) ** 2


def _barrier_scaled_derivatives(
        x: np.ndarray, B: BarrierParams, with_hessian: bool = True
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return s = |x|_b with s^(a+1) D Phi_0 and s^(a+1) D^2 Phi_0.

    Factoring out s^(-(a+1)) keeps the derivatives representable for
    large a; the weighted Hessian scales back by s^(-(a+1)(p+1)).
    """
    _check_nonzero(x)
    s = bnorm_eval(x, B.b)
    v = signed_power(x, B.b - 1.0)
    g = -v
    if not with_hessian:
        return s, g, None
    _check_off_hyperplanes(x)
    outer = v[..., :, None] * v[..., None, :]
    H = (
        B.b * (B.a + 1.0) / s[..., None, None] * outer
        - (B.b - 1.0) * _diag(np.abs(x) ** (B.b - 2.0))
    )
    return s, g, H


def barrier_eval(x, B: BarrierParams):
    x = _points(x)
    _check_nonzero(x)
    return bnorm_eval(x, B.b) ** (-B.a) / (B.a * B.b)


def barrier_grad(x, B: BarrierParams) -> np.ndarray:
    """D Phi_0 = -|x|_b^(-(a+1)) x^(b-1)."""
    s, g, _ = _barrier_scaled_derivatives(_points(x), B, with_hessian=False)
    return s[..., None] ** (-(B.a + 1.0)) * g


def barrier_hess(x, B: BarrierParams) -> np.ndarray:
    """D^2 Phi_0 = b(a+1)|x|_b^(-(a+2)) x^(b-1) (x) x^(b-1)
    - (b-1)|x|_b^(-(a+1)) diag(|x_i|^(b-2))."""
    s, _, H = _barrier_scaled_derivatives(_points(x), B)
    return s[..., None, None] ** (-(B.a + 1.0)) * H


def barrier_shift_point(n: int) -> np.ndarray:
    e = np.zeros(n)
    e[0] = 5.0 * n
    return e


def _log_amplitude(B: BarrierParams) -> float:
    return B.log2_K * math.log(2.0)


def barrier_log_eval(x, B: BarrierParams):
    """Natural log of Phi_0, finite wherever x is nonzero."""
    x = _points(x)
    _check_nonzero(x)
    return -B.a * np.log(bnorm_eval(x, B.b)) - math.log(B.a * B.b)


def _log_shifted_terms(x: np.ndarray, B: BarrierParams) -> Tuple[np.ndarray, np.ndarray]:
    """log(K Phi_0(x)) and log(K Phi_0(5n e_1))."""
    log_K = _log_amplitude(B)
    top = log_K + barrier_log_eval(x, B)
    shift = log_K + barrier_log_eval(barrier_shift_point(x.shape[-1]), B)
    return top, np.broadcast_to(shift, np.shape(top))


def barrier_shifted_eval(x, B: BarrierParams):
    """Phi(x) = K (Phi_0(x) - Phi_0(5n e_1)).

    Both terms are carried as logarithms, so K may exceed the double
    range; values beyond it come back as +-inf.
    """
    x = _points(x)
    top, shift = _log_shifted_terms(x, B)
    hi = np.maximum(top, shift)
    lo = np.minimum(top, shift)
    with np.errstate(over="ignore", divide="ignore"):
        magnitude = np.exp(hi + np.log(-np.expm1(lo - hi)))
    return np.where(top >= shift, magnitude, -magnitude)


def barrier_log2_sup(n: int, B: BarrierParams) -> float:
    """log2 of Phi at the face center (1/8n) e_1, finite for any amplitude."""
    top, shift = _log_shifted_terms(_points(np.eye(n)[0] / (8 * n)), B)
    top, shift = float(top), float(shift)
    return (top + math.log(-math.expm1(shift - top))) / math.log(2.0)


def _scaled_by_amplitude(log_scale: np.ndarray, values: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(log_scale) * values


def barrier_shifted_grad(x, B: BarrierParams) -> np.ndarray:
    """K D Phi_0, with K s^(-(a+1)) formed in log space."""
    s, g, _ = _barrier_scaled_derivatives(_points(x), B, with_hessian=False)
    log_scale = _log_amplitude(B) - (B.a + 1.0) * np.log(s)
    return _scaled_by_amplitude(log_scale[..., None], g)


def barrier_shifted_hess(x, B: BarrierParams) -> np.ndarray:
    s, _, H = _barrier_scaled_derivatives(_points(x), B)
    log_scale = _log_amplitude(B) - (B.a + 1.0) * np.log(s)
    return _scaled_by_amplitude(log_scale[..., None, None], H)


def barrier_lower_residual(x, B: BarrierParams, e: EllipticityParams):
    """M-(weighted Hessian of Phi_0) - Lam |D Phi_0|^(p+1)."""
    x = _points(x)
    return lower_residual(barrier_grad(x, B), barrier_hess(x, B), B.p, e)


def barrier_normalized_residual(x, B: BarrierParams, e: EllipticityParams):
    """|x|_b^((a+1)(p+1)) times barrier_lower_residual.

    Computed from the rescaled derivatives, so it stays finite where the
    unnormalized residual underflows.
    """
    _, g, H = _barrier_scaled_derivatives(_points(x), B)
    return lower_residual(g, H, B.p, e)


def barrier_residual_closed_form(x, B: BarrierParams, e: EllipticityParams):
    """Residual from the rank-one-minus-identity structure of the weighted Hessian.

    weighted_hessian = |x|_b^(-(a+1)(p+1)) (b(a+1) w (x) w - (b-1) I) with
    |w| = 1, so its spectrum is b(a+1) - (b-1) once and -(b-1) n-1 times.
    """
    x = _points(x)
    _check_nonzero(x)
    _check_off_hyperplanes(x)
    n = x.shape[-1]
    s = bnorm_eval(x, B.b)
    top = B.b * (B.a + 1.0) - (B.b - 1.0)
    bracket = e.lam * top - e.Lam * (n - 1) * (B.b - 1.0)
    bracket = bracket - e.Lam * gradient_power(signed_power(x, B.b - 1.0), B.p)
    return s ** (-(B.a + 1.0) * (B.p + 1.0)) * bracket


def barrier_shifted_residual(x, B: BarrierParams, e: EllipticityParams):
    """Residual of the shifted barrier Phi = K Phi_0 + const: K^(1+p) times
    barrier_lower_residual, scaled in log space from the normalized residual."""
    x = _points(x)
    normalized = barrier_normalized_residual(x, B, e)
    s = bnorm_eval(x, B.b)
    log_scale = (1.0 + B.p) * _log_amplitude(B) - (B.a + 1.0) * (B.p + 1.0) * np.log(s)
    return _scaled_by_amplitude(log_scale, normalized)


def barrier_log_shifted_residual(x, B: BarrierParams, e: EllipticityParams):
    """Natural log of barrier_shifted_residual, -inf where it is not positive."""
    x = _points(x)
    normalized = barrier_normalized_residual(x, B, e)
    s = bnorm_eval(x, B.b)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_norm = np.where(normalized > 0, np.log(np.abs(normalized)), -np.inf)
    return (
        (1.0 + B.p) * _log_amplitude(B)
        - (B.a + 1.0) * (B.p + 1.0) * np.log(s)
        + log_norm
    )


def verification_sample(n: int, samples_per_axis: int = 41) -> np.ndarray:
    """Uniform samples_per_axis^n sample of Q_{6n} minus Q_{1/8n}.

    Points with a coordinate within 1e-3 * 6n of zero are dropped, since
    the closed-form Hessians are undefined on the hyperplanes.
    """
    if not 1 <= n <= 4:
        raise InvalidInputError(f"barrier verification supports n <= 4, got {n}")
    axis = np.linspace(-6.0 * n, 6.0 * n, samples_per_axis)
    grid = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1)
    grid = grid.reshape(-1, n)
    keep = np.max(np.abs(grid), axis=1) >= 1.0 / (8 * n)
    keep &= np.min(np.abs(grid), axis=1) > 1e-3 * 6.0 * n
    return grid[keep]


def sample_minimum(func, sample: np.ndarray) -> float:
    """Minimum of func over sample, evaluated in chunks of SAMPLE_CHUNK points."""
    lowest = np.inf
    for start in range(0, len(sample), SAMPLE_CHUNK):
        lowest = min(lowest, float(np.min(func(sample[start:start + SAMPLE_CHUNK]))))
    return lowest


def select_barrier_exponent(
        n: int,
        p: float,
        e: EllipticityParams,
        samples_per_axis: int = 41,
) -> float:
    """Smallest a in the ladder 2, 4, 8, ... making the barrier a strict subsolution.

    The criterion is barrier_normalized_residual > 1 at every point of
    verification_sample(n, samples_per_axis).

    Raises
    ------
    SearchFailureError
        If no a up to 2**20 passes.
    """
    sample = verification_sample(n, samples_per_axis)
    a = 2.0
    while a <= MAX_LADDER_EXPONENT:
        B = BarrierParams(a=a, p=p)
        lowest = sample_minimum(
            lambda pts: barrier_normalized_residual(pts, B, e), sample
        )
        logger.debug(f"barrier exponent a={a:g}: min normalized residual {lowest:.6g}")
        if lowest > 1.0:
            logger.info(f"Selected barrier exponent a={a:g} for n={n}, p={p:g}")
            return a
        a *= 2.0
    raise SearchFailureError(
        f"no barrier exponent up to {MAX_LADDER_EXPONENT} makes the normalized"
        f" residual exceed 1 for n={n}, p={p}, lambda={e.lam}, Lambda={e.Lam}"
    )


def barrier_shift_log2_amplitude(n: int, a: float, p: float) -> int:
    """Smallest integer k >= 1 with 2**k (Phi_0(4,...,4) - Phi_0(5n e_1)) > 2.

    The corner of Q_4 is where Phi_0 is smallest on Q_4, so the shifted
    barrier then exceeds 2 on all of Q_4 minus Q_{1/8n}.
    """
    b = degeneracy_exponent_b(p)
    s_corner = n * 4.0 ** b
    s_shift = (5.0 * n) ** b
    log2_gap = (
        -math.log2(a * b)
        - a * math.log2(s_corner)
        + math.log2(-math.expm1(a * math.log(s_corner / s_shift)))
    )
    return max(1, math.floor(1.0 - log2_gap) + 1)


def select_barrier_params(
        n: int,
        p: float,
        e: EllipticityParams,
        samples_per_axis: int = 41,
) -> BarrierParams:
    """Exponent from select_barrier_exponent and the smallest admissible amplitude.

    log2_K is the least integer that both keeps the shifted barrier above 2
    on Q_4 and makes barrier_log_shifted_residual positive on the sample.
    """
    a = select_barrier_exponent(n, p, e, samples_per_axis)
    sample = verification_sample(n, samples_per_axis)
    trial = BarrierParams(a=a, p=p)
    # log2 K must exceed (a+1) log2 s - log2(normalized)/(1+p) everywhere
    worst = sample_minimum(
        lambda pts: -(
            (a + 1.0) * np.log2(bnorm_eval(pts, trial.b))
            - np.log2(barrier_normalized_residual(pts, trial, e)) / (1.0 + p)
        ),
        sample,
    )
    log2_K = max(
        barrier_shift_log2_amplitude(n, a, p), math.floor(-worst) + 1
    )
    logger.info(f"Selected barrier amplitude K=2**{log2_K} for a={a:g}")
    return BarrierParams(a=a, p=p, log2_K=float(log2_K))


def barrier_grad_inverse(v, B: BarrierParams) -> np.ndarray:
    """(D Phi)^(-1)(v) = -K^(1/(ab+1)) |v|_{2+p}^(-(a+1)/(ab+1)) v^(1+p)."""
    v = _points(v)
    _check_nonzero(v)
    ab1 = B.a * B.b + 1.0
    N = np.sum(np.abs(v) ** (2.0 + B.p), axis=-1)
    factor = -np.exp2(B.log2_K / ab1) * N ** (-(B.a + 1.0) / ab1)
    return factor[..., None] * np.abs(v) ** B.p * v


def barrier_core_matrix(v, B: BarrierParams) -> np.ndarray:
    """B(v) = -((a+1)/(ab+1))(2+p) w (x) w + (1+p) I, w = v^(1+p/2)/|v|_{2+p}^(1/2)."""
    v = _points(v)
    _check_nonzero(v)
    n = v.shape[-1]
    N = np.sum(np.abs(v) ** (2.0 + B.p), axis=-1)
    w = signed_power(v, 1.0 + B.p / 2.0) / np.sqrt(N)[..., None]
    gamma = (B.a + 1.0) / (B.a * B.b + 1.0)
    return (
        -gamma * (2.0 + B.p) * w[..., :, None] * w[..., None, :]
        + (1.0 + B.p) * np.eye(n)
    )


def barrier_core_bound(B: BarrierParams) -> float:
    """Entrywise bound C(a,p) on barrier_core_matrix: gamma (2+p) + (1+p)."""
    gamma = (B.a + 1.0) / (B.a * B.b + 1.0)
    return gamma * (2.0 + B.p) + (1.0 + B.p)


def _inverse_gradient_scale(v: np.ndarray, B: BarrierParams) -> np.ndarray:
    ab1 = B.a * B.b + 1.0
    N = np.sum(np.abs(v) ** (2.0 + B.p), axis=-1)
    return np.exp2(B.log2_K / ab1) * N ** (-(B.a + 1.0) / ab1)


def inverse_gradient_jacobian(v, B: BarrierParams) -> np.ndarray:
    """D((D Phi)^(-1))(v) = -c(v) diag(|v_i|^(p/2)) B(v) diag(|v_i|^(p/2)).

    By the inverse function theorem this equals (D^2 Phi)^(-1) at the
    point whose shifted-barrier gradient is v.
    """
    v = _points(v)
    core = barrier_core_matrix(v, B)
    return -_inverse_gradient_scale(v, B)[..., None, None] * weighted_hessian(v, core, B.p)


def inverse_gradient_det_factor(v, B: BarrierParams):
    """|det| of the v-dependent factor: c(v)^n |det B(v)|.

    For A = diag(|v_i|^(p/2)) (H - D^2 Phi) diag(|v_i|^(p/2)),
    |det(D((D Phi)^(-1))(v) (D^2 Phi - H))| = inverse_gradient_det_factor * |det A|.
    """
    v = _points(v)
    n = v.shape[-1]
    core = barrier_core_matrix(v, B)
    return _inverse_gradient_scale(v, B) ** n * np.abs(np.linalg.det(core))


def sample_paraboloid_identity(
        n: int, p: float, K: float, samples_per_axis: int = 41, radius: float = 1.0
) -> float:
    """Max relative deviation of weighted_hessian(D phi, D^2 phi) from -c I.

    Points are the samples_per_axis^n grid of [-radius, radius]^n with
    min |x_i| > 0.1 radius.
    """
    P = ParaboloidParams(K=K, p=p)
    axis = np.linspace(-radius, radius, samples_per_axis)
    axis = axis[np.abs(axis) > 0.1 * radius]
    pts = np.array(list(itertools.product(axis, repeat=n)))
    W = weighted_hessian(phi_grad(pts, P), phi_hess(pts, P), p)
    target = -phi_identity_constant(P) * np.eye(n)
    return float(np.max(np.abs(W - target)) / phi_identity_constant(P))
