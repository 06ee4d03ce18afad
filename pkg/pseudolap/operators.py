"""Matrix kernels: eigenvalues, Pucci extremal operators, weighted Hessians.

All functions accept either a single object (a vector of shape (n,) or a
matrix of shape (n, n)) or a stack of them (shapes (..., n) and
(..., n, n)); results have the stack shape. Nothing here holds state.
"""
from dataclasses import dataclass
import logging
from typing import Tuple

import numpy as np

from pseudolap.errors import EigenSolverError, InvalidInputError


logger = logging.getLogger(__name__)

MAX_DIM = 16
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 64


@dataclass(frozen=True)
class EllipticityParams:
    """Ellipticity constants 0 < lam <= Lam of the Pucci operators."""
    lam: float
    Lam: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.Lam)):
            raise InvalidInputError("ellipticity constants must be finite")
        if not 0 < self.lam <= self.Lam:
            raise InvalidInputError(
                f"ellipticity requires 0 < lambda <= Lambda, got"
                f" lambda={self.lam}, Lambda={self.Lam}"
            )

    @property
    def is_normalized(self) -> bool:
        """True when lam <= 1 <= Lam, so that M- <= trace <= M+."""
        return self.lam <= 1.0 <= self.Lam


def check_exponent(p: float) -> float:
    """Validate a degeneracy exponent p >= 0 and return it as float."""
    p = float(p)
    if not np.isfinite(p) or p < 0:
        raise InvalidInputError(f"degeneracy exponent must be >= 0, got {p}")
    return p


def as_sym_matrix(M) -> np.ndarray:
    """Return M as a float array of symmetric matrices.

    Raises
    ------
    InvalidInputError
        If M is not square, exceeds MAX_DIM, has non-finite entries or is
        not symmetric up to round-off.
    """
    A = np.array(M, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise InvalidInputError(f"expected square matrices, got {A.shape}")
    n = A.shape[-1]
    if not 1 <= n <= MAX_DIM:
        raise InvalidInputError(f"matrix dimension {n} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    At = np.swapaxes(A, -1, -2)
    scale = 1.0 + np.max(np.abs(A), initial=0.0)
    if np.max(np.abs(A - At), initial=0.0) > 1e-12 * scale:
        raise InvalidInputError("matrix is not symmetric")
    return 0.5 * (A + At)


def sym_eigh(M) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of symmetric matrices by cyclic Jacobi rotations.

    Parameters
    ----------
    M : array_like, shape (..., n, n)
        Symmetric matrices with n <= 16.

    Returns
    -------
    w : np.ndarray, shape (..., n)
        Eigenvalues in ascending order.
    V : np.ndarray, shape (..., n, n)
        Orthogonal matrices whose columns are the matching eigenvectors, so
        that M = V diag(w) V^T.

    Raises
    ------
    InvalidInputError
        For non-finite, non-square or non-symmetric input.
    EigenSolverError
        If the off-diagonal mass has not dropped below 1e-13 times the
        Frobenius norm after JACOBI_MAX_SWEEPS sweeps.
    """
    A = as_sym_matrix(M)
    batch_shape = A.shape[:-2]
    n = A.shape[-1]
    A = A.reshape((-1, n, n)).copy()
    V = np.broadcast_to(np.eye(n), A.shape).copy()
    offdiag = ~np.eye(n, dtype=bool)
    threshold = JACOBI_TOL * np.maximum(
        np.sqrt(np.sum(A * A, axis=(1, 2))), np.finfo(float).tiny
    )
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(A[:, offdiag] ** 2, axis=1))
        if np.all(off <= threshold):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                active = np.abs(apq) > 0
                safe_apq = np.where(active, apq, 1.0)
                theta = (A[:, q, q] - A[:, p, p]) / (2.0 * safe_apq)
                sign = np.where(theta >= 0, 1.0, -1.0)
                t = sign / (np.abs(theta) + np.hypot(theta, 1.0))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                c_col, s_col = c[:, None], s[:, None]
                Ap, Aq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = c_col * Ap - s_col * Aq
                A[:, :, q] = s_col * Ap + c_col * Aq
                Ap, Aq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = c_col * Ap - s_col * Aq
                A[:, q, :] = s_col * Ap + c_col * Aq
                Vp, Vq = V[:, :, p].copy(), V[:, :, q].copy()
                V[:, :, p] = c_col * Vp - s_col * Vq
                V[:, :, q] = s_col * Vp + c_col * Vq
    else:
        off = np.sqrt(np.sum(A[:, offdiag] ** 2, axis=1))
        if not np.all(off <= threshold):
            raise EigenSolverError(
                f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS}"
                f" sweeps (max off-diagonal norm {off.max():.3e})"
            )
    w = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1)
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w.reshape(batch_shape + (n,)), V.reshape(batch_shape + (n, n))


def sym_eigenvalues(M) -> np.ndarray:
    """Ascending eigenvalues of symmetric matrices (cyclic Jacobi)."""
    w, _ = sym_eigh(M)
    return w


def _signed_sums(M) -> Tuple[np.ndarray, np.ndarray]:
    w = sym_eigenvalues(M)
    negative = np.sum(np.where(w < 0, w, 0.0), axis=-1)
    positive = np.sum(np.where(w > 0, w, 0.0), axis=-1)
    return negative, positive


def pucci_minus(M, e: EllipticityParams):
    """Minimal Pucci operator Lam * sum(e_i < 0) + lam * sum(e_i > 0)."""
    negative, positive = _signed_sums(M)
    return e.Lam * negative + e.lam * positive


def pucci_plus(M, e: EllipticityParams):
    """Maximal Pucci operator lam * sum(e_i < 0) + Lam * sum(e_i > 0)."""
    negative, positive = _signed_sums(M)
    return e.lam * negative + e.Lam * positive


def _check_pair(g, H) -> Tuple[np.ndarray, np.ndarray]:
    g = np.asarray(g, dtype=float)
    H = np.asarray(H, dtype=float)
    if H.ndim < 2 or g.shape[-1] != H.shape[-1] or H.shape[-1] != H.shape[-2]:
        raise InvalidInputError(
            f"gradient shape {g.shape} does not match Hessian shape {H.shape}"
        )
    if not np.all(np.isfinite(g)):
        raise InvalidInputError("gradient has non-finite entries")
    return g, H


def coordinate_weights(g, p: float) -> np.ndarray:
    """Weights |g_i|^(p/2); 0**0 is taken as 1."""
    p = check_exponent(p)
    return np.abs(np.asarray(g, dtype=float)) ** (p / 2.0)


def weighted_hessian(g, H, p: float) -> np.ndarray:
    """diag(|g_i|^(p/2)) H diag(|g_j|^(p/2)).

    Zero gradient components give zero rows and columns; this is the
    coordinatewise degeneracy of the operator.
    """
    g, H = _check_pair(g, H)
    w = coordinate_weights(g, p)
    return w[..., :, None] * H * w[..., None, :]


def gradient_power(g, p: float):
    """|g|^(p+1) with the Euclidean norm."""
    p = check_exponent(p)
    return np.linalg.norm(np.asarray(g, dtype=float), axis=-1) ** (p + 1.0)


def lower_residual(g, H, p: float, e: EllipticityParams, f_val=0.0):
    """M-(weighted Hessian) - Lam |g|^(p+1) - f."""
    W = weighted_hessian(g, H, p)
    return pucci_minus(W, e) - e.Lam * gradient_power(g, p) - f_val


def upper_residual(g, H, p: float, e: EllipticityParams, f_val=0.0):
    """M+(weighted Hessian) + Lam |g|^(p+1) - f."""
    W = weighted_hessian(g, H, p)
    return pucci_plus(W, e) + e.Lam * gradient_power(g, p) - f_val


def pseudo_laplacian(g, H, p: float):
    """sum_i |g_i|^p H_ii, the pseudo-(p+2)-Laplacian at a point."""
    g, H = _check_pair(g, H)
    p = check_exponent(p)
    return np.sum(
        np.abs(g) ** p * np.diagonal(H, axis1=-2, axis2=-1), axis=-1
    )
