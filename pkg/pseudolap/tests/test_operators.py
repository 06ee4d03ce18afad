from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
import numpy as np
import pytest

from pseudolap.errors import InvalidInputError
from pseudolap.operators import (
    EllipticityParams,
    as_sym_matrix,
    check_exponent,
    coordinate_weights,
    gradient_power,
    lower_residual,
    pseudo_laplacian,
    pucci_minus,
    pucci_plus,
    sym_eigenvalues,
    sym_eigh,
    upper_residual,
    weighted_hessian,
)


TOL = 1e-9

entries = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def sym_matrices(draw, n=None):
    n = draw(st.integers(1, 4)) if n is None else n
    A = draw(arrays(float, (n, n), elements=entries))
    return (A + A.T) / 2


@st.composite
def matrix_pairs(draw):
    n = draw(st.integers(1, 4))
    return draw(sym_matrices(n)), draw(sym_matrices(n))


ellipticities = st.tuples(
    st.floats(0.1, 3.0), st.floats(1.0, 4.0)
).map(lambda t: EllipticityParams(min(t), max(t)))


def random_symmetric(rng, count, n):
    A = rng.uniform(-1, 1, size=(count, n, n))
    return (A + np.swapaxes(A, 1, 2)) / 2


@pytest.mark.parametrize(
    "M, expected",
    [
        (np.eye(2), [1.0, 1.0]),
        ([[0.0, 1.0], [1.0, 0.0]], [-1.0, 1.0]),
        (np.diag([2.0, -3.0]), [-3.0, 2.0]),
    ],
)
def test_sym_eigenvalues_small_cases(M, expected):
    np.testing.assert_allclose(sym_eigenvalues(M), expected, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 5, 16])
def test_sym_eigh_reconstructs(rng, n):
    M = random_symmetric(rng, 50, n)
    w, V = sym_eigh(M)
    assert np.all(np.diff(w, axis=-1) >= 0)
    rebuilt = V @ (w[..., :, None] * np.swapaxes(V, -1, -2))
    scale = 1.0 + np.max(np.abs(M))
    assert np.max(np.abs(rebuilt - M)) <= 1e-10 * scale
    eye = np.swapaxes(V, -1, -2) @ V
    np.testing.assert_allclose(eye, np.broadcast_to(np.eye(n), eye.shape), atol=1e-12)


def test_sym_eigenvalues_match_numpy_on_large_stack(rng):
    for n in (2, 3):
        M = random_symmetric(rng, 5000, n)
        np.testing.assert_allclose(sym_eigenvalues(M), np.linalg.eigvalsh(M), atol=TOL)


def test_sym_eigenvalues_zero_matrix():
    np.testing.assert_array_equal(sym_eigenvalues(np.zeros((3, 3))), np.zeros(3))


@pytest.mark.parametrize(
    "M",
    [
        [[1.0, np.nan], [np.nan, 1.0]],
        [[1.0, 2.0], [0.0, 1.0]],
        np.ones((2, 3)),
        np.eye(17),
    ],
)
def test_as_sym_matrix_rejects(M):
    with pytest.raises(InvalidInputError):
        as_sym_matrix(M)


def test_ellipticity_params():
    with pytest.raises(InvalidInputError, match="0 < lambda <= Lambda"):
        EllipticityParams(2.0, 1.0)
    with pytest.raises(InvalidInputError):
        EllipticityParams(0.0, 1.0)
    assert EllipticityParams(0.5, 2.0).is_normalized
    assert not EllipticityParams(1.5, 2.0).is_normalized


def test_check_exponent():
    assert check_exponent(2) == 2.0
    with pytest.raises(InvalidInputError):
        check_exponent(-0.5)


def test_pucci_on_diagonal():
    e = EllipticityParams(1.0, 2.0)
    M = np.diag([2.0, -3.0])
    assert pucci_minus(M, e) == pytest.approx(-4.0)
    assert pucci_plus(M, e) == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_pucci_on_identity(n):
    e = EllipticityParams(0.25, 3.0)
    assert pucci_minus(np.eye(n), e) == pytest.approx(n * 0.25)
    assert pucci_plus(np.eye(n), e) == pytest.approx(n * 3.0)


def test_pucci_matches_brute_force(rng):
    e = EllipticityParams(0.5, 2.0)
    for n in (2, 3):
        M = random_symmetric(rng, 10000, n)
        w = np.linalg.eigvalsh(M)
        neg = np.where(w < 0, w, 0.0).sum(axis=-1)
        pos = np.where(w > 0, w, 0.0).sum(axis=-1)
        np.testing.assert_allclose(pucci_minus(M, e), e.Lam * neg + e.lam * pos, atol=TOL)
        np.testing.assert_allclose(pucci_plus(M, e), e.lam * neg + e.Lam * pos, atol=TOL)


def test_pucci_sum_inequalities_on_random_pairs(rng):
    e = EllipticityParams(0.5, 2.0)
    for n in (2, 3):
        M = random_symmetric(rng, 10000, n)
        N = random_symmetric(rng, 10000, n)
        lo_M, hi_M = pucci_minus(M, e), pucci_plus(M, e)
        lo_N, hi_N = pucci_minus(N, e), pucci_plus(N, e)
        lo_MN, hi_MN = pucci_minus(M + N, e), pucci_plus(M + N, e)
        assert np.all(lo_M + lo_N <= lo_MN + TOL)
        assert np.all(lo_MN <= lo_M + hi_N + TOL)
        assert np.all(hi_M + lo_N <= hi_MN + TOL)
        assert np.all(hi_MN <= hi_M + hi_N + TOL)


@given(matrix_pairs(), ellipticities)
def test_pucci_sum_inequalities(pair, e):
    M, N = pair
    assert pucci_minus(M, e) + pucci_minus(N, e) <= pucci_minus(M + N, e) + TOL * 100
    assert pucci_minus(M + N, e) <= pucci_minus(M, e) + pucci_plus(N, e) + TOL * 100
    assert pucci_plus(M, e) + pucci_minus(N, e) <= pucci_plus(M + N, e) + TOL * 100
    assert pucci_plus(M + N, e) <= pucci_plus(M, e) + pucci_plus(N, e) + TOL * 100


@given(sym_matrices(), ellipticities, st.floats(0, 5))
def test_pucci_homogeneity_and_symmetry(M, e, c):
    assert pucci_minus(c * M, e) == pytest.approx(c * pucci_minus(M, e), abs=1e-8)
    assert pucci_plus(c * M, e) == pytest.approx(c * pucci_plus(M, e), abs=1e-8)
    assert pucci_minus(-M, e) == pytest.approx(-pucci_plus(M, e), abs=1e-8)


@given(sym_matrices(), st.floats(0.1, 1.0), st.floats(1.0, 4.0))
def test_pucci_brackets_trace_when_normalized(M, lam, Lam):
    e = EllipticityParams(lam, Lam)
    trace = float(np.trace(M))
    assert pucci_minus(M, e) <= trace + 1e-8
    assert trace <= pucci_plus(M, e) + 1e-8


def test_weighted_hessian_examples():
    H = np.array([[2.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(weighted_hessian([1.0, 4.0], H, 1.0), [[2.0, 2.0], [2.0, 0.0]])
    np.testing.assert_array_equal(weighted_hessian([3.0, -7.0], H, 0.0), H)


def test_weighted_hessian_zero_component_degenerates():
    H = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
    W = weighted_hessian([1.5, 0.0, -2.0], H, 2.0)
    np.testing.assert_array_equal(W[1], 0.0)
    np.testing.assert_array_equal(W[:, 1], 0.0)


def test_zero_to_the_zero_is_one():
    np.testing.assert_array_equal(coordinate_weights([0.0, 2.0], 0.0), [1.0, 1.0])


@given(
    arrays(float, 3, elements=entries),
    sym_matrices(3),
    st.floats(0, 4),
)
def test_weighted_hessian_keeps_psd(g, B, p):
    H = B @ B.T
    W = weighted_hessian(g, H, p)
    np.testing.assert_allclose(W, W.T, rtol=0, atol=1e-9 * (1 + np.abs(W).max()))
    assert sym_eigenvalues(W)[0] >= -1e-9 * (1 + np.abs(W).max())


def test_weighted_hessian_stacks(rng):
    g = rng.normal(size=(4, 5, 3))
    H = random_symmetric(rng, 20, 3).reshape(4, 5, 3, 3)
    W = weighted_hessian(g, H, 1.5)
    assert W.shape == (4, 5, 3, 3)
    np.testing.assert_allclose(W[2, 3], weighted_hessian(g[2, 3], H[2, 3], 1.5))


def test_weighted_hessian_shape_mismatch():
    with pytest.raises(InvalidInputError):
        weighted_hessian([1.0, 2.0], np.eye(3), 1.0)


def test_residual_examples():
    e = EllipticityParams(1.0, 1.0)
    zero = np.zeros((2, 2))
    assert lower_residual([0.0, 0.0], zero, 1.0, e) == 0.0
    assert upper_residual([0.0, 0.0], zero, 1.0, e) == 0.0
    g = np.array([3.0, 4.0])
    H = np.diag([2.0, -3.0])
    assert lower_residual(g, H, 0.0, e) == pytest.approx(-1.0 - 5.0)
    assert upper_residual(g, H, 0.0, e, f_val=2.0) == pytest.approx(-1.0 + 5.0 - 2.0)


def test_gradient_power_is_euclidean():
    assert gradient_power([3.0, 4.0], 1.0) == pytest.approx(25.0)


@given(arrays(float, 2, elements=entries), sym_matrices(2), st.floats(0, 3), ellipticities)
def test_lower_residual_below_upper(g, H, p, e):
    assert lower_residual(g, H, p, e) <= upper_residual(g, H, p, e) + 1e-7 * (
        1 + np.abs(weighted_hessian(g, H, p)).max() + gradient_power(g, p)
    )


def test_pseudo_laplacian_examples():
    assert pseudo_laplacian([1.0, 4.0], np.diag([2.0, 0.0]), 1.0) == pytest.approx(2.0)
    H = np.array([[1.0, 7.0], [7.0, -4.0]])
    assert pseudo_laplacian([0.0, 0.0], H, 0.0) == pytest.approx(-3.0)


@given(arrays(float, 3, elements=entries), sym_matrices(3), st.floats(0, 3))
def test_pseudo_laplacian_is_trace_of_weighted_hessian(g, H, p):
    expected = np.trace(weighted_hessian(g, H, p))
    assert pseudo_laplacian(g, H, p) == pytest.approx(expected, rel=1e-12, abs=1e-9)


def test_determinant_identities(rng):
    # det(I + MN) = det(I + NM)
    for n in (2, 3):
        M = rng.normal(size=(10000, n, n))
        N = rng.normal(size=(10000, n, n))
        eye = np.eye(n)
        left = np.linalg.det(eye + M @ N)
        right = np.linalg.det(eye + N @ M)
        assert np.max(np.abs(left - right) / (1 + np.abs(left))) <= TOL
    # AM-GM on positive semidefinite matrices
    for n in (2, 3):
        B = rng.normal(size=(10000, n, n))
        A = B @ np.swapaxes(B, 1, 2)
        w = sym_eigenvalues(A)
        det = np.prod(w, axis=-1)
        assert np.all(det <= (np.sum(w, axis=-1) / n) ** n * (1 + 1e-9) + 1e-12)
