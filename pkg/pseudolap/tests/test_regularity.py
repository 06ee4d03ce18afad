from hypothesis import given, strategies as st
import numpy as np
import pytest

from pseudolap.errors import DyadicTreeError, InvalidInputError
from pseudolap.fields import ScalarField, sample_field
from pseudolap.profiles import ParaboloidParams, lemma_amplitude, lemma_threshold
from pseudolap.regularity import (
    DyadicCube,
    TailCurve,
    children,
    cz_check,
    cz_closure,
    dyadic_cube_of,
    fit_tail,
    harnack_report,
    holder_report,
    lp_norm_grid,
    predecessor,
    random_cz_instance,
    regularity_report,
    tail_distribution,
)
from pseudolap.sliding import ThresholdConfig, measure_estimate_experiment
from pseudolap.solver import SolveConfig, solve_dirichlet
from pseudolap.tests.conftest import separable_field, unit_grid, zero_field


@st.composite
def dyadic_cubes(draw):
    n = draw(st.integers(1, 3))
    level = draw(st.integers(1, 6))
    index = draw(st.lists(st.integers(0, 2 ** level - 1), min_size=n, max_size=n))
    return DyadicCube(level, index)


def test_dyadic_cube_validation():
    with pytest.raises(DyadicTreeError):
        DyadicCube(-1, (0,))
    with pytest.raises(DyadicTreeError):
        DyadicCube(2, (0, 4))
    with pytest.raises(DyadicTreeError):
        predecessor(DyadicCube(0, (0, 0)))


def test_dyadic_cube_geometry():
    c = DyadicCube(2, (1, 3))
    assert c.side == 0.5
    lower, upper = c.bounds()
    np.testing.assert_allclose(lower, [-0.5, 0.5])
    np.testing.assert_allclose(upper, [0.0, 1.0])
    assert c.contains([-0.25, 0.75])
    assert not c.contains([0.0, 0.75])
    assert dyadic_cube_of([-0.25, 0.75], 2) == c
    assert dyadic_cube_of([1.0, 1.0], 2) == DyadicCube(2, (3, 3))
    with pytest.raises(InvalidInputError):
        dyadic_cube_of([1.5, 0.0], 2)


@given(dyadic_cubes())
def test_children_and_predecessor(c):
    kids = children(c)
    assert len(kids) == 2 ** c.dim
    assert len(set(kids)) == len(kids)
    for kid in kids:
        assert predecessor(kid) == c
        lower, upper = kid.bounds()
        assert c.contains((lower + upper) / 2)
    assert c in children(predecessor(c))


def test_cz_check_trivial_and_deep_cube():
    empty = np.zeros((8, 8), dtype=bool)
    assert cz_check(empty, empty, 0.3).holds
    # E one level-2 cube, F its parent: the only dense cubes are inside E
    E = np.zeros((8, 8), dtype=bool)
    F = np.zeros((8, 8), dtype=bool)
    E[2:4, 4:6] = True
    F[0:4, 4:8] = True
    verdict = cz_check(E, F, 0.3)
    assert verdict.holds
    assert verdict.measure_E == pytest.approx(1 / 16)
    assert verdict.measure_F == pytest.approx(1 / 4)


def test_cz_check_names_violated_hypothesis():
    full = np.ones((8, 8), dtype=bool)
    assert cz_check(full, full, 0.5).violated == "hypothesis-1"
    E = np.zeros((8, 8), dtype=bool)
    E[5, 2] = True
    verdict = cz_check(E, E, 0.2)
    assert verdict.violated == "hypothesis-2"
    # density 1/4 > 0.2 first appears in the level-2 cube holding the cell
    assert verdict.cube == DyadicCube(2, (2, 1))
    assert not verdict.holds


def test_cz_check_rejects():
    E = np.zeros((8, 8), dtype=bool)
    E[0, 0] = True
    with pytest.raises(InvalidInputError):
        cz_check(E, np.zeros((8, 8), dtype=bool), 0.5)
    with pytest.raises(InvalidInputError):
        cz_check(np.zeros((6, 6), dtype=bool), np.zeros((6, 6), dtype=bool), 0.5)
    with pytest.raises(InvalidInputError):
        cz_check(E, E, 1.0)
    with pytest.raises(InvalidInputError):
        cz_check(E, np.ones((8, 4), dtype=bool), 0.5)


@pytest.mark.parametrize("n, level", [(1, 8), (2, 5), (3, 3)])
def test_cz_conclusion_on_random_instances(rng, n, level):
    for _ in range(100):
        delta = rng.uniform(0.05, 0.6)
        E, F = random_cz_instance(rng, n, level, rng.uniform(0.01, 0.5), delta)
        verdict = cz_check(E, F, delta)
        assert verdict.holds, verdict
        assert verdict.measure_E <= delta * verdict.measure_F


def test_cz_closure_contains_dense_parents():
    E = np.zeros((4, 4), dtype=bool)
    E[0, 0] = E[0, 1] = True
    F = cz_closure(E, 0.3)
    assert np.all(F[0:2, 0:2])
    assert np.all(F[E])
    assert cz_check(E, F, 0.3).holds


def test_lp_norm_grid():
    spec = unit_grid(2, 17)
    ones = ScalarField(spec, np.ones(spec.shape))
    full = np.ones(spec.shape, dtype=bool)
    assert lp_norm_grid(ones, mask=full) == pytest.approx(17 / 8)
    assert lp_norm_grid(ones, exponent=1, mask=full) == pytest.approx(289 / 64)
    assert lp_norm_grid(zero_field(ones)) == 0.0


def power_law_field(epsilon: float, m: int = 33) -> ScalarField:
    # k-th largest value (N / k)^(1/epsilon), so |{u > t}| / N ~ t^(-epsilon)
    N = m * m
    k = np.arange(1, N + 1)
    return ScalarField(unit_grid(2, m), ((N / k) ** (1.0 / epsilon)).reshape(m, m))


@pytest.mark.parametrize("epsilon", [0.5, 1.0, 2.0])
def test_tail_fit_recovers_power_law(epsilon):
    u = power_law_field(epsilon)
    thresholds = np.geomspace(1.5, 20.0 ** (1.0 / epsilon), 12)
    fit = fit_tail(tail_distribution(u, thresholds))
    assert fit.notice is None
    assert fit.epsilon == pytest.approx(epsilon, rel=0.05)
    assert fit.C == pytest.approx(1.0, rel=0.1)


def test_tail_fit_window_and_notice():
    flat = TailCurve(
        np.array([1.0, 2.0, 4.0, 8.0, 16.0]), np.array([1.0, 1.0, 0.5, 0.25, 0.125])
    )
    fit = fit_tail(flat)
    assert (fit.start, fit.stop) == (2, 5)
    assert fit.epsilon == pytest.approx(1.0)
    empty = TailCurve(np.array([1.0, 2.0, 4.0, 8.0]), np.array([1.0, 1.0, 1.0, 0.0]))
    fit = fit_tail(empty)
    assert fit.epsilon is None
    assert fit.notice is not None


def test_tail_distribution_rejects():
    u = power_law_field(1.0)
    with pytest.raises(InvalidInputError):
        tail_distribution(u, [2.0, 1.0])
    with pytest.raises(InvalidInputError):
        tail_distribution(u, [0.0, 1.0])
    with pytest.raises(InvalidInputError):
        tail_distribution(u.with_values(u.values + 5.0), [2.0, 3.0])


def test_harnack_report():
    spec = unit_grid(2, 33)
    u = ScalarField(spec, np.full(spec.shape, 2.0))
    assert harnack_report(u, zero_field(u), 1.0).ratio == pytest.approx(1.0)
    zero = zero_field(u)
    report = harnack_report(zero, zero, 1.0)
    assert report.ratio is None
    assert report.notice is not None
    with pytest.raises(InvalidInputError):
        harnack_report(u.with_values(-u.values), zero, 1.0)


def test_harnack_ratio_is_stable_under_refinement():
    ratios = []
    for m in (33, 65, 129):
        u = sample_field(unit_grid(2, m), lambda x: 1.0 + np.sum(x ** 2, axis=-1))
        ratios.append(harnack_report(u, zero_field(u), 0.0).ratio)
    np.testing.assert_allclose(ratios, 1.25, atol=0.05)


@pytest.mark.slow
@pytest.mark.parametrize(
    "func, alpha",
    [
        (lambda x: np.sqrt(np.linalg.norm(x, axis=-1)), 0.5),
        (lambda x: np.sqrt(np.abs(x[..., 0])), 0.5),
        (lambda x: np.abs(x[..., 0]), 1.0),
        (lambda x: x[..., 0], 1.0),
    ],
    ids=["radial-root", "axis-root", "abs", "linear"],
)
def test_holder_exponents_on_fine_grid(func, alpha):
    # closed balls centred at distance r from the kink reach 0 and 2r
    spec = unit_grid(2, 257)
    report = holder_report(sample_field(spec, func))
    np.testing.assert_allclose(report.radii, [0.25, 0.125, 0.0625])
    assert report.alpha == pytest.approx(alpha, rel=0.02)
    assert report.residual < 0.01


def test_holder_report_on_constant_field():
    spec = unit_grid(2, 65)
    report = holder_report(ScalarField(spec, np.ones(spec.shape)))
    assert report.alpha is None
    assert report.notice is not None


def test_regularity_report():
    u = sample_field(unit_grid(2, 129), lambda x: 1.0 + np.sum(x ** 2, axis=-1))
    report = regularity_report(u, zero_field(u), 0.0, [1.05, 1.1, 1.2, 1.4, 1.6, 1.8])
    assert report.harnack_ratio == pytest.approx(1.25, abs=0.01)
    assert report.holder_alpha is not None
    assert report.tail_epsilon is not None and report.tail_epsilon > 0
    assert report.notices == []
    assert report.measure_C is None


def test_regularity_report_carries_the_measure_constant():
    u = separable_field(unit_grid(2, 65), lambda x: 0.5 + 200.0 * x ** 2)
    P = ParaboloidParams(K=lemma_amplitude(2, 0.0), p=0.0)
    T = ThresholdConfig(delta=0.5, mu=0.5, M=lemma_threshold(2, 0.0, P.K))
    measure = measure_estimate_experiment(u, zero_field(u), T, P)
    assert measure.empirical_C is not None
    report = regularity_report(
        u, zero_field(u), 0.0, [1.05, 1.1, 1.2, 1.4, 1.6, 1.8], measure=measure
    )
    assert report.measure_C == measure.empirical_C


def dirichlet_solution(points_per_axis, boundary, p):
    spec = unit_grid(2, points_per_axis)
    g = sample_field(spec, boundary)
    u, report = solve_dirichlet(spec, zero_field(g), g, p, SolveConfig(tol=1e-8))
    assert report.converged
    return u


# positive boundary data, f = 0; the p = 1 solution keeps both partials away from 0
POSITIVE_PROBLEMS = [
    (lambda x: 3.0 + x[..., 0] ** 2 - x[..., 1] ** 2, 0.0),
    (lambda x: 1.5 + np.exp(x[..., 0]) * np.cos(x[..., 1]), 0.0),
    (lambda x: 2.0 + x[..., 0] + 0.25 * x[..., 0] ** 2 + 0.5 * x[..., 1], 1.0),
]


@pytest.mark.slow
@pytest.mark.parametrize("boundary, p", POSITIVE_PROBLEMS, ids=["saddle", "exp-cos", "p1"])
def test_harnack_ratio_of_solutions_is_stable(boundary, p):
    ratios = []
    for m in (33, 65):
        u = dirichlet_solution(m, boundary, p)
        assert np.min(u.values) > 0
        ratios.append(harnack_report(u, zero_field(u), p).ratio)
    coarse, fine = ratios
    assert fine > 1.0
    assert abs(fine - coarse) < 0.1 * coarse


def test_tail_of_a_solution_decays():
    boundary, p = POSITIVE_PROBLEMS[0]
    u = dirichlet_solution(33, boundary, p)
    report = regularity_report(u, zero_field(u), p, [1.05, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6])
    assert report.tail_epsilon is not None
    assert report.tail_epsilon > 0
