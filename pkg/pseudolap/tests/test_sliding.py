from collections import defaultdict
from dataclasses import replace
import math

import numpy as np
import pytest

from pseudolap import locations
from pseudolap.errors import InvalidInputError
from pseudolap.fields import GridSpec, ScalarField, sample_field
from pseudolap.operators import EllipticityParams
from pseudolap.profiles import (
    BarrierParams,
    ParaboloidParams,
    barrier_log2_sup,
    barrier_shifted_eval,
    barrier_shifted_grad,
    lemma_amplitude,
    lemma_threshold,
    phi_eval,
    phi_grad,
    select_barrier_params,
)
from pseudolap.regularize import InfConvParams, inf_convolution
from pseudolap.sliding import (
    ThresholdConfig,
    barrier_extended_eval,
    barrier_sup,
    barrier_touch_jacobian_det,
    barrier_vertex_from_gradient,
    doubling_experiment,
    format_index_set,
    measure_estimate_experiment,
    rescan_touching,
    slide_vertex,
    sliced_measure_experiment,
    touch_jacobian_det,
    touch_jacobian_det_unsymmetrized,
    vertex_from_gradient,
)
from pseudolap.tests.conftest import separable_field, unit_grid, zero_field


P2 = ParaboloidParams(K=lemma_amplitude(2, 0.0), p=0.0)
T2 = ThresholdConfig(delta=0.5, mu=0.5, M=lemma_threshold(2, 0.0, P2.K))


def bowl(dim, m, curvature=200.0):
    return separable_field(unit_grid(dim, m), lambda x: curvature * x ** 2)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(delta=0.0, mu=0.5, M=2.0),
        dict(delta=0.5, mu=1.0, M=2.0),
        dict(delta=0.5, mu=0.5, M=1.0),
        dict(delta=0.5, mu=0.5, M=2.0, eps_deg=-0.1),
    ],
)
def test_threshold_config_rejects(kwargs):
    with pytest.raises(InvalidInputError):
        ThresholdConfig(**kwargs)


def test_format_index_set():
    assert format_index_set(()) == "-"
    assert format_index_set((0, 2)) == "0,2"


def test_slide_over_flat_field_touches_at_vertex():
    u = ScalarField(unit_grid(2, 17), np.zeros((17, 17)))
    y = u.spec.coordinates((5, 9))
    record = slide_vertex(u, y, P2)
    assert record.touch_index == (5, 9)
    assert record.offset == 0.0
    assert record.nondeg_set == ()
    assert rescan_touching(u, record, P2)
    assert not rescan_touching(u, replace(record, offset=-1.0), P2)


def test_slide_vertex_rejects_outside_points():
    u = bowl(2, 17)
    with pytest.raises(InvalidInputError):
        slide_vertex(u, [2.0, 0.0], P2)


@pytest.mark.parametrize("p", [0.0, 1.0, 2.0])
def test_vertex_from_gradient_inverts_touch(p):
    P = ParaboloidParams(K=4.0, p=p)
    x = np.array([0.3, -0.2, 0.05])
    y = np.array([-0.1, 0.15, 0.2])
    np.testing.assert_allclose(vertex_from_gradient(x, phi_grad(x - y, P), P), y, atol=1e-12)


def test_touch_jacobian_forms_agree(rng):
    P = ParaboloidParams(K=4.0, p=1.5)
    for n in (2, 3):
        for _ in range(50):
            g = rng.normal(size=n)
            A = rng.normal(size=(n, n))
            H = A + A.T
            assert touch_jacobian_det(g, H, P) == pytest.approx(
                touch_jacobian_det_unsymmetrized(g, H, P), rel=1e-9, abs=1e-12
            )


def test_measure_experiment_on_convex_bowl():
    # 200 |x|^2 exceeds M at the nodes k/32 of Q_{1/8} with k1^2 + k2^2 >= 8;
    # every slide touches the bowl at the origin.
    u = bowl(2, 65)
    report = measure_estimate_experiment(u, zero_field(u), T2, P2)
    assert report.vertex_counts == {(0, 1): 16, (0,): 6, (1,): 6}
    assert report.touch_counts == {(0, 1): 1, (0,): 1, (1,): 1}
    assert all(r.touch_index == (32, 32) for r in report.records)
    assert report.hypothesis_active
    assert report.touch_violations == 0
    assert report.self_touch_violations == 0
    assert report.rescan_failures == 0
    assert report.psd_violations == 0
    assert report.min_eigenvalue == pytest.approx(101.0)
    for record in report.records:
        assert record.jac_det == pytest.approx(101.0 ** len(record.nondeg_set))
    assert report.empirical_C == pytest.approx(16 / (1 + 0.25 * 32 ** 2))
    assert report.forcing_ok
    assert 0.9 < report.density_fraction < 1.0
    assert report.passed
    text = report.to_text()
    assert "V[0,1] = 16\n" in text
    assert "T[0] = 1\n" in text
    assert "passed = true\n" in text


def test_measure_experiment_is_thread_independent(monkeypatch):
    u = bowl(2, 65)
    serial = measure_estimate_experiment(u, zero_field(u), T2, P2)
    monkeypatch.setattr(locations, "WORKERS", 4)
    threaded = measure_estimate_experiment(u, zero_field(u), T2, P2)
    assert threaded.summary() == serial.summary()
    assert threaded.records == serial.records


def test_measure_experiment_empty_vertex_set():
    u = ScalarField(unit_grid(2, 33), np.zeros((33, 33)))
    report = measure_estimate_experiment(u, u, T2, P2)
    assert report.total_vertices == 0
    assert report.empirical_C is None
    assert report.notice is not None
    assert report.passed


def test_measure_experiment_validates_inputs():
    u = bowl(2, 33)
    with pytest.raises(InvalidInputError):
        measure_estimate_experiment(u, zero_field(bowl(2, 17)), T2, P2)
    wide = separable_field(unit_grid(2, 33, half_width=2.0), lambda x: x ** 2)
    with pytest.raises(InvalidInputError):
        measure_estimate_experiment(wide, zero_field(wide), T2, P2)
    negative = u.with_values(u.values - 1.0)
    with pytest.raises(InvalidInputError):
        measure_estimate_experiment(negative, zero_field(u), T2, P2)


def test_sliced_experiment_matches_vertex_count():
    # nodes k/16 of Q_{1/12} with k1^2 + k2^2 + k3^2 >= 2
    u = bowl(3, 33)
    T = ThresholdConfig(delta=0.5, mu=0.5, M=1.5)
    P = ParaboloidParams(K=4.0, p=0.0)
    full = measure_estimate_experiment(u, zero_field(u), T, P)
    sliced = sliced_measure_experiment(u, zero_field(u), T, P, [2])
    assert full.total_vertices == sliced.total_vertices == 20
    assert sliced.slices == 3
    assert sliced.slice_axes == (2,)
    assert sliced.summary()["slice_axes"] == "2"
    for record in sliced.records:
        assert record.vertex[2] == record.touch[2]
        assert u.spec.coordinates(record.touch_index)[2] == pytest.approx(record.touch[2])
        assert 2 not in record.nondeg_set
    assert sliced.rescan_failures == 0


def test_sliced_experiment_without_axes_is_the_full_experiment():
    u = bowl(2, 33)
    full = measure_estimate_experiment(u, zero_field(u), T2, P2)
    assert sliced_measure_experiment(u, zero_field(u), T2, P2, []).summary() == full.summary()


B2 = BarrierParams(a=2.0, p=0.0, log2_K=1.0)


def test_barrier_extension():
    n = 2
    inside = np.array([[1.0 / 64, 0.0], [1.0 / 64, -1.0 / 128]])
    np.testing.assert_allclose(
        barrier_extended_eval(inside, B2), barrier_shifted_eval(4 * inside, B2)
    )
    outside = np.array([[0.5, 0.25], [-3.0, 1.0]])
    np.testing.assert_allclose(
        barrier_extended_eval(outside, B2), barrier_shifted_eval(outside, B2)
    )
    assert barrier_extended_eval(np.zeros(n), B2) == pytest.approx(barrier_sup(n, B2))
    assert barrier_sup(n, B2) >= np.max(barrier_extended_eval(outside, B2))


def test_barrier_vertex_from_gradient():
    B = BarrierParams(a=3.0, p=1.0, log2_K=2.0)
    x = np.array([0.5, -0.75])
    y = np.array([0.01, 0.02])
    g = barrier_shifted_grad(x - y, B)
    np.testing.assert_allclose(barrier_vertex_from_gradient(x, g, B), y, atol=1e-12)
    assert barrier_touch_jacobian_det(x - y, g, np.zeros((2, 2)), B) == pytest.approx(1.0)


def plateau(height: float, radius: float, floor: float) -> ScalarField:
    # Q_12 grid with h = 1/32, so the vertex cube Q_{1/16} holds 9 nodes
    spec = GridSpec(dim=2, points_per_axis=769, half_width=12.0)
    return sample_field(
        spec,
        lambda x: np.where(np.max(np.abs(x), axis=-1) < radius, height, floor),
    )


def test_doubling_touches_stay_outside_inner_cube():
    M = barrier_sup(2, B2)
    u = plateau(M + 8000.0, 0.25, 0.0)
    report = doubling_experiment(u, zero_field(u), B2, mu=0.5)
    assert report.M == pytest.approx(M)
    assert sum(report.vertex_counts.values()) == 9
    assert report.premise_holds
    assert report.hypothesis_active
    assert report.inner_touches == 0
    assert report.passed
    for record in report.records:
        assert np.max(np.abs(record.touch)) >= 0.25


def test_doubling_reports_inner_touches():
    # barely above M on Q_{5/2}, so every slide touches next to its vertex
    M = barrier_sup(2, B2)
    u = plateau(M + 0.5, 2.5, 1.0)
    report = doubling_experiment(u, zero_field(u), B2, mu=0.5)
    assert report.premise_holds
    assert report.hypothesis_active
    assert report.inner_touches == 9
    assert not report.passed
    assert report.summary()["passed"] is False


def test_doubling_validates_grid():
    u = bowl(2, 33)
    with pytest.raises(InvalidInputError):
        doubling_experiment(u, zero_field(u), B2, mu=0.5)


def test_doubling_with_selected_barrier():
    B = select_barrier_params(2, 0.0, EllipticityParams(1.0, 1.0))
    M = barrier_sup(2, B)
    assert math.isfinite(M)
    assert barrier_log2_sup(2, B) == pytest.approx(math.log2(M))
    # the selected barrier exceeds 2 on Q_4 outside Q_{1/16}, so every slide
    # leaves the plateau
    u = plateau(2.0 * M + 1.0, 0.25, 0.0)
    report = doubling_experiment(u, zero_field(u), B, mu=0.5)
    assert report.premise_holds
    assert report.hypothesis_active
    assert report.inner_touches == 0
    assert report.passed
    assert sum(report.vertex_counts.values()) == 9
    for record in report.records:
        assert np.max(np.abs(record.touch)) >= 0.25


@pytest.fixture(scope="module")
def wide_barrier():
    return select_barrier_params(3, 2.0, EllipticityParams(0.5, 1.0))


def test_barrier_sup_past_double_range(wide_barrier):
    B = wide_barrier
    log2_M = barrier_log2_sup(3, B)
    assert math.isfinite(log2_M)
    assert log2_M > 1024
    assert math.isinf(barrier_sup(3, B))
    assert math.isinf(B.K)


def test_doubling_skips_unrepresentable_barrier(wide_barrier):
    spec = unit_grid(3, 9, half_width=18.0)
    u = ScalarField(spec, np.full(spec.shape, 0.5))
    report = doubling_experiment(u, zero_field(u), wide_barrier, mu=0.5)
    assert math.isinf(report.M)
    assert report.log2_M == pytest.approx(barrier_log2_sup(3, wide_barrier))
    assert not report.premise_holds
    assert report.hypothesis_active
    assert not report.conclusion_holds
    assert report.records == []
    assert "double range" in report.notice
    assert report.passed
    summary = report.summary()
    assert summary["log2_M"] > 1024
    assert summary["total_vertices"] == 0


def test_slide_touches_a_flatter_paraboloid_at_its_vertex():
    P = ParaboloidParams(K=4.0, p=1.0)
    spec = unit_grid(2, 65)
    y0 = spec.coordinates((20, 40))
    u = sample_field(spec, lambda x: phi_eval(x - y0, ParaboloidParams(K=2.0, p=1.0)))
    record = slide_vertex(u, y0, P)
    assert record.touch_index == (20, 40)
    assert record.offset == 0.0
    assert record.nondeg_set == ()
    assert rescan_touching(u, record, P)


def test_self_touching_vertices_fail_the_experiment():
    # flatter than phi, so the vertex at the origin touches itself, and
    # u <= 1 at the corners of Q_{1/8}
    u = sample_field(unit_grid(2, 65), lambda x: 1.005 - 0.5 * np.sum(x ** 2, axis=-1))
    T = ThresholdConfig(delta=0.5, mu=0.5, M=1.002)
    report = measure_estimate_experiment(u, zero_field(u), T, P2)
    assert report.hypothesis_active
    assert report.total_vertices > 0
    assert report.self_touch_violations >= 1
    assert report.touch_violations >= report.self_touch_violations
    assert not report.passed
    origin = [r for r in report.records if r.vertex == (0.0, 0.0)]
    assert len(origin) == 1
    assert origin[0].touch_index == (32, 32)
    assert origin[0].nondeg_set == ()


def test_affine_field_has_unit_jacobians():
    # phi = -2|x|^2, so every touch sits at y - g/4 = y - (4h, 2h)
    u = sample_field(unit_grid(2, 65), lambda x: 3.0 + 0.5 * x[..., 0] + 0.25 * x[..., 1])
    report = measure_estimate_experiment(u, zero_field(u), T2, P2)
    assert report.vertex_counts == {(0, 1): 49}
    assert report.touch_counts == {(0, 1): 49}
    assert not report.hypothesis_active
    assert report.passed
    for record in report.records:
        assert record.jac_det == pytest.approx(1.0, abs=1e-9)
        assert record.min_eigenvalue == pytest.approx(1.0, abs=1e-9)
        shift = np.subtract(record.vertex, record.touch) * 32
        np.testing.assert_allclose(shift, [4.0, 2.0], atol=1e-9)


def test_sliced_experiment_on_separable_field():
    # 2 + |x|^2 with phi = -2|x|^2: each slice slides 1 + x_1^2 plus a constant,
    # and vertex k h touches at round(2k/3) h
    u = separable_field(unit_grid(2, 65), lambda x: 1.0 + x ** 2)
    T = ThresholdConfig(delta=0.5, mu=0.5, M=T2.M, eps_deg=0.5 / 32)
    report = sliced_measure_experiment(u, zero_field(u), T, P2, [1])
    assert report.slices == 7
    assert report.total_vertices == 49
    assert report.vertex_counts == {(): 21, (0,): 28}
    assert report.touch_counts == {(): 21, (0,): 28}
    assert report.rescan_failures == 0
    expected = {-3: -2, -2: -1, -1: -1, 0: 0, 1: 1, 2: 1, 3: 2}
    by_slice = defaultdict(dict)
    for record in report.records:
        k = round(record.vertex[0] * 32)
        by_slice[record.touch_index[1]][k] = record.touch_index[0] - 32
        assert record.touch[1] == record.vertex[1]
    assert len(by_slice) == 7
    assert all(touches == expected for touches in by_slice.values())


def semiconcave_fixture(case: int) -> ScalarField:
    """Cases 0-9 inf-convolve random separable fields, 10-19 are phi bowls
    of amplitude 2 lifted above M with a random vertex in Q_{1/8}."""
    rng = np.random.default_rng(case)
    spec = unit_grid(2, 65)
    if case < 10:
        lines = rng.uniform((T2.M + 0.5) / 2, (T2.M + 3.0) / 2, size=(2, 65))
        u = ScalarField(spec, lines[0][:, None] + lines[1][None, :])
        return inf_convolution(u, InfConvParams(rng.uniform(0.01, 0.1)))
    y0 = spec.coordinates(tuple(32 + rng.integers(-3, 4, size=2)))
    return sample_field(
        spec, lambda x: T2.M + 3.0 + phi_eval(x - y0, ParaboloidParams(K=2.0, p=0.0))
    )


@pytest.mark.parametrize("case", range(20))
def test_measure_experiment_on_semiconcave_suite(case):
    u = semiconcave_fixture(case)
    assert np.mean(u.values > T2.M) >= 1.0 - T2.delta
    report = measure_estimate_experiment(u, zero_field(u), T2, P2)
    assert report.density_ok
    assert report.total_vertices == 49
    assert report.rescan_failures == 0
    assert report.psd_violations == 0
    for record in report.records:
        assert record.min_eigenvalue is None or record.min_eigenvalue >= -1e-6
    assert math.isfinite(report.empirical_C)
    rerun = measure_estimate_experiment(u, zero_field(u), T2, P2)
    assert rerun.summary() == report.summary()
    assert rerun.records == report.records
