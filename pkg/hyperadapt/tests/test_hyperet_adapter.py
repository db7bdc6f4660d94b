import numpy as np
import pytest

from ..domain.adapter.hyperet_adapter import (AdapterLayer, FrozenWeight, adjust_weight_euclidean,
                                              adjust_weight_matrix, adjust_weight_plain, adjust_weight_scalar,
                                              column_radius_ratios, forward, report,
                                              representation_radius_scale)
from ..domain.exceptions.domain_exception import DomainException
from ..domain.exceptions.invalid_config import InvalidConfigException
from ..domain.exceptions.shape_mismatch import ShapeMismatchException
from ..domain.geometry.poincare import exp_map_origin, hyperbolic_radius
from ..domain.scaling.scaling_operator import (BANDED, BLOCK_DIAGONAL, DENSE, DIAGONAL, ScalingOperator,
                                               init_identity, uniform)

C = 0.01


def random_weight(rng, n, m):
    return rng.standard_normal((n, m)) / np.sqrt(n)


def test_frozen_weight_validation():
    with pytest.raises(ShapeMismatchException):
        FrozenWeight(np.ones(3))
    with pytest.raises(DomainException):
        FrozenWeight(np.array([[1.0, np.nan]]))
    frozen = FrozenWeight(np.ones((2, 3)))
    assert frozen.shape == (2, 3)
    with pytest.raises(ValueError):
        frozen.matrix[0, 0] = 5.0


def test_scalar_one_is_identity():
    w0 = random_weight(np.random.default_rng(0), 8, 5)
    assert np.allclose(adjust_weight_scalar(w0, 1.0, C), w0, rtol=0, atol=1e-12)


def test_scalar_zero_collapses_to_zero():
    w0 = random_weight(np.random.default_rng(1), 8, 5)
    assert np.array_equal(adjust_weight_scalar(w0, 0.0, C), np.zeros_like(w0))


def test_scalar_closed_form_example():
    w0 = np.array([[np.arctanh(0.5)], [0.0]])
    adjusted = adjust_weight_scalar(w0, 2.0, 1.0)
    assert adjusted[0, 0] == pytest.approx(np.log(3.0), rel=1e-12)
    assert adjusted[1, 0] == 0.0


def test_scalar_scales_lifted_radius():
    rng = np.random.default_rng(2)
    w0 = random_weight(rng, 6, 10) * 20
    adjusted = adjust_weight_scalar(w0, 1.8, C)
    before = hyperbolic_radius(exp_map_origin(w0, C, axis=0), C, axis=0)
    after = hyperbolic_radius(exp_map_origin(adjusted, C, axis=0), C, axis=0)
    assert np.allclose(after, 1.8 * before, rtol=1e-9)


@pytest.mark.parametrize("kind,block_size,bandwidth",
                         [(DIAGONAL, None, None), (BLOCK_DIAGONAL, 2, None), (BANDED, None, 1), (DENSE, None, None)])
def test_identity_scaling_is_noop(kind, block_size, bandwidth):
    w0 = random_weight(np.random.default_rng(3), 8, 7)
    ws = init_identity(kind, 8, block_size=block_size, bandwidth=bandwidth)
    assert np.allclose(adjust_weight_matrix(w0, ws, C), w0, rtol=0, atol=1e-12)


def test_uniform_diagonal_is_bit_identical_to_scalar():
    rng = np.random.default_rng(4)
    for _ in range(100):
        w0 = random_weight(rng, 12, 9)
        s = float(rng.uniform(0.1, 5.0))
        assert np.array_equal(adjust_weight_matrix(w0, uniform(DIAGONAL, 12, s), C),
                              adjust_weight_scalar(w0, s, C))


def test_matrix_form_radius_contract():
    rng = np.random.default_rng(5)
    w0 = random_weight(rng, 4, 3) * 10
    ws = ScalingOperator(DIAGONAL, 4, rng.uniform(0.5, 1.5, size=4))
    lifted = exp_map_origin(w0, C, axis=0)
    ratio = np.linalg.norm(ws.matvec(lifted), axis=0) / np.linalg.norm(lifted, axis=0)
    after = hyperbolic_radius(exp_map_origin(adjust_weight_matrix(w0, ws, C), C, axis=0), C, axis=0)
    before = hyperbolic_radius(lifted, C, axis=0)
    assert np.allclose(after, ratio * before, rtol=1e-9)
    assert np.allclose(column_radius_ratios(w0, ws, C), ratio, rtol=1e-15)


def test_zero_column_passes_through():
    w0 = np.array([[0.0, 1.0], [0.0, 2.0]])
    ws = ScalingOperator(DENSE, 2, [1.5, 0.2, -0.1, 0.7])
    adjusted = adjust_weight_matrix(w0, ws, C)
    assert np.array_equal(adjusted[:, 0], [0.0, 0.0])
    assert report(AdapterLayer(w0, ws, C)).per_column[0].effective_scale == 1.0


def test_dimension_mismatch():
    with pytest.raises(ShapeMismatchException):
        adjust_weight_matrix(np.ones((3, 2)), init_identity(DIAGONAL, 4), C)
    with pytest.raises(ShapeMismatchException):
        AdapterLayer(np.ones((3, 2)), init_identity(DIAGONAL, 4), C)


def test_adjustment_is_deterministic():
    rng = np.random.default_rng(6)
    w0 = random_weight(rng, 8, 4)
    ws = ScalingOperator(DENSE, 8, np.eye(8) + 0.1 * rng.standard_normal((8, 8)))
    assert np.array_equal(adjust_weight_matrix(w0, ws, C), adjust_weight_matrix(w0, ws, C))


def test_euclidean_limit():
    rng = np.random.default_rng(7)
    w0 = rng.standard_normal((6, 5))
    ws = ScalingOperator(DENSE, 6, np.eye(6) + 0.2 * rng.standard_normal((6, 6)))
    adjusted = adjust_weight_matrix(w0, ws, 1e-8)
    expected = adjust_weight_euclidean(w0, ws)
    assert np.allclose(expected, ws.to_dense() @ w0, rtol=1e-13)
    assert np.all(np.linalg.norm(adjusted - expected, axis=0) <= 1e-4 * np.linalg.norm(expected, axis=0))


def test_plain_product_path_differs_from_mobius_path():
    rng = np.random.default_rng(8)
    w0 = random_weight(rng, 4, 3) * 2
    ws = uniform(DIAGONAL, 4, 2.0)
    plain = adjust_weight_plain(w0, ws, C)
    mobius = adjust_weight_matrix(w0, ws, C)
    assert not np.allclose(plain, mobius)
    # doubling the lifted point overshoots doubling its radius
    assert np.all(np.linalg.norm(plain, axis=0) > np.linalg.norm(mobius, axis=0))


def test_forward_with_identity_matches_frozen_layer():
    rng = np.random.default_rng(9)
    w0 = random_weight(rng, 8, 6)
    x = rng.standard_normal((6, 4))
    layer = AdapterLayer(w0, init_identity(BANDED, 8, bandwidth=2), C)
    assert np.allclose(forward(layer, x), w0 @ x, rtol=0, atol=1e-12)


def test_forward_scalar_mode_with_identity_input():
    w0 = random_weight(np.random.default_rng(10), 5, 5)
    layer = AdapterLayer(w0, curvature=C, scalar=0.7)
    assert np.array_equal(forward(layer, np.eye(5)), adjust_weight_scalar(w0, 0.7, C) @ np.eye(5))


def test_forward_uniform_diagonal_matches_scalar_mode():
    rng = np.random.default_rng(11)
    w0 = random_weight(rng, 6, 4)
    x = rng.standard_normal((4, 3))
    matrix_layer = AdapterLayer(w0, uniform(DIAGONAL, 6, 2.0), C)
    scalar_layer = AdapterLayer(w0, curvature=C, scalar=2.0)
    assert np.allclose(forward(matrix_layer, x), forward(scalar_layer, x), rtol=0, atol=1e-12)


def test_forward_dimension_mismatch():
    layer = AdapterLayer(np.ones((3, 2)), curvature=C)
    with pytest.raises(ShapeMismatchException):
        forward(layer, np.ones((3, 1)))


def test_representation_radius_scale_examples():
    rng = np.random.default_rng(12)
    y0 = rng.standard_normal(8)
    scale, point = representation_radius_scale(y0, init_identity(DIAGONAL, 8), C)
    assert scale == 1.0
    assert np.allclose(point, exp_map_origin(y0, C), rtol=1e-14)
    scale, _ = representation_radius_scale(y0, uniform(DENSE, 8, 2.0), C)
    assert scale == 2.0
    scale, point = representation_radius_scale(np.zeros(8), uniform(DENSE, 8, 2.0), C)
    assert scale == 1.0
    assert np.array_equal(point, np.zeros(8))


def test_representation_radius_identity_on_random_points():
    rng = np.random.default_rng(13)
    ws = ScalingOperator(DENSE, 8, np.eye(8) + 0.2 * rng.standard_normal((8, 8)))
    y0 = rng.standard_normal((8, 1000)) * rng.uniform(0.5, 4.0, size=1000)
    scales, points = representation_radius_scale(y0, ws, C)
    before = hyperbolic_radius(exp_map_origin(y0, C, axis=0), C, axis=0)
    after = hyperbolic_radius(points, C, axis=0)
    assert np.all(np.abs(after - scales * before) <= 1e-9 * (1 + scales * before))


def test_report_identity_and_scalar_mode():
    w0 = random_weight(np.random.default_rng(14), 8, 5) * 10
    identity_report = report(AdapterLayer(w0, init_identity(DIAGONAL, 8), C))
    assert all(col.effective_scale == pytest.approx(1.0, rel=1e-12) for col in identity_report.per_column)
    scalar_report = report(AdapterLayer(w0, curvature=C, scalar=0.5))
    assert scalar_report.mode == "scalar"
    assert scalar_report.param_overhead == 1
    for col in scalar_report.per_column:
        assert col.effective_scale == pytest.approx(0.5, rel=1e-9)
    assert scalar_report.scale_min == pytest.approx(0.5, rel=1e-9)
    assert scalar_report.scale_max == pytest.approx(0.5, rel=1e-9)


def test_report_param_overhead_and_fields():
    layer = AdapterLayer(np.ones((1024, 2)) * 0.01, init_identity(DIAGONAL, 1024), C)
    result = report(layer)
    assert result.param_overhead == 1024
    assert result.curvature == C
    body = result.to_dict()
    assert len(body["per_column"]) == 2
    assert body["frobenius_scale"] == pytest.approx(1.0, rel=1e-9)


def test_layer_space_selects_the_comparison_paths():
    rng = np.random.default_rng(15)
    w0 = random_weight(rng, 6, 4) * 5
    ws = ScalingOperator(BANDED, 6, uniform(BANDED, 6, 1.5, bandwidth=1).params + 0.1, bandwidth=1)
    assert np.array_equal(AdapterLayer(w0, ws, C).adjusted_weight(), adjust_weight_matrix(w0, ws, C))
    assert np.array_equal(AdapterLayer(w0, ws, C, space="plain").adjusted_weight(),
                          adjust_weight_plain(w0, ws, C))
    assert np.array_equal(AdapterLayer(w0, ws, C, space="euclidean").adjusted_weight(),
                          adjust_weight_euclidean(w0, ws))


def test_scalar_mode_comparison_paths_use_a_uniform_diagonal():
    w0 = random_weight(np.random.default_rng(16), 5, 3)
    layer = AdapterLayer(w0, curvature=C, scalar=2.0, space="euclidean")
    assert np.allclose(layer.adjusted_weight(), 2.0 * w0, rtol=1e-15)
    assert layer.param_overhead() == 1
    plain = AdapterLayer(w0, curvature=C, scalar=2.0, space="plain").adjusted_weight()
    assert np.array_equal(plain, adjust_weight_plain(w0, uniform(DIAGONAL, 5, 2.0), C))


def test_report_records_the_space():
    w0 = random_weight(np.random.default_rng(17), 4, 3) * 10
    mobius = report(AdapterLayer(w0, uniform(DIAGONAL, 4, 2.0), C))
    plain = report(AdapterLayer(w0, uniform(DIAGONAL, 4, 2.0), C, space="plain"))
    assert mobius.space == "mobius"
    assert plain.to_dict()["space"] == "plain"
    for m, p in zip(mobius.per_column, plain.per_column):
        assert m.effective_scale == pytest.approx(2.0, rel=1e-9)
        assert p.effective_scale > m.effective_scale


def test_unknown_space_is_rejected():
    with pytest.raises(InvalidConfigException):
        AdapterLayer(np.ones((3, 2)), curvature=C, space="hyperboloid")
