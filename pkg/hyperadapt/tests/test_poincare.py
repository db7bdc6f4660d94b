import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.extra.numpy import arrays
from hypothesis.strategies import floats, integers

from ..domain.exceptions.domain_exception import DomainException
from ..domain.exceptions.invalid_config import InvalidConfigException
from ..domain.exceptions.shape_mismatch import ShapeMismatchException
from ..domain.geometry import poincare
from ..domain.geometry.poincare import (ball_distance, check_curvature, conformal_factor, exp_map_origin,
                                        get_ball_eps, hyperbolic_radius, log_map_origin, max_radius,
                                        mobius_add, mobius_matrix_mul, mobius_neg, mobius_scalar_mul,
                                        mobius_sub, project_to_ball, set_ball_eps)

CURVATURES = [0.01, 0.1, 1.0]
TANGENT_COORD = floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


def random_ball_point(rng, dim, c, low=0.05, high=0.9):
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    return direction * rng.uniform(low, high) / np.sqrt(c)


def test_conformal_factor_is_two_at_origin():
    for c in CURVATURES:
        assert conformal_factor(np.zeros(3), c) == 2.0


def test_conformal_factor_closed_form():
    assert conformal_factor(np.array([0.5, 0.0]), 1.0) == pytest.approx(8.0 / 3.0, rel=1e-14)
    assert conformal_factor(np.array([3.0, 4.0]), 0.01) == pytest.approx(8.0 / 3.0, rel=1e-14)


def test_conformal_factor_rejects_boundary_point():
    with pytest.raises(DomainException):
        conformal_factor(np.array([1.0, 0.0]), 1.0)


@pytest.mark.parametrize("c", [0.0, -1.0, float("nan"), float("inf")])
def test_invalid_curvature_is_rejected(c):
    with pytest.raises(DomainException):
        check_curvature(c)


def test_mobius_add_one_dimensional_velocity_addition():
    result = mobius_add(np.array([0.3, 0.0]), np.array([0.4, 0.0]), 1.0)
    assert result[1] == 0.0
    assert result[0] == pytest.approx(0.7 / 1.12, rel=1e-14)


def test_mobius_add_identity_and_inverse():
    rng = np.random.default_rng(0)
    for c in CURVATURES:
        x = random_ball_point(rng, 5, c)
        assert np.allclose(mobius_add(x, np.zeros(5), c), x, rtol=0, atol=1e-12)
        assert np.allclose(mobius_add(x, mobius_neg(x), c), 0.0, rtol=0, atol=1e-12)
        assert np.allclose(mobius_sub(x, x, c), 0.0, rtol=0, atol=1e-12)


def test_mobius_add_is_not_commutative():
    x = np.array([0.3, 0.1])
    y = np.array([-0.2, 0.5])
    assert not np.allclose(mobius_add(x, y, 1.0), mobius_add(y, x, 1.0))


def test_mobius_add_dimension_mismatch():
    with pytest.raises(ShapeMismatchException):
        mobius_add(np.zeros(2), np.zeros(3), 1.0)


def test_mobius_add_batched_rows_match_single_calls():
    rng = np.random.default_rng(1)
    xs = np.stack([random_ball_point(rng, 4, 0.1) for _ in range(6)])
    ys = np.stack([random_ball_point(rng, 4, 0.1) for _ in range(6)])
    batched = mobius_add(xs, ys, 0.1)
    for i in range(6):
        assert np.allclose(batched[i], mobius_add(xs[i], ys[i], 0.1), rtol=1e-14, atol=0)


def test_exp_map_of_zero_is_origin():
    assert np.array_equal(exp_map_origin(np.zeros(4), 0.01), np.zeros(4))
    assert np.array_equal(log_map_origin(np.zeros(4), 0.01), np.zeros(4))


def test_exp_and_log_closed_forms():
    assert np.allclose(exp_map_origin(np.array([np.arctanh(0.5), 0.0]), 1.0), [0.5, 0.0], rtol=1e-14)
    assert np.allclose(log_map_origin(np.array([0.5, 0.0]), 1.0), [0.549306144334055, 0.0], rtol=1e-12)


def test_exp_map_rejects_non_finite():
    with pytest.raises(DomainException):
        exp_map_origin(np.array([np.nan, 1.0]), 1.0)


def test_log_map_rejects_exterior_point():
    with pytest.raises(DomainException):
        log_map_origin(np.array([0.0, 11.0]), 0.01)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 6, elements=TANGENT_COORD))
def test_log_inverts_exp(v):
    norm = np.linalg.norm(v)
    back = log_map_origin(exp_map_origin(v, 0.1), 0.1)
    assert np.linalg.norm(back - v) <= 1e-9 * max(norm, 1e-300) + 1e-300


@settings(max_examples=200, deadline=None)
@given(floats(min_value=1e-3, max_value=0.99), integers(min_value=0, max_value=2 ** 32 - 1))
def test_exp_inverts_log(scaled_norm, seed):
    c = 0.01
    direction = np.random.default_rng(seed).standard_normal(8)
    x = direction / np.linalg.norm(direction) * scaled_norm / np.sqrt(c)
    back = exp_map_origin(log_map_origin(x, c), c)
    assert np.linalg.norm(back - x) <= 1e-9 * np.linalg.norm(x)


def test_mobius_scalar_mul_examples():
    x = np.array([0.5, 0.0])
    assert np.allclose(mobius_scalar_mul(2.0, x, 1.0), [0.8, 0.0], rtol=1e-14)
    assert np.allclose(mobius_scalar_mul(1.0, x, 1.0), x, rtol=1e-14)
    assert np.array_equal(mobius_scalar_mul(0.0, x, 1.0), np.zeros(2))


@settings(max_examples=300, deadline=None)
@given(floats(min_value=0.1, max_value=5.0), floats(min_value=0.01, max_value=0.9),
       integers(min_value=0, max_value=2 ** 32 - 1))
def test_scalar_multiplication_scales_radius(s, scaled_norm, seed):
    for c in CURVATURES:
        direction = np.random.default_rng(seed).standard_normal(8)
        x = direction / np.linalg.norm(direction) * scaled_norm / np.sqrt(c)
        expected = s * hyperbolic_radius(x, c)
        assert abs(hyperbolic_radius(mobius_scalar_mul(s, x, c), c) - expected) <= 1e-9 * (1 + expected)


def test_mobius_matrix_mul_examples():
    x = np.array([0.5, 0.0])
    assert np.allclose(mobius_matrix_mul(np.eye(2), x, 1.0), x, rtol=1e-14)
    assert np.allclose(mobius_matrix_mul(2.0 * np.eye(2), x, 1.0), [0.8, 0.0], rtol=1e-14)
    singular = np.array([[0.0, 1.0], [0.0, 1.0]])
    assert np.array_equal(mobius_matrix_mul(singular, x, 1.0), np.zeros(2))


def test_mobius_matrix_mul_scales_radius_by_norm_ratio():
    rng = np.random.default_rng(2)
    for c in CURVATURES:
        for _ in range(50):
            m = np.eye(8) + 0.3 * rng.standard_normal((8, 8)) / np.sqrt(8)
            x = random_ball_point(rng, 8, c)
            ratio = np.linalg.norm(m @ x) / np.linalg.norm(x)
            expected = ratio * hyperbolic_radius(x, c)
            got = hyperbolic_radius(mobius_matrix_mul(m, x, c), c)
            assert abs(got - expected) <= 1e-9 * (1 + expected)
            result = mobius_matrix_mul(m, x, c)
            assert np.allclose(result / np.linalg.norm(result), m @ x / np.linalg.norm(m @ x), atol=1e-12)


def test_mobius_matrix_mul_on_column_batches():
    rng = np.random.default_rng(3)
    m = np.eye(4) + 0.2 * rng.standard_normal((4, 4))
    cols = np.stack([random_ball_point(rng, 4, 0.1) for _ in range(5)], axis=1)
    batched = mobius_matrix_mul(m, cols, 0.1, axis=0)
    for j in range(5):
        assert np.allclose(batched[:, j], mobius_matrix_mul(m, cols[:, j], 0.1), rtol=1e-14, atol=0)


def test_mobius_matrix_mul_shape_mismatch():
    with pytest.raises(ShapeMismatchException):
        mobius_matrix_mul(np.eye(3), np.zeros(2), 1.0)


def test_uniform_matrix_matches_scalar_multiplication():
    rng = np.random.default_rng(4)
    for c in CURVATURES:
        x = random_ball_point(rng, 16, c)
        by_matrix = mobius_matrix_mul(1.7 * np.eye(16), x, c)
        by_scalar = mobius_scalar_mul(1.7, x, c)
        assert np.allclose(by_matrix, by_scalar, rtol=1e-12, atol=0)


def test_hyperbolic_radius_examples():
    assert hyperbolic_radius(np.zeros(3), 1.0) == 0.0
    assert hyperbolic_radius(np.array([0.5, 0.0]), 1.0) == pytest.approx(np.log(3.0), rel=1e-14)
    assert hyperbolic_radius(np.array([3.0, 4.0]), 0.01) == pytest.approx(10.0 * np.log(3.0), rel=1e-14)


def test_hyperbolic_radius_is_strictly_increasing():
    direction = np.array([0.6, 0.8])
    norms = np.sort(np.random.default_rng(5).uniform(0.0, 0.99, size=500)) / np.sqrt(0.1)
    radii = hyperbolic_radius(norms[:, None] * direction, 0.1)
    assert np.all(np.diff(radii) > 0)


def test_ball_distance_examples():
    x = np.array([0.3, 0.0])
    y = np.array([-0.3, 0.0])
    assert ball_distance(x, x, 1.0) == 0.0
    assert ball_distance(x, y, 1.0) == pytest.approx(2.0 * np.arctanh(0.6 / 1.09), rel=1e-13)
    assert ball_distance(x, y, 1.0) == pytest.approx(ball_distance(y, x, 1.0), rel=1e-14)


def test_ball_distance_to_origin_is_radius():
    rng = np.random.default_rng(6)
    xs = np.stack([random_ball_point(rng, 5, 0.01) for _ in range(1000)])
    assert np.array_equal(ball_distance(xs, np.zeros_like(xs), 0.01), hyperbolic_radius(xs, 0.01))


def test_project_to_ball():
    v = np.array([0.3, -0.2])
    assert np.array_equal(project_to_ball(v, 1.0), v)
    assert np.array_equal(project_to_ball(np.zeros(2), 1.0), np.zeros(2))
    clamped = project_to_ball(np.array([0.0, 2.0]), 1.0)
    assert clamped[0] == 0.0
    assert clamped[1] == pytest.approx(1.0 - get_ball_eps(), rel=1e-15)


def test_max_radius_is_radius_of_clamped_point():
    # the ball of curvature 0.01 has radius 10
    outside = np.array([50.0, 0.0])
    clamped = project_to_ball(outside, 0.01)
    assert not np.array_equal(clamped, outside)
    assert hyperbolic_radius(clamped, 0.01) == pytest.approx(max_radius(0.01), rel=1e-9)


def test_curvature_limit_recovers_euclidean_norm():
    v = np.array([3.0, -4.0, 12.0])
    assert np.linalg.norm(exp_map_origin(v, 1e-8)) == pytest.approx(13.0, rel=1e-4)


def test_set_ball_eps_changes_clamp():
    previous = get_ball_eps()
    try:
        set_ball_eps(1e-3)
        clamped = project_to_ball(np.array([2.0]), 1.0)
        assert clamped[0] == pytest.approx(1.0 - 1e-3, rel=1e-15)
    finally:
        set_ball_eps(previous)


@pytest.mark.parametrize("eps", [0.0, 1.0, -1e-7])
def test_set_ball_eps_rejects_out_of_range(eps):
    with pytest.raises(InvalidConfigException):
        set_ball_eps(eps)


def test_ball_eps_env_var(monkeypatch):
    monkeypatch.setenv(poincare.BALL_EPS_ENV_VAR, "1e-5")
    assert poincare._eps_from_env() == 1e-5
    monkeypatch.setenv(poincare.BALL_EPS_ENV_VAR, "not-a-number")
    with pytest.raises(InvalidConfigException):
        poincare._eps_from_env()
