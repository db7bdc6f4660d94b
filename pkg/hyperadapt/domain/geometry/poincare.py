"""
Poincare ball primitives.

Points and tangent vectors are float64 arrays whose vector axis is ``axis``
(the last one by default), so every function works on a single vector or on a
batch of them. The ball of curvature ``-c`` is the open set ``c * |x|^2 < 1``.
"""
import os

import numpy as np

from ..exceptions.domain_exception import DomainException
from ..exceptions.invalid_config import InvalidConfigException
from ..exceptions.shape_mismatch import ShapeMismatchException

DEFAULT_BALL_EPS = 1e-7
ARTANH_EPS = 1e-12
ZERO_NORM = 1e-15

BALL_EPS_ENV_VAR = "HYPERADAPT_EPS"


def _eps_from_env():
    raw = os.environ.get(BALL_EPS_ENV_VAR)
    if raw is None:
        return DEFAULT_BALL_EPS
    try:
        eps = float(raw)
    except ValueError:
        raise InvalidConfigException(
            "{}='{}' is not a number".format(BALL_EPS_ENV_VAR, raw))
    if not 0.0 < eps < 1.0:
        raise InvalidConfigException(
            "{} must lie in (0, 1), got {}".format(BALL_EPS_ENV_VAR, eps))
    return eps


_ball_eps = _eps_from_env()


def get_ball_eps():
    return _ball_eps


def set_ball_eps(eps):
    """
    Overrides the boundary guard: points are kept at sqrt(c)*|x| <= 1 - eps
    """
    global _ball_eps
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise InvalidConfigException(
            "ball epsilon must lie in (0, 1), got {}".format(eps))
    _ball_eps = eps


def check_curvature(c):
    """
    Returns the curvature as a float, raising if it is not finite and positive
    """
    try:
        c = float(c)
    except (TypeError, ValueError):
        raise DomainException("curvature must be a real number, got {!r}".format(c))
    if not np.isfinite(c) or c <= 0.0:
        raise DomainException("curvature must be finite and > 0, got {}".format(c))
    return c


def _as_finite(v, name):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim == 0:
        raise ShapeMismatchException("{} expects a vector, got a scalar".format(name))
    if not np.all(np.isfinite(v)):
        raise DomainException("{} received non-finite values".format(name))
    return v


def _norm(x, axis):
    return np.linalg.norm(x, axis=axis, keepdims=True)


def _check_same_shape(x, y, name):
    if x.shape != y.shape:
        raise ShapeMismatchException(
            "{}: shapes {} and {} differ".format(name, x.shape, y.shape))


def artanh(z):
    z = np.clip(z, -1.0 + ARTANH_EPS, 1.0 - ARTANH_EPS)
    return np.arctanh(z)


def check_in_ball(x, c, axis=-1):
    """
    Validates that every vector of ``x`` lies strictly inside the ball and
    returns it as a float64 array
    """
    c = check_curvature(c)
    x = _as_finite(x, "ball point")
    if np.any(c * np.sum(x * x, axis=axis) >= 1.0):
        raise DomainException(
            "point lies on or outside the Poincare ball of radius {}".format(1.0 / np.sqrt(c)))
    return x


def project_to_ball(v, c, axis=-1):
    """
    Leaves vectors with sqrt(c)*|v| < 1 - eps untouched and rescales the rest
    to norm (1 - eps)/sqrt(c), keeping their direction
    """
    c = check_curvature(c)
    v = _as_finite(v, "project_to_ball")
    norm = _norm(v, axis)
    max_norm = (1.0 - _ball_eps) / np.sqrt(c)
    inside = c * norm ** 2 < (1.0 - _ball_eps) ** 2
    return np.where(inside, v, v / np.maximum(norm, ZERO_NORM) * max_norm)


def conformal_factor(x, c, axis=-1):
    """
    lambda_{c,x} = 2 / (1 - c*|x|^2)
    """
    c = check_curvature(c)
    x = check_in_ball(x, c, axis)
    return 2.0 / (1.0 - c * np.sum(x * x, axis=axis))


def mobius_neg(x):
    return -np.asarray(x, dtype=np.float64)


def mobius_add(x, y, c, axis=-1):
    """
    Mobius addition x (+)_c y. Not commutative; x (+) 0 = x and x (+) (-x) = 0.
    """
    c = check_curvature(c)
    x = check_in_ball(x, c, axis)
    y = check_in_ball(y, c, axis)
    _check_same_shape(x, y, "mobius_add")
    x2 = np.sum(x * x, axis=axis, keepdims=True)
    y2 = np.sum(y * y, axis=axis, keepdims=True)
    xy = np.sum(x * y, axis=axis, keepdims=True)
    num = (1.0 + 2.0 * c * xy + c * y2) * x + (1.0 - c * x2) * y
    denom = 1.0 + 2.0 * c * xy + c ** 2 * x2 * y2
    return project_to_ball(num / np.maximum(denom, ZERO_NORM), c, axis)


def mobius_sub(x, y, c, axis=-1):
    return mobius_add(x, mobius_neg(y), c, axis)


def exp_map_origin(v, c, axis=-1):
    """
    Exponential map at the origin: tanh(sqrt(c)|v|) v / (sqrt(c)|v|)
    """
    c = check_curvature(c)
    v = _as_finite(v, "exp_map_origin")
    sqrt_c = np.sqrt(c)
    norm = _norm(v, axis)
    safe = np.maximum(norm, ZERO_NORM)
    scale = np.where(norm < ZERO_NORM, 1.0, np.tanh(sqrt_c * safe) / (sqrt_c * safe))
    return project_to_ball(scale * v, c, axis)


def log_map_origin(x, c, axis=-1):
    """
    Logarithmic map at the origin, the inverse of ``exp_map_origin``:
    artanh(sqrt(c)|x|) x / (sqrt(c)|x|)
    """
    c = check_curvature(c)
    x = project_to_ball(check_in_ball(x, c, axis), c, axis)
    sqrt_c = np.sqrt(c)
    norm = _norm(x, axis)
    safe = np.maximum(norm, ZERO_NORM)
    scale = np.where(norm < ZERO_NORM, 1.0, artanh(sqrt_c * safe) / (sqrt_c * safe))
    return scale * x


def mobius_apply(mx, x, c, axis=-1):
    """
    Mobius action of a linear map on ``x`` given its Euclidean image ``mx``.

    The result points along mx and has norm
    tanh((|mx|/|x|) * artanh(sqrt(c)|x|)) / sqrt(c). When x or mx vanishes the
    result is the origin.
    """
    c = check_curvature(c)
    x = project_to_ball(check_in_ball(x, c, axis), c, axis)
    mx = _as_finite(mx, "mobius_apply")
    _check_same_shape(x, mx, "mobius_apply")
    sqrt_c = np.sqrt(c)
    x_norm = _norm(x, axis)
    mx_norm = _norm(mx, axis)
    degenerate = (x_norm < ZERO_NORM) | (mx_norm < ZERO_NORM)
    safe_x_norm = np.maximum(x_norm, ZERO_NORM)
    safe_mx_norm = np.maximum(mx_norm, ZERO_NORM)
    ratio = mx_norm / safe_x_norm
    new_norm = np.tanh(ratio * artanh(sqrt_c * x_norm)) / sqrt_c
    result = np.where(degenerate, 0.0, new_norm * mx / safe_mx_norm)
    return project_to_ball(result, c, axis)


def mobius_scalar_mul(s, x, c, axis=-1):
    """
    s (x)_c x. Scales the hyperbolic radius of x by s.
    """
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise DomainException("mobius_scalar_mul received a non-finite scalar")
    x = check_in_ball(x, c, axis)
    return mobius_apply(s * x, x, c, axis)


def mobius_matrix_mul(m, x, c, axis=-1):
    """
    M (x)_c x. Scales the hyperbolic radius of x by |Mx|/|x|.
    """
    m = _as_finite(m, "mobius_matrix_mul")
    x = check_in_ball(x, c, axis)
    n = x.shape[axis]
    if m.shape != (n, n):
        raise ShapeMismatchException(
            "matrix of shape {} cannot act on vectors of dimension {}".format(m.shape, n))
    moved = np.moveaxis(x, axis, -1)
    mx = np.moveaxis(moved @ m.T, -1, axis)
    return mobius_apply(mx, x, c, axis)


def hyperbolic_radius(x, c, axis=-1):
    """
    Distance to the origin, (2/sqrt(c)) * artanh(sqrt(c)|x|)
    """
    c = check_curvature(c)
    x = project_to_ball(check_in_ball(x, c, axis), c, axis)
    sqrt_c = np.sqrt(c)
    return 2.0 / sqrt_c * artanh(sqrt_c * np.linalg.norm(x, axis=axis))


def ball_distance(x, y, c, axis=-1):
    """
    Gyrodistance (2/sqrt(c)) * artanh(sqrt(c) |(-x) (+)_c y|)
    """
    x = check_in_ball(x, c, axis)
    y = check_in_ball(y, c, axis)
    _check_same_shape(x, y, "ball_distance")
    return hyperbolic_radius(mobius_add(mobius_neg(x), y, c, axis), c, axis)


def max_radius(c):
    """
    Largest radius a clamped point can have, (2/sqrt(c)) * artanh(1 - eps)
    """
    c = check_curvature(c)
    return 2.0 / np.sqrt(c) * float(artanh(1.0 - _ball_eps))
