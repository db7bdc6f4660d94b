"""
Hyperbolic weight adjustment of frozen linear maps.

Each column w of a frozen weight W0 is lifted into the ball with the
exponential map at the origin, rescaled there (by a scalar s or by a scaling
matrix W_s through Mobius multiplication) and brought back with the
logarithmic map:

    W = log0(s (x)_c exp0(W0))        scalar form
    W = log0(W_s (x)_c exp0(W0))      matrix form

The lifted radius of every column changes by s, respectively by
|W_s exp0(w)| / |exp0(w)|.
"""
from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np

from ..exceptions.domain_exception import DomainException
from ..exceptions.invalid_config import InvalidConfigException
from ..exceptions.shape_mismatch import ShapeMismatchException
from ..geometry.poincare import (ZERO_NORM, check_curvature, exp_map_origin, hyperbolic_radius,
                                 log_map_origin, mobius_apply, project_to_ball)
from ..scaling.scaling_operator import DIAGONAL, ScalingOperator, init_identity, uniform

DEFAULT_CURVATURE = 0.01

SCALAR_MODE = "scalar"
MATRIX_MODE = "matrix"

# where the scaling acts: Mobius multiplication in the ball, the ordinary
# product on the lifted point, or the ordinary product on the frozen weight
MOBIUS_SPACE = "mobius"
PLAIN_SPACE = "plain"
EUCLIDEAN_SPACE = "euclidean"
SPACES = [MOBIUS_SPACE, PLAIN_SPACE, EUCLIDEAN_SPACE]


class FrozenWeight:
    """
    Pre-trained n x m matrix; column j is the point that gets lifted into the ball
    """

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2 or min(matrix.shape) < 1:
            raise ShapeMismatchException(
                "frozen weight must be a non-empty matrix, got shape {}".format(matrix.shape))
        if not np.all(np.isfinite(matrix)):
            raise DomainException("frozen weight has non-finite entries")
        matrix.setflags(write=False)
        self.matrix = matrix

    @property
    def shape(self):
        return self.matrix.shape


def _as_matrix(w0):
    if isinstance(w0, FrozenWeight):
        return w0.matrix
    return FrozenWeight(w0).matrix


def _check_operator(w, ws):
    if not isinstance(ws, ScalingOperator):
        raise ShapeMismatchException("expected a ScalingOperator, got {!r}".format(type(ws)))
    if ws.dim != w.shape[0]:
        raise ShapeMismatchException(
            "scaling dimension {} does not match weight rows {}".format(ws.dim, w.shape[0]))


def adjust_weight_scalar(w0, s, c):
    w = _as_matrix(w0)
    c = check_curvature(c)
    s = float(s)
    if not np.isfinite(s):
        raise DomainException("scale must be finite, got {}".format(s))
    lifted = exp_map_origin(w, c, axis=0)
    adjusted = mobius_apply(s * lifted, lifted, c, axis=0)
    return log_map_origin(adjusted, c, axis=0)


def adjust_weight_matrix(w0, ws, c):
    w = _as_matrix(w0)
    c = check_curvature(c)
    _check_operator(w, ws)
    lifted = exp_map_origin(w, c, axis=0)
    adjusted = mobius_apply(ws.matvec(lifted), lifted, c, axis=0)
    return log_map_origin(adjusted, c, axis=0)


def adjust_weight_euclidean(w0, ws):
    """
    Comparison path: W_s @ W0 with no hyperbolic lifting
    """
    w = _as_matrix(w0)
    _check_operator(w, ws)
    return ws.matvec(w)


def adjust_weight_plain(w0, ws, c):
    """
    Comparison path: the lifted columns are multiplied by W_s with the ordinary
    matrix product (no Mobius multiplication) and projected back into the ball
    """
    w = _as_matrix(w0)
    c = check_curvature(c)
    _check_operator(w, ws)
    lifted = exp_map_origin(w, c, axis=0)
    return log_map_origin(project_to_ball(ws.matvec(lifted), c, axis=0), c, axis=0)


def representation_radius_scale(y0, ws, c):
    """
    Lifts y0 (a vector, or a matrix of column representations), applies W_s
    through Mobius multiplication and returns ``(scale, point)`` where the
    hyperbolic radius of ``point`` is ``scale`` times that of the lifted y0.
    Zero representations get scale 1.0 and stay at the origin.
    """
    c = check_curvature(c)
    y0 = np.asarray(y0, dtype=np.float64)
    lifted = exp_map_origin(y0, c, axis=0)
    image = ws.matvec(lifted)
    lifted_norm = np.linalg.norm(lifted, axis=0)
    zero = lifted_norm < ZERO_NORM
    scale = np.where(zero, 1.0, np.linalg.norm(image, axis=0) / np.maximum(lifted_norm, ZERO_NORM))
    point = mobius_apply(image, lifted, c, axis=0)
    if y0.ndim == 1:
        return float(scale), point
    return scale, point


@dataclass
class ColumnRadius:
    radius_before: float
    radius_after: float
    effective_scale: float


@dataclass
class AdapterReport:
    mode: str
    curvature: float
    space: str = MOBIUS_SPACE
    per_column: List[ColumnRadius] = field(default_factory=list)
    scale_mean: float = 1.0
    scale_min: float = 1.0
    scale_max: float = 1.0
    param_overhead: int = 0
    frobenius_radius_before: float = 0.0
    frobenius_radius_after: float = 0.0
    frobenius_scale: float = 1.0

    def to_dict(self):
        return asdict(self)


class AdapterLayer:
    """
    A frozen weight wrapped with a scaling operator. When ``scalar`` is set the
    scalar form is used instead of the scaling matrix. ``space`` selects the
    Mobius path or one of the two comparison paths.
    """

    def __init__(self, frozen, scaling=None, curvature=DEFAULT_CURVATURE, scalar=None, space=MOBIUS_SPACE):
        self.frozen = frozen if isinstance(frozen, FrozenWeight) else FrozenWeight(frozen)
        self.curvature = check_curvature(curvature)
        n = self.frozen.shape[0]
        self.scaling = scaling if scaling is not None else init_identity("diagonal", n)
        _check_operator(self.frozen.matrix, self.scaling)
        if scalar is not None and not np.isfinite(float(scalar)):
            raise DomainException("scalar mode needs a finite scale, got {}".format(scalar))
        self.scalar = None if scalar is None else float(scalar)
        if space not in SPACES:
            raise InvalidConfigException("unknown space '{}', expected one of {}".format(space, SPACES))
        self.space = space

    @property
    def mode(self):
        return SCALAR_MODE if self.scalar is not None else MATRIX_MODE

    def adjusted_weight(self):
        if self.space == MOBIUS_SPACE:
            if self.scalar is not None:
                return adjust_weight_scalar(self.frozen, self.scalar, self.curvature)
            return adjust_weight_matrix(self.frozen, self.scaling, self.curvature)
        ws = self.scaling if self.scalar is None else uniform(DIAGONAL, self.frozen.shape[0], self.scalar)
        if self.space == PLAIN_SPACE:
            return adjust_weight_plain(self.frozen, ws, self.curvature)
        return adjust_weight_euclidean(self.frozen, ws)

    def param_overhead(self):
        return 1 if self.scalar is not None else self.scaling.param_count()


def forward(layer, x):
    """
    Y = W @ X with W the adjusted weight
    """
    x = np.asarray(x, dtype=np.float64)
    m = layer.frozen.shape[1]
    if x.shape[0] != m:
        raise ShapeMismatchException(
            "input has {} rows but the weight has {} columns".format(x.shape[0], m))
    return layer.adjusted_weight() @ x


def _scale_ratio(before, after, nonzero):
    return np.where(nonzero, after / np.where(nonzero, before, 1.0), 1.0)


def report(layer):
    c = layer.curvature
    w0 = layer.frozen.matrix
    w = layer.adjusted_weight()

    before = hyperbolic_radius(exp_map_origin(w0, c, axis=0), c, axis=0)
    after = hyperbolic_radius(exp_map_origin(w, c, axis=0), c, axis=0)
    nonzero = np.linalg.norm(w0, axis=0) >= ZERO_NORM
    scales = _scale_ratio(before, after, nonzero)

    flat_before = float(hyperbolic_radius(exp_map_origin(w0.ravel(), c), c))
    flat_after = float(hyperbolic_radius(exp_map_origin(w.ravel(), c), c))
    flat_nonzero = np.linalg.norm(w0) >= ZERO_NORM

    return AdapterReport(
        mode=layer.mode,
        curvature=c,
        space=layer.space,
        per_column=[ColumnRadius(float(b), float(a), float(s))
                    for b, a, s in zip(before, after, scales)],
        scale_mean=float(np.mean(scales)),
        scale_min=float(np.min(scales)),
        scale_max=float(np.max(scales)),
        param_overhead=layer.param_overhead(),
        frobenius_radius_before=flat_before,
        frobenius_radius_after=flat_after,
        frobenius_scale=float(_scale_ratio(flat_before, flat_after, flat_nonzero)),
    )


def column_radius_ratios(w0, ws, c):
    """
    |W_s exp0(w)| / |exp0(w)| per column, 1.0 for zero columns
    """
    w = _as_matrix(w0)
    lifted = exp_map_origin(w, check_curvature(c), axis=0)
    norm = np.linalg.norm(lifted, axis=0)
    nonzero = norm >= ZERO_NORM
    return _scale_ratio(norm, np.linalg.norm(ws.matvec(lifted), axis=0), nonzero)
