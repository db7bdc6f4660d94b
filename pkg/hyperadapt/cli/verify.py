"""
Property suites run by ``hyperadapt verify``. Every suite draws its own seeded
cases, measures a worst-case error against a fixed tolerance and reports how
many cases it checked and how many it skipped because they fell inside the
boundary band.
"""
from dataclasses import asdict, dataclass
from time import time

import numpy as np

from ..domain.adapter.hyperet_adapter import (adjust_weight_matrix, adjust_weight_scalar,
                                              column_radius_ratios)
from ..domain.exceptions.invalid_config import InvalidConfigException
from ..domain.geometry.poincare import (artanh, exp_map_origin, get_ball_eps, hyperbolic_radius,
                                        log_map_origin, mobius_add, mobius_matrix_mul, mobius_neg,
                                        mobius_apply, mobius_scalar_mul)
from ..domain.scaling.scaling_operator import (BANDED, BLOCK_DIAGONAL, DENSE, DIAGONAL,
                                               TABLE_CONFIGURATIONS, ScalingOperator, count_params,
                                               init_identity, uniform)
from ..domain.training.grad_engine import BOUNDARY_MARGIN
from ..logging import log

CURVATURES = [0.01, 0.1, 1.0]
DIMENSIONS = [2, 8, 64]

IDENTITY_TOL = 1e-9
EXACT_TOL = 1e-12
LIMIT_TOL = 1e-4
LIMIT_CURVATURE = 1e-8


@dataclass
class SuiteResult:
    name: str
    max_error: float
    tolerance: float
    samples: int
    excluded: int
    passed: bool

    def to_dict(self):
        return asdict(self)


def _result(name, errors, tolerance, excluded=0):
    errors = np.asarray(errors, dtype=np.float64).ravel()
    max_error = float(np.max(errors)) if errors.size else 0.0
    passed = bool(errors.size == 0 or (np.all(np.isfinite(errors)) and max_error <= tolerance))
    return SuiteResult(name, max_error, tolerance, int(errors.size), int(excluded), passed)


def _ball_points(rng, count, dim, c, low, high):
    """
    ``count`` rows with random directions and sqrt(c)*|x| uniform in [low, high]
    """
    directions = rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions * rng.uniform(low, high, size=(count, 1)) / np.sqrt(c)


def _clamp_limit():
    return float(artanh(1.0 - BOUNDARY_MARGIN * get_ball_eps()))


def scalar_radius(config, rng):
    """Rad(s (x) x) = s * Rad(x)"""
    per_case = 1200
    errors, excluded = [], 0
    for c in CURVATURES:
        for dim in DIMENSIONS:
            x = _ball_points(rng, per_case, dim, c, 0.01, 0.9)
            s = rng.uniform(0.1, 5.0, size=(per_case, 1))
            before = hyperbolic_radius(x, c)
            keep = s[:, 0] * artanh(np.sqrt(c) * np.linalg.norm(x, axis=1)) < _clamp_limit()
            excluded += int(np.sum(~keep))
            after = hyperbolic_radius(mobius_scalar_mul(s, x, c), c)
            expected = s[:, 0] * before
            errors.append((np.abs(after - expected) / (1.0 + expected))[keep])
    return _result("scalar_radius", np.concatenate(errors), IDENTITY_TOL, excluded)


def _structured_operator(rng, kind, dim):
    block_size = 2 if kind == BLOCK_DIAGONAL else None
    bandwidth = 1 if kind == BANDED else None
    base = init_identity(kind, dim, block_size=block_size, bandwidth=bandwidth)
    return base.with_params(base.params + rng.uniform(-0.3, 0.3, size=base.params.size))


def matrix_radius(config, rng):
    """Rad(M (x) x) = (|Mx| / |x|) * Rad(x) for dense and structured M"""
    points_per_matrix = 100
    errors, excluded = [], 0
    for c in CURVATURES:
        for dim in DIMENSIONS:
            operators = [ScalingOperator(DENSE, dim, np.eye(dim) + 0.3 * rng.standard_normal((dim, dim)) / np.sqrt(dim))
                         for _ in range(12)]
            operators += [_structured_operator(rng, kind, dim)
                          for kind in (DIAGONAL, BLOCK_DIAGONAL, BANDED) for _ in range(4)]
            for ws in operators:
                x = _ball_points(rng, points_per_matrix, dim, c, 0.01, 0.9).T
                mx = ws.matvec(x)
                ratio = np.linalg.norm(mx, axis=0) / np.linalg.norm(x, axis=0)
                keep = ratio * artanh(np.sqrt(c) * np.linalg.norm(x, axis=0)) < _clamp_limit()
                excluded += int(np.sum(~keep))
                after = hyperbolic_radius(mobius_apply(mx, x, c, axis=0), c, axis=0)
                expected = ratio * hyperbolic_radius(x, c, axis=0)
                errors.append((np.abs(after - expected) / (1.0 + expected))[keep])
    return _result("matrix_radius", np.concatenate(errors), IDENTITY_TOL, excluded)


def roundtrip(config, rng):
    """log0(exp0(v)) = v and exp0(log0(x)) = x away from the boundary band"""
    per_case = 1200
    errors = []
    for c in CURVATURES:
        for dim in DIMENSIONS:
            v = _ball_points(rng, per_case, dim, c, 1e-3, 5.0)
            back = log_map_origin(exp_map_origin(v, c), c)
            errors.append(np.linalg.norm(back - v, axis=1) / np.linalg.norm(v, axis=1))
            x = _ball_points(rng, per_case, dim, c, 1e-3, 0.99)
            back = exp_map_origin(log_map_origin(x, c), c)
            errors.append(np.linalg.norm(back - x, axis=1) / np.linalg.norm(x, axis=1))
    return _result("roundtrip", np.concatenate(errors), IDENTITY_TOL)


def mobius(config, rng):
    """x (+) 0 = x and x (+) (-x) = 0, errors measured in units of the ball radius"""
    c = config.curvature
    errors = []
    for dim in DIMENSIONS:
        x = _ball_points(rng, 1000, dim, c, 0.0, 0.9)
        identity = mobius_add(x, np.zeros_like(x), c)
        errors.append(np.max(np.abs(identity - x), axis=1) * np.sqrt(c))
        inverse = mobius_add(x, mobius_neg(x), c)
        errors.append(np.max(np.abs(inverse), axis=1) * np.sqrt(c))
    return _result("mobius", np.concatenate(errors), EXACT_TOL)


def consistency(config, rng):
    """(s I) (x) x against s (x) x"""
    c = config.curvature
    errors = []
    for dim in DIMENSIONS:
        x = _ball_points(rng, 500, dim, c, 0.01, 0.9)
        for s in rng.uniform(0.1, 5.0, size=5):
            by_matrix = mobius_matrix_mul(s * np.eye(dim), x, c)
            by_scalar = mobius_scalar_mul(s, x, c)
            errors.append(np.linalg.norm(by_matrix - by_scalar, axis=1) * np.sqrt(c))
    return _result("consistency", np.concatenate(errors), EXACT_TOL)


def monotonicity(config, rng):
    """Radius strictly increases with the Euclidean norm; the error is the number of violations"""
    c = config.curvature
    violations = []
    for dim in DIMENSIONS:
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        norms = np.unique(rng.uniform(0.0, 0.99, size=2000)) / np.sqrt(c)
        radii = hyperbolic_radius(norms[:, None] * direction, c)
        violations.append(np.sum(np.diff(radii) <= 0))
    return _result("monotonicity", violations, 0.0)


def curvature_limit(config, rng):
    """|exp0(v)| -> |v| as c -> 0"""
    v = rng.standard_normal((2000, 8)) * rng.uniform(0.1, 10.0, size=(2000, 1))
    lifted = exp_map_origin(v, LIMIT_CURVATURE)
    norm = np.linalg.norm(v, axis=1)
    return _result("curvature_limit", np.abs(np.linalg.norm(lifted, axis=1) - norm) / norm, LIMIT_TOL)


def degeneration(config, rng):
    """banded(d=0) and block(1) expand to, and adjust exactly like, the diagonal"""
    c = config.curvature
    errors = []
    for dim in DIMENSIONS:
        for _ in range(20):
            params = rng.uniform(0.5, 1.5, size=dim)
            diagonal = ScalingOperator(DIAGONAL, dim, params)
            w0 = rng.standard_normal((dim, 16)) / np.sqrt(dim)
            expected = adjust_weight_matrix(w0, diagonal, c)
            for ws in (ScalingOperator(BANDED, dim, params, bandwidth=0),
                       ScalingOperator(BLOCK_DIAGONAL, dim, params, block_size=1)):
                dense_equal = np.array_equal(ws.to_dense(), diagonal.to_dense())
                errors.append(np.inf if not dense_equal else 0.0)
                errors.append(np.max(np.abs(adjust_weight_matrix(w0, ws, c) - expected)))
    return _result("degeneration", errors, EXACT_TOL)


def equivalence(config, rng):
    """Uniform diagonal matrix form against the scalar form on random layers"""
    c = config.curvature
    errors = []
    for _ in range(100):
        dim = int(rng.choice(DIMENSIONS))
        w0 = rng.standard_normal((dim, int(rng.integers(1, 32)))) / np.sqrt(dim)
        s = float(rng.uniform(0.1, 5.0))
        by_matrix = adjust_weight_matrix(w0, uniform(DIAGONAL, dim, s), c)
        errors.append(np.max(np.abs(by_matrix - adjust_weight_scalar(w0, s, c))))
    return _result("equivalence", errors, EXACT_TOL)


def _structure_mask(kind, dim, block_size, bandwidth):
    rows, cols = np.indices((dim, dim))
    if kind == DIAGONAL:
        return rows == cols
    if kind == BLOCK_DIAGONAL:
        return rows // block_size == cols // block_size
    if kind == BANDED:
        return np.abs(rows - cols) <= bandwidth
    return np.ones((dim, dim), dtype=bool)


def param_counts(config, rng):
    """Closed-form parameter counts against the number of structural entries"""
    cases = [(DENSE, 64, None, None), (BANDED, 1024, None, 1), (BANDED, 1, None, 0)]
    cases += [(kind, 64, block_size, bandwidth) for kind, block_size, bandwidth in TABLE_CONFIGURATIONS]
    cases += [(kind, 1024, block_size, bandwidth) for kind, block_size, bandwidth in TABLE_CONFIGURATIONS]
    errors = []
    for kind, dim, block_size, bandwidth in cases:
        counted = count_params(kind, dim, block_size, bandwidth)
        structural = int(np.sum(_structure_mask(kind, dim, block_size, bandwidth)))
        built = init_identity(kind, dim, block_size=block_size, bandwidth=bandwidth).params.size
        errors.append(abs(counted - structural) + abs(counted - built))
    errors.append(abs(count_params(BANDED, 1024, bandwidth=1) - 3070))
    return _result("param_counts", errors, 0.0)


def radius_contract(config, rng):
    """Rad(exp0(adjusted column)) = (|W_s x| / |x|) * Rad(x) for x = exp0(column)"""
    c = config.curvature
    errors, excluded = [], 0
    for kind in (DIAGONAL, BLOCK_DIAGONAL, BANDED, DENSE):
        for dim in (2, 8, 32):
            ws = _structured_operator(rng, kind, dim)
            w0 = _ball_points(rng, 64, dim, c, 0.01, 2.0).T
            lifted = exp_map_origin(w0, c, axis=0)
            ratio = column_radius_ratios(w0, ws, c)
            keep = ratio * artanh(np.sqrt(c) * np.linalg.norm(lifted, axis=0)) < _clamp_limit()
            excluded += int(np.sum(~keep))
            before = hyperbolic_radius(lifted, c, axis=0)
            adjusted = adjust_weight_matrix(w0, ws, c)
            after = hyperbolic_radius(exp_map_origin(adjusted, c, axis=0), c, axis=0)
            expected = ratio * before
            errors.append((np.abs(after - expected) / (1.0 + expected))[keep])
    return _result("radius_contract", np.concatenate(errors), IDENTITY_TOL, excluded)


def euclidean_limit(config, rng):
    """At vanishing curvature the adjustment is the plain product W_s W0"""
    errors = []
    for kind in (DIAGONAL, BLOCK_DIAGONAL, BANDED, DENSE):
        ws = _structured_operator(rng, kind, 16)
        w0 = rng.standard_normal((16, 32))
        adjusted = adjust_weight_matrix(w0, ws, LIMIT_CURVATURE)
        expected = ws.to_dense() @ w0
        errors.append(np.linalg.norm(adjusted - expected, axis=0) / np.linalg.norm(expected, axis=0))
    return _result("euclidean_limit", np.concatenate(errors), LIMIT_TOL)


SUITES = {
    "scalar_radius": scalar_radius,
    "matrix_radius": matrix_radius,
    "roundtrip": roundtrip,
    "mobius": mobius,
    "consistency": consistency,
    "monotonicity": monotonicity,
    "curvature_limit": curvature_limit,
    "degeneration": degeneration,
    "equivalence": equivalence,
    "param_counts": param_counts,
    "radius_contract": radius_contract,
    "euclidean_limit": euclidean_limit,
}

SUITE_NAMES = list(SUITES)

# alternative names accepted by --suites for the two radius suites
SUITE_ALIASES = {
    "theorem1": "scalar_radius",
    "theorem2": "matrix_radius",
}


def selected_suites(names):
    if names is None:
        return list(SUITE_NAMES)
    names = [SUITE_ALIASES.get(n, n) for n in names]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InvalidConfigException("unknown suite(s) {}, expected some of {}".format(unknown, SUITE_NAMES))
    if not names:
        raise InvalidConfigException("no suite selected")
    return list(names)


def run_suites(config):
    results = []
    for name in selected_suites(config.suites):
        rng = np.random.default_rng([config.seed, SUITE_NAMES.index(name)])
        log.debug("[LATENCY_MEASURE][INIT][verify:{}]".format(name))
        ts = time()
        result = SUITES[name](config, rng)
        te = time()
        log.debug("[LATENCY_MEASURE][FINISH][verify:{}][ELAPSED={} seconds]".format(name, te - ts))
        if not result.passed:
            log.warning("[verify] suite {} failed: max error {} > {}".format(
                name, result.max_error, result.tolerance))
        results.append(result)
    return results
