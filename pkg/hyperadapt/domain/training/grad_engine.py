"""
Reverse-mode gradients of the adjustment path with respect to the scaling
parameters, a central-difference oracle to check them and the momentum SGD
update used by the training loop.
"""
from dataclasses import dataclass, field
from time import time
from typing import Dict, List

import numpy as np

from ...logging import log
from ..adapter.hyperet_adapter import adjust_weight_matrix, _as_matrix, _check_operator
from ..exceptions.domain_exception import DomainException
from ..exceptions.invalid_config import InvalidConfigException
from ..exceptions.shape_mismatch import ShapeMismatchException
from ..geometry.poincare import ZERO_NORM, artanh, check_curvature, exp_map_origin, get_ball_eps
from ..scaling.scaling_operator import KINDS, init_identity
from .dataset import AlignmentDataset

# lifted points closer than this many ball epsilons to the boundary are not differentiated
BOUNDARY_MARGIN = 10


@dataclass
class GradCheckConfig:
    step: float = 1e-6
    rel_tol: float = 1e-5
    abs_tol: float = 1e-8
    samples: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise InvalidConfigException("finite difference step must be > 0, got {}".format(self.step))
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidConfigException("gradient tolerances must be > 0")
        if int(self.samples) != self.samples or self.samples < 1:
            raise InvalidConfigException(
                "gradient check needs at least one sample, got {}".format(self.samples))


@dataclass
class ParamGradient:
    grads: np.ndarray
    excluded: int = 0


def _check_upstream(w, upstream):
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != w.shape:
        raise ShapeMismatchException(
            "upstream gradient of shape {} does not match weight {}".format(upstream.shape, w.shape))
    return upstream


def _near_boundary(scaled_norm):
    return scaled_norm > 1.0 - BOUNDARY_MARGIN * get_ball_eps()


def vjp_adjust_weight_matrix(w0, ws, c, upstream):
    """
    d<upstream, log0(W_s (x)_c exp0(W0))> / d params.

    Per column, with x = exp0(w), u = W_s x, z = (|u|/|x|) artanh(sqrt(c)|x|),
    t = tanh(z) and output (artanh(t)/sqrt(c)) u/|u|. Columns whose lifted point
    or image sits within the boundary margin contribute nothing and are counted
    in ``excluded``.
    """
    w = _as_matrix(w0)
    c = check_curvature(c)
    _check_operator(w, ws)
    g = _check_upstream(w, upstream)
    sqrt_c = np.sqrt(c)

    x = exp_map_origin(w, c, axis=0)
    u = ws.matvec(x)
    x_norm = np.linalg.norm(x, axis=0)
    u_norm = np.linalg.norm(u, axis=0)
    degenerate = (x_norm < ZERO_NORM) | (u_norm < ZERO_NORM)
    safe_x = np.maximum(x_norm, ZERO_NORM)
    safe_u = np.maximum(u_norm, ZERO_NORM)

    a = artanh(sqrt_c * x_norm)
    z = u_norm / safe_x * a
    t = np.tanh(z)
    b = artanh(t)
    excluded = ~degenerate & (_near_boundary(sqrt_c * x_norm) | _near_boundary(t))
    active = ~degenerate & ~excluded

    u_hat = u / safe_u
    g_dot_u = np.sum(g * u_hat, axis=0)
    # t == 1 only happens on excluded columns
    with np.errstate(divide="ignore", invalid="ignore"):
        db_dt = 1.0 / (1.0 - t ** 2)
        dt_dz = 1.0 - t ** 2
        dz_dunorm = a / safe_x
        radial = g_dot_u * db_dt * dt_dz * dz_dunorm
        tangential = b / safe_u
        g_u = (radial * u_hat + tangential * (g - g_dot_u * u_hat)) / sqrt_c
    g_u = np.where(active, g_u, 0.0)

    n_excluded = int(np.sum(excluded))
    if n_excluded:
        log.info("[vjp_adjust_weight_matrix] {} column(s) inside the boundary band excluded".format(n_excluded))
    return ParamGradient(grads=ws.param_vjp(g_u, x), excluded=n_excluded)


def vjp_adjust_weight_scalar(w0, s, c, upstream):
    """
    d<upstream, log0(s (x)_c exp0(W0))> / ds
    """
    w = _as_matrix(w0)
    c = check_curvature(c)
    g = _check_upstream(w, upstream)
    sqrt_c = np.sqrt(c)

    x = exp_map_origin(w, c, axis=0)
    x_norm = np.linalg.norm(x, axis=0)
    zero = x_norm < ZERO_NORM
    x_hat = x / np.maximum(x_norm, ZERO_NORM)
    a = artanh(sqrt_c * x_norm)
    t = np.tanh(float(s) * a)
    active = ~zero & ~_near_boundary(sqrt_c * x_norm) & ~_near_boundary(np.abs(t))

    # artanh(tanh(s a)) = s a, so the radial output moves by a / sqrt(c) per unit of s
    dout_ds = a / sqrt_c
    per_column = np.where(active, dout_ds * np.sum(g * x_hat, axis=0), 0.0)
    return float(np.sum(per_column))


def radius_scales(ws, lifted):
    """
    |W_s x| / |x| for every column of ``lifted`` (1.0 for zero columns)
    """
    norm = np.linalg.norm(lifted, axis=0)
    zero = norm < ZERO_NORM
    return np.where(zero, 1.0, np.linalg.norm(ws.matvec(lifted), axis=0) / np.maximum(norm, ZERO_NORM))


def vjp_radius_loss(ws, dataset, indices=None):
    """
    Gradient of mean_i (scale_i - target_i)^2 over ``indices`` (all samples by default)
    """
    lifted = dataset.base_points
    targets = dataset.target_scales
    if indices is not None:
        lifted = lifted[:, indices]
        targets = targets[indices]
    norm = np.linalg.norm(lifted, axis=0)
    image = ws.matvec(lifted)
    image_norm = np.linalg.norm(image, axis=0)
    active = (norm >= ZERO_NORM) & (image_norm >= ZERO_NORM)
    scales = np.where(norm >= ZERO_NORM, image_norm / np.maximum(norm, ZERO_NORM), 1.0)

    coef = np.where(active, 2.0 * (scales - targets) / targets.size, 0.0)
    direction = image / np.maximum(image_norm, ZERO_NORM)
    unit_lifted = lifted / np.maximum(norm, ZERO_NORM)
    return ParamGradient(grads=ws.param_vjp(coef * direction, unit_lifted))


def finite_diff_oracle(loss_fn, params, cfg):
    """
    Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate
    """
    params = np.array(params, dtype=np.float64)
    h = cfg.step
    grad = np.zeros_like(params)
    for i in range(params.size):
        probe = params.copy()
        probe[i] = params[i] + h
        f_plus = loss_fn(probe)
        probe[i] = params[i] - h
        f_minus = loss_fn(probe)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise DomainException("loss is not finite around coordinate {}".format(i))
        grad[i] = (f_plus - f_minus) / (2 * h)
    return grad


def _check_rates(lr, momentum):
    if lr < 0:
        raise InvalidConfigException("learning rate must be >= 0, got {}".format(lr))
    if not 0.0 <= momentum < 1.0:
        raise InvalidConfigException("momentum must lie in [0, 1), got {}".format(momentum))


def sgd_step(params, grads, lr, momentum, velocity=None):
    """
    Classical momentum: v <- momentum * v + g, p <- p - lr * v. Returns (params, velocity).
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape:
        raise ShapeMismatchException(
            "parameters {} and gradients {} differ in shape".format(params.shape, grads.shape))
    _check_rates(lr, momentum)
    if velocity is None:
        velocity = np.zeros_like(params)
    velocity = momentum * velocity + grads
    return params - lr * velocity, velocity


def sgd_epoch(ws, dataset, order, lr, momentum, velocity=None):
    """
    One pass of per-sample momentum updates over the samples in ``order``.
    Each update is the single-sample ``vjp_radius_loss`` gradient followed by
    ``sgd_step``, carried out on the dense expansion of ``ws`` restricted to
    its structural entries so that no operator is rebuilt inside the pass.

    Returns ``(params, velocity)`` in parameter order. Nothing is validated
    for overflow; callers check the returned parameters.
    """
    _check_rates(lr, momentum)
    rows, cols = ws.structure()
    mask = np.zeros((ws.dim, ws.dim))
    mask[rows, cols] = 1.0
    w = ws.to_dense()
    v = np.zeros_like(w)
    if velocity is not None:
        velocity = np.asarray(velocity, dtype=np.float64)
        if velocity.shape != ws.params.shape:
            raise ShapeMismatchException(
                "velocity {} does not match parameters {}".format(velocity.shape, ws.params.shape))
        v[rows, cols] = velocity

    lifted = dataset.base_points
    norm = np.linalg.norm(lifted, axis=0)
    unit = lifted / np.maximum(norm, ZERO_NORM)
    targets = dataset.target_scales
    for i in order:
        image = w @ lifted[:, i]
        image_norm = np.sqrt(image @ image)
        v *= momentum
        if norm[i] >= ZERO_NORM and image_norm >= ZERO_NORM:
            coef = 2.0 * (image_norm / norm[i] - targets[i])
            v += mask * np.outer(coef * image / image_norm, unit[:, i])
        w -= lr * v
    return w[rows, cols], v[rows, cols]


def relative_error(analytic, numeric, abs_tol):
    return np.abs(analytic - numeric) / (np.abs(numeric) + abs_tol)


@dataclass
class ProbeResult:
    probe: str
    max_rel_error: float
    worst_coordinate: int
    worst_case: int
    checked: int
    excluded: int
    passed: bool


@dataclass
class KindCheck:
    kind: str
    probes: List[ProbeResult] = field(default_factory=list)

    @property
    def passed(self):
        return all(p.passed for p in self.probes)


def _random_case(rng, kind, dim, columns, block_size, bandwidth, c):
    # positive weights, upstream and images keep every gradient coordinate away from zero
    base = init_identity(kind, dim, block_size=block_size, bandwidth=bandwidth)
    params = base.params + rng.uniform(-0.05, 0.05, size=base.params.size)
    ws = base.with_params(params)
    radius_cap = 0.6 / np.sqrt(c)
    w0 = rng.uniform(0.2, 1.0, size=(dim, columns))
    w0 *= radius_cap / max(np.linalg.norm(w0, axis=0).max(), ZERO_NORM)
    upstream = rng.uniform(0.5, 1.5, size=(dim, columns))
    representations = rng.uniform(0.2, 1.0, size=(dim, columns))
    batch = AlignmentDataset(representations, exp_map_origin(representations, c, axis=0),
                             rng.uniform(2.5, 3.0, size=columns), c)
    return ws, w0, upstream, batch


def _probe(name, cases, cfg):
    worst = ProbeResult(name, 0.0, -1, -1, 0, 0, True)
    for case_index, (analytic, numeric, excluded) in enumerate(cases):
        worst.excluded += excluded
        if excluded:
            continue
        errors = relative_error(analytic, numeric, cfg.abs_tol)
        worst.checked += 1
        i = int(np.argmax(errors))
        if errors[i] > worst.max_rel_error:
            worst.max_rel_error = float(errors[i])
            worst.worst_coordinate = i
            worst.worst_case = case_index
        if errors[i] >= cfg.rel_tol:
            worst.passed = False
    return worst


def check_gradients(kind, cfg, c, dim=8, columns=5, block_size=2, bandwidth=1):
    """
    Compares the analytic adjust-weight and radius-loss gradients with the
    finite-difference oracle on ``cfg.samples`` seeded cases
    """
    c = check_curvature(c)
    rng = np.random.default_rng([cfg.seed, KINDS.index(kind)])
    log.debug("[LATENCY_MEASURE][INIT][check_gradients][kind={}]".format(kind))
    ts = time()

    adjust_cases = []
    radius_cases = []
    for _ in range(cfg.samples):
        ws, w0, upstream, batch = _random_case(rng, kind, dim, columns, block_size, bandwidth, c)

        analytic = vjp_adjust_weight_matrix(w0, ws, c, upstream)
        numeric = finite_diff_oracle(
            lambda p: float(np.sum(upstream * adjust_weight_matrix(w0, ws.with_params(p), c))),
            ws.params, cfg)
        adjust_cases.append((analytic.grads, numeric, analytic.excluded))

        analytic = vjp_radius_loss(ws, batch)
        numeric = finite_diff_oracle(
            lambda p: radius_loss_of_batch(ws.with_params(p), batch), ws.params, cfg)
        radius_cases.append((analytic.grads, numeric, analytic.excluded))

    result = KindCheck(kind, [_probe("adjust_weight", adjust_cases, cfg),
                               _probe("radius_loss", radius_cases, cfg)])
    te = time()
    log.debug("[LATENCY_MEASURE][FINISH][check_gradients][kind={}][ELAPSED={} seconds]".format(kind, te - ts))
    return result


def radius_loss_of_batch(ws, batch):
    scales = radius_scales(ws, batch.base_points)
    return float(np.mean((scales - batch.target_scales) ** 2))


def check_all_kinds(cfg, c, dim=8, block_size=2, bandwidth=1) -> Dict[str, KindCheck]:
    return {kind: check_gradients(kind, cfg, c, dim=dim, block_size=block_size, bandwidth=bandwidth)
            for kind in KINDS}
