"""
Synthetic radius-alignment task: learn one W_s so that every lifted
representation has its hyperbolic radius rescaled by its own target factor.
"""
from dataclasses import dataclass, field
from time import time
from typing import List, Optional

import numpy as np

from ...logging import log
from ..adapter.hyperet_adapter import AdapterLayer, DEFAULT_CURVATURE, report, representation_radius_scale
from ..exceptions.domain_exception import DomainException
from ..exceptions.invalid_config import InvalidConfigException
from ..exceptions.training_diverged import TrainingDivergedException
from ..geometry.poincare import (artanh, check_curvature, exp_map_origin, get_ball_eps, hyperbolic_radius,
                                 log_map_origin, max_radius)
from ..scaling.scaling_operator import DENSE, ScalingOperator, init_identity
from .dataset import AlignmentDataset
from .grad_engine import BOUNDARY_MARGIN, radius_scales, sgd_epoch

CONVERGENCE_THRESHOLD = 1e-4

# sqrt(c)*|x| range of the generated base points
MIN_SCALED_NORM = 0.1
MAX_SCALED_NORM = 0.8

# values this close below a bin edge are counted in the upper bin
BIN_EDGE_TOLERANCE = 1e-9


@dataclass
class ToyTask:
    dim: int = 32
    columns: int = 64
    samples: int = 256
    curvature: float = DEFAULT_CURVATURE
    target_low: float = 0.5
    target_high: float = 2.0
    targets_uniform: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("dim", "columns", "samples"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidConfigException("{} must be a positive integer, got {}".format(name, value))
        try:
            check_curvature(self.curvature)
        except DomainException as e:
            raise InvalidConfigException(e.message)
        if not 0 < self.target_low <= self.target_high:
            raise InvalidConfigException(
                "target range must satisfy 0 < low <= high, got [{}, {}]".format(
                    self.target_low, self.target_high))
        if self.targets_uniform is not None and not self.targets_uniform > 0:
            raise InvalidConfigException(
                "uniform target scale must be > 0, got {}".format(self.targets_uniform))


@dataclass
class TrainResult:
    kind: str
    loss_curve: List[float] = field(default_factory=list)
    final_scales: List[float] = field(default_factory=list)
    steps: int = 0
    converged: bool = False
    converged_step: Optional[int] = None
    scaling: object = None

    def to_dict(self):
        return {
            "kind": self.kind,
            "loss_curve": list(self.loss_curve),
            "final_loss": self.loss_curve[-1] if self.loss_curve else None,
            "final_scales": list(self.final_scales),
            "steps": self.steps,
            "converged": self.converged,
            "converged_step": self.converged_step,
            "param_count": self.scaling.param_count() if self.scaling is not None else None,
        }


@dataclass
class RadiusHistogram:
    counts: List[int]
    edges: List[float]
    normalization: float
    mean_normalized_radius: float

    @property
    def total(self):
        return int(sum(self.counts))

    def rows(self):
        return [(self.edges[i], self.edges[i + 1], self.counts[i]) for i in range(len(self.counts))]

    def to_dict(self):
        return {
            "counts": list(self.counts),
            "edges": list(self.edges),
            "normalization": self.normalization,
            "mean_normalized_radius": self.mean_normalized_radius,
            "total": self.total,
        }


def hidden_operator(rng, n, low, high):
    """
    Dense U diag(sigma) V^T with random orthogonal U, V and singular values
    drawn from [low, high]. |H x| / |x| lies in [low, high] for every x != 0.
    """
    u, _ = np.linalg.qr(rng.standard_normal((n, n)))
    v, _ = np.linalg.qr(rng.standard_normal((n, n)))
    sigma = rng.uniform(low, high, size=n)
    return ScalingOperator(DENSE, n, (u * sigma) @ v.T)


def generate_dataset(task):
    """
    Base points at seeded directions and scaled norms, with the target scales
    either all equal to ``targets_uniform`` or realized by a seeded hidden
    dense operator, so that a dense W_s can reach zero loss.
    """
    c = task.curvature
    rng = np.random.default_rng(task.seed)
    n, size = task.dim, task.samples

    directions = rng.standard_normal((n, size))
    directions /= np.linalg.norm(directions, axis=0)
    scaled_norms = rng.uniform(MIN_SCALED_NORM, MAX_SCALED_NORM, size=size)
    base_points = directions * scaled_norms / np.sqrt(c)

    hidden = None
    if task.targets_uniform is not None:
        targets = np.full(size, float(task.targets_uniform))
    else:
        hidden = hidden_operator(rng, n, task.target_low, task.target_high)
        targets = np.clip(radius_scales(hidden, base_points), task.target_low, task.target_high)
    # the scaled point must stay clear of the clamp band
    reachable = artanh(1.0 - BOUNDARY_MARGIN * get_ball_eps()) / artanh(scaled_norms)
    targets = np.minimum(targets, reachable)

    return AlignmentDataset(
        representations=log_map_origin(base_points, c, axis=0),
        base_points=base_points,
        target_scales=targets,
        curvature=c,
        source=hidden,
    )


def achieved_scales(ws, dataset):
    scales, _ = representation_radius_scale(dataset.representations, ws, dataset.curvature)
    return scales


def radius_loss(ws, dataset):
    """
    mean_i (achieved_scale_i - target_scale_i)^2. The scales are the ones
    representation_radius_scale reports, |W_s x_i| / |x_i| on the lifted
    representations; a loss that overflows comes back as inf.
    """
    lifted = exp_map_origin(dataset.representations, dataset.curvature, axis=0)
    with np.errstate(over="ignore", invalid="ignore"):
        scales = radius_scales(ws, lifted)
        return float(np.mean((scales - dataset.target_scales) ** 2))


def train(task, kind, lr, momentum, max_steps, block_size=None, bandwidth=None):
    """
    Momentum SGD from the identity. Each step is one pass over the dataset in a
    seeded random order with one update per sample; the loss over the whole
    dataset is recorded before the first step and after every step.
    """
    if int(max_steps) != max_steps or max_steps < 0:
        raise InvalidConfigException("max_steps must be a non-negative integer, got {}".format(max_steps))
    dataset = generate_dataset(task)
    ws = init_identity(kind, task.dim, block_size=block_size, bandwidth=bandwidth)
    order_rng = np.random.default_rng([task.seed, 1])

    log.debug("[LATENCY_MEASURE][INIT][train][kind={}]".format(ws.kind))
    ts = time()
    result = TrainResult(kind=ws.kind, scaling=ws)
    result.loss_curve.append(radius_loss(ws, dataset))
    if result.loss_curve[0] < CONVERGENCE_THRESHOLD:
        result.converged_step = 0

    velocity = None
    for step in range(1, int(max_steps) + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            params, velocity = sgd_epoch(ws, dataset, order_rng.permutation(dataset.size), lr, momentum, velocity)
        if np.all(np.isfinite(params)):
            ws = ws.with_params(params)
            loss = radius_loss(ws, dataset)
        else:
            loss = float("nan")
        if not np.isfinite(loss):
            result.steps = step - 1
            result.final_scales = achieved_scales(result.scaling, dataset).tolist()
            log.error("[train] loss diverged at step {}".format(step))
            raise TrainingDivergedException(
                "training diverged at step {} (lr={}, momentum={})".format(step, lr, momentum),
                partial_result=result)
        result.scaling = ws
        result.loss_curve.append(loss)
        result.steps = step
        log.debug("[train][kind={}] step {} loss {}".format(ws.kind, step, loss))
        if result.converged_step is None and loss < CONVERGENCE_THRESHOLD:
            result.converged_step = step
            log.info("[train][kind={}] loss below {} at step {}".format(ws.kind, CONVERGENCE_THRESHOLD, step))

    result.final_scales = achieved_scales(result.scaling, dataset).tolist()
    result.converged = result.loss_curve[-1] < CONVERGENCE_THRESHOLD
    te = time()
    log.debug("[LATENCY_MEASURE][FINISH][train][kind={}][ELAPSED={} seconds]".format(ws.kind, te - ts))
    return result


def radius_histogram(points, bins, c, axis=0):
    """
    Histogram of hyperbolic radii normalized to [0, 1] by the largest radius a
    clamped point can reach. ``points`` holds one point per column by default.
    """
    if int(bins) != bins or bins < 1:
        raise InvalidConfigException("bins must be a positive integer, got {}".format(bins))
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        raise DomainException("cannot build a radius histogram from an empty point set")
    if points.ndim == 1:
        points = points[:, None] if axis == 0 else points[None, :]
    normalization = max_radius(c)
    normalized = hyperbolic_radius(points, c, axis=axis) / normalization
    index = np.clip(np.floor(normalized * bins + BIN_EDGE_TOLERANCE).astype(int), 0, bins - 1)
    counts = np.bincount(index, minlength=bins)
    return RadiusHistogram(
        counts=[int(v) for v in counts],
        edges=[float(v) for v in np.linspace(0.0, 1.0, bins + 1)],
        normalization=float(normalization),
        mean_normalized_radius=float(np.mean(normalized)),
    )


def adjusted_points(ws, dataset):
    _, points = representation_radius_scale(dataset.representations, ws, dataset.curvature)
    return points


def probe_layer_report(task, ws):
    """
    AdapterReport of ``ws`` applied to a seeded random frozen layer of shape
    dim x columns
    """
    rng = np.random.default_rng([task.seed, 2])
    frozen = rng.standard_normal((task.dim, task.columns)) / np.sqrt(task.dim)
    return report(AdapterLayer(frozen, ws, task.curvature))
