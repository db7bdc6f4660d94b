import os
from dataclasses import asdict
from functools import wraps
from time import time

import numpy as np

from .. import __version__
from ..common.io.reports import dumps_report, write_histogram_csv, write_json_report
from ..common.io.tensor_file import DTYPE_F64, DTYPES, read_csv_matrix, read_tensor, write_tensor
from ..domain.adapter.hyperet_adapter import AdapterLayer, report
from ..domain.exceptions.shape_mismatch import ShapeMismatchException
from ..domain.exceptions.training_diverged import TrainingDivergedException
from ..domain.geometry.poincare import hyperbolic_radius
from ..domain.scaling.scaling_operator import ScalingOperator, init_identity, uniform
from ..domain.training.grad_engine import GradCheckConfig, check_all_kinds
from ..domain.training.toy_align import (ToyTask, adjusted_points, generate_dataset, probe_layer_report,
                                         radius_histogram, train)
from ..logging import log
from .verify import run_suites

EXIT_OK = 0
EXIT_PROPERTY_FAILED = 1
EXIT_INVALID_CONFIG = 2
EXIT_IO_ERROR = 3
EXIT_DIVERGED = 4

TRAIN_RESULT_FILE = "train_result.json"
HISTOGRAM_BEFORE_FILE = "histogram_before.csv"
HISTOGRAM_AFTER_FILE = "histogram_after.csv"
SCALING_FILE = "scaling.hypt"


def _with_provenance(config, body):
    body = dict(body)
    body["config"] = config.to_dict()
    body["version"] = __version__
    return body


def _emit(report_body, out):
    if out is None:
        print(dumps_report(report_body))
    else:
        write_json_report(out, report_body)


def _timed(name):
    def decorator(fn):
        @wraps(fn)
        def wrapper(*args, **kwargs):
            log.debug("[LATENCY_MEASURE][INIT][{}]".format(name))
            ts = time()
            try:
                return fn(*args, **kwargs)
            finally:
                te = time()
                log.debug("[LATENCY_MEASURE][FINISH][{}][ELAPSED={} seconds]".format(name, te - ts))
        return wrapper
    return decorator


@_timed("cmd_verify")
def cmd_verify(config, out=None):
    results = run_suites(config)
    passed = all(r.passed for r in results)
    _emit(_with_provenance(config, {
        "passed": passed,
        "suites": [r.to_dict() for r in results],
    }), out)
    return EXIT_OK if passed else EXIT_PROPERTY_FAILED


def load_weights(path, from_csv=False):
    """
    Returns the weight matrix as float64 together with the dtype it was stored in
    """
    if from_csv:
        return read_csv_matrix(path), DTYPES[DTYPE_F64]
    stored = read_tensor(path)
    if stored.ndim != 2:
        raise ShapeMismatchException("weight tensor must have rank 2, got rank {}".format(stored.ndim))
    return stored.astype(np.float64), stored.dtype


def build_scaling(config, dim, scaling_path=None):
    if scaling_path is not None:
        ws = ScalingOperator.from_tensor(read_tensor(scaling_path))
        if ws.dim != dim:
            raise ShapeMismatchException(
                "scaling operator of dimension {} cannot act on {} rows".format(ws.dim, dim))
        return ws
    if config.uniform is not None:
        return uniform(config.kind, dim, config.uniform,
                       block_size=config.block_size, bandwidth=config.bandwidth)
    return init_identity(config.kind, dim, block_size=config.block_size, bandwidth=config.bandwidth)


def build_layer(config, w0, scaling_path=None):
    if config.scalar is not None:
        return AdapterLayer(w0, curvature=config.curvature, scalar=config.scalar, space=config.space)
    return AdapterLayer(w0, build_scaling(config, w0.shape[0], scaling_path), config.curvature, space=config.space)


@_timed("cmd_adjust")
def cmd_adjust(config, weights_in, weights_out, report_out=None, from_csv=False, scaling_path=None):
    w0, dtype = load_weights(weights_in, from_csv)
    layer = build_layer(config, w0, scaling_path)
    write_tensor(weights_out, layer.adjusted_weight(), dtype)
    if report_out is not None:
        write_json_report(report_out, _with_provenance(config, {
            "input": weights_in,
            "output": weights_out,
            "report": report(layer).to_dict(),
        }))
    return EXIT_OK


@_timed("cmd_report")
def cmd_report(config, weights_in, out=None, from_csv=False, scaling_path=None):
    w0, _ = load_weights(weights_in, from_csv)
    layer = build_layer(config, w0, scaling_path)
    _emit(_with_provenance(config, {
        "input": weights_in,
        "report": report(layer).to_dict(),
    }), out)
    return EXIT_OK


def toy_task(config):
    return ToyTask(
        dim=config.dim,
        columns=config.columns,
        samples=config.toy_samples,
        curvature=config.curvature,
        target_low=config.target_low,
        target_high=config.target_high,
        targets_uniform=config.targets_uniform,
        seed=config.seed,
    )


@_timed("cmd_train")
def cmd_train(config, out):
    os.makedirs(out, exist_ok=True)
    task = toy_task(config)
    dataset = generate_dataset(task)
    before = radius_histogram(dataset.base_points, config.bins, task.curvature)
    write_histogram_csv(os.path.join(out, HISTOGRAM_BEFORE_FILE), before)

    try:
        result = train(task, config.kind, config.lr, config.momentum, config.max_steps,
                       block_size=config.block_size, bandwidth=config.bandwidth)
    except TrainingDivergedException as e:
        log.error("[cmd_train] {}".format(e.message))
        partial = e.partial_result.to_dict() if e.partial_result is not None else None
        write_json_report(os.path.join(out, TRAIN_RESULT_FILE), _with_provenance(config, {
            "diverged": True,
            "message": e.message,
            "result": partial,
        }))
        return EXIT_DIVERGED

    after = radius_histogram(adjusted_points(result.scaling, dataset), config.bins, task.curvature)
    write_histogram_csv(os.path.join(out, HISTOGRAM_AFTER_FILE), after)
    write_tensor(os.path.join(out, SCALING_FILE), result.scaling.to_tensor())

    # mean normalized radius a perfect fit would reach
    radii = hyperbolic_radius(dataset.base_points, task.curvature, axis=0)
    implied = np.mean(dataset.target_scales * radii) / before.normalization
    write_json_report(os.path.join(out, TRAIN_RESULT_FILE), _with_provenance(config, {
        "diverged": False,
        "result": result.to_dict(),
        "histogram_before": before.to_dict(),
        "histogram_after": after.to_dict(),
        "target_implied_mean_radius": float(implied),
        "layer_report": probe_layer_report(task, result.scaling).to_dict(),
    }))
    return EXIT_OK


@_timed("cmd_check_grad")
def cmd_check_grad(config, out=None):
    cfg = GradCheckConfig(step=config.step, rel_tol=config.rel_tol, abs_tol=config.abs_tol,
                          samples=config.samples, seed=config.seed)
    checks = check_all_kinds(cfg, config.curvature, dim=config.grad_dim,
                             block_size=config.block_size, bandwidth=config.bandwidth)
    passed = all(check.passed for check in checks.values())
    _emit(_with_provenance(config, {
        "passed": passed,
        "kinds": {kind: {"passed": check.passed, "probes": [asdict(p) for p in check.probes]}
                  for kind, check in checks.items()},
    }), out)
    return EXIT_OK if passed else EXIT_PROPERTY_FAILED
