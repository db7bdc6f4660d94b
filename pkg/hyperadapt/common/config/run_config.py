"""
Resolved run configuration. Values come from the built-in defaults, then from
an optional ``key=value`` file, then from command-line flags; later sources win.
"""
import logging
from dataclasses import asdict, dataclass, fields
from typing import List, Optional

from ...domain.adapter.hyperet_adapter import DEFAULT_CURVATURE, MOBIUS_SPACE, SPACES
from ...domain.exceptions.domain_exception import DomainException
from ...domain.exceptions.invalid_config import InvalidConfigException
from ...domain.geometry.poincare import check_curvature, get_ball_eps
from ...domain.scaling.scaling_operator import resolve_kind

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

NONE_VALUES = ("", "none", "null")


@dataclass
class RunConfig:
    curvature: float = DEFAULT_CURVATURE
    kind: str = "diagonal"
    block_size: int = 2
    bandwidth: int = 1
    scalar: Optional[float] = None
    uniform: Optional[float] = None
    space: str = MOBIUS_SPACE
    seed: int = 0
    lr: float = 1e-2
    momentum: float = 0.9
    max_steps: int = 500
    ball_eps: Optional[float] = None
    dim: int = 32
    columns: int = 64
    toy_samples: int = 256
    target_low: float = 0.5
    target_high: float = 2.0
    targets_uniform: Optional[float] = None
    bins: int = 20
    samples: int = 100
    step: float = 1e-6
    rel_tol: float = 1e-5
    abs_tol: float = 1e-8
    grad_dim: int = 8
    suites: Optional[List[str]] = None
    log_level: str = "WARNING"

    def to_dict(self):
        return asdict(self)

    def validate(self):
        try:
            check_curvature(self.curvature)
        except DomainException as e:
            raise InvalidConfigException(e.message)
        self.kind = resolve_kind(self.kind)
        _require(self.seed >= 0, "seed must be >= 0, got {}".format(self.seed))
        _require(self.block_size >= 1, "block_size must be >= 1, got {}".format(self.block_size))
        _require(self.bandwidth >= 0, "bandwidth must be >= 0, got {}".format(self.bandwidth))
        _require(self.lr >= 0, "lr must be >= 0, got {}".format(self.lr))
        _require(0 <= self.momentum < 1, "momentum must lie in [0, 1), got {}".format(self.momentum))
        _require(self.max_steps >= 0, "max_steps must be >= 0, got {}".format(self.max_steps))
        if self.ball_eps is None:
            self.ball_eps = get_ball_eps()
        _require(0 < self.ball_eps < 1, "ball_eps must lie in (0, 1), got {}".format(self.ball_eps))
        for name in ("dim", "columns", "toy_samples", "bins", "samples", "grad_dim"):
            value = getattr(self, name)
            _require(value >= 1, "{} must be >= 1, got {}".format(name, value))
        _require(0 < self.target_low <= self.target_high,
                 "target range must satisfy 0 < low <= high, got [{}, {}]".format(
                     self.target_low, self.target_high))
        if self.targets_uniform is not None:
            _require(self.targets_uniform > 0,
                     "targets_uniform must be > 0, got {}".format(self.targets_uniform))
        _require(self.step > 0, "step must be > 0, got {}".format(self.step))
        _require(self.rel_tol > 0 and self.abs_tol > 0, "tolerances must be > 0")
        _require(self.scalar is None or self.uniform is None,
                 "scalar and uniform cannot be combined")
        self.space = self.space.lower()
        _require(self.space in SPACES, "space must be one of {}, got {}".format(SPACES, self.space))
        self.log_level = self.log_level.upper()
        _require(self.log_level in LOG_LEVELS,
                 "log_level must be one of {}, got {}".format(LOG_LEVELS, self.log_level))
        return self

    @property
    def logging_level(self):
        return getattr(logging, self.log_level)


def _require(condition, message):
    if not condition:
        raise InvalidConfigException(message)


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _normalize_key(key):
    return key.strip().replace("-", "_")


def coerce(key, raw):
    """
    Converts a textual value to the type of the RunConfig field ``key``
    """
    key = _normalize_key(key)
    if key not in FIELD_TYPES:
        raise InvalidConfigException("unknown configuration key '{}'".format(key))
    field_type = FIELD_TYPES[key]
    if not isinstance(raw, str):
        return raw
    value = raw.strip()
    optional = field_type in (Optional[float], Optional[List[str]])
    if optional and value.lower() in NONE_VALUES:
        return None
    try:
        if field_type in (float, Optional[float]):
            return float(value)
        if field_type is int:
            return int(value)
        if field_type == Optional[List[str]]:
            return [v.strip() for v in value.split(",") if v.strip()]
        return value
    except ValueError:
        raise InvalidConfigException("'{}' is not a valid value for {}".format(raw, key))


def parse_config_text(text):
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigException("line {}: expected key=value, got '{}'".format(number, line))
        key, raw = line.split("=", 1)
        values[_normalize_key(key)] = coerce(key, raw)
    return values


def read_config_file(path):
    with open(path, "r") as f:
        return parse_config_text(f.read())


def resolve_config(file_values=None, flag_values=None):
    """
    Defaults < file values < flag values. ``None`` flag values mean "not given".
    """
    merged = {}
    for key, value in (file_values or {}).items():
        merged[_normalize_key(key)] = coerce(key, value)
    for key, value in (flag_values or {}).items():
        if value is not None:
            merged[_normalize_key(key)] = coerce(key, value)
    return RunConfig(**merged).validate()
