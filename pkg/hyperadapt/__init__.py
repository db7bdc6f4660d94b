__version__ = "0.1.0"

from .domain.geometry.poincare import (exp_map_origin, hyperbolic_radius, log_map_origin, mobius_add,
                                       mobius_matrix_mul, mobius_scalar_mul)
from .domain.scaling.scaling_operator import ScalingOperator, count_params, init_identity, uniform
from .domain.adapter.hyperet_adapter import (AdapterLayer, FrozenWeight, adjust_weight_matrix,
                                             adjust_weight_scalar, forward, report)
from .domain.training.toy_align import ToyTask, radius_histogram, train
from .domain.exceptions.hyperadapt_exception import HyperAdaptException
from .logging import log
