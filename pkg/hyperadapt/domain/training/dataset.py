from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..exceptions.shape_mismatch import ShapeMismatchException


@dataclass
class AlignmentDataset:
    """
    Column representations, their lifted ball points and the radius scale each
    one should reach
    """
    representations: np.ndarray
    base_points: np.ndarray
    target_scales: np.ndarray
    curvature: float
    # operator whose scales the targets were drawn from, if any
    source: Optional[object] = None

    def __post_init__(self):
        if self.representations.shape != self.base_points.shape:
            raise ShapeMismatchException("representations and base points differ in shape")
        if self.base_points.ndim != 2 or self.base_points.shape[1] != self.target_scales.size:
            raise ShapeMismatchException(
                "expected one target scale per column, got {} columns and {} targets".format(
                    self.base_points.shape[-1], self.target_scales.size))

    @property
    def size(self):
        return self.target_scales.size

    @property
    def dim(self):
        return self.base_points.shape[0]
