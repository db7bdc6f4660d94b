"""
Structured learnable scaling matrices W_s.

Four parametrizations share one flat parameter vector with a fixed ordering:

- diagonal: the diagonal, in row order
- block_diagonal: blocks in order, each block row-major
- banded: the entries with |i - j| <= bandwidth, row-major
- dense: the whole matrix, row-major
"""
import copy

import numpy as np
import scipy.sparse as sps

from ..exceptions.domain_exception import DomainException
from ..exceptions.invalid_config import InvalidConfigException
from ..exceptions.shape_mismatch import ShapeMismatchException

DIAGONAL = "diagonal"
BLOCK_DIAGONAL = "block_diagonal"
BANDED = "banded"
DENSE = "dense"

KINDS = [DIAGONAL, BLOCK_DIAGONAL, BANDED, DENSE]

# CLI spelling of each kind
KIND_ALIASES = {
    "diagonal": DIAGONAL,
    "block": BLOCK_DIAGONAL,
    "block_diagonal": BLOCK_DIAGONAL,
    "banded": BANDED,
    "dense": DENSE,
}

KIND_CODES = {DIAGONAL: 0, BLOCK_DIAGONAL: 1, BANDED: 2, DENSE: 3}

# (kind, block_size, bandwidth) for the structures compared in the ablations
TABLE_CONFIGURATIONS = [
    (DIAGONAL, None, None),
    (BLOCK_DIAGONAL, 2, None),
    (BLOCK_DIAGONAL, 4, None),
    (BLOCK_DIAGONAL, 8, None),
    (BANDED, None, 1),
    (BANDED, None, 2),
    (BANDED, None, 4),
]

TENSOR_HEADER_SIZE = 4


def resolve_kind(kind):
    try:
        return KIND_ALIASES[kind]
    except KeyError:
        raise InvalidConfigException(
            "unknown scaling kind '{}', expected one of {}".format(kind, sorted(KIND_ALIASES)))


def count_params(kind, dim, block_size=None, bandwidth=None):
    kind = resolve_kind(kind)
    _validate_structure(kind, dim, block_size, bandwidth)
    if kind == DIAGONAL:
        return dim
    if kind == BLOCK_DIAGONAL:
        return (dim // block_size) * block_size ** 2
    if kind == BANDED:
        return dim * (2 * bandwidth + 1) - bandwidth * (bandwidth + 1)
    return dim * dim


def _validate_structure(kind, dim, block_size, bandwidth):
    if int(dim) != dim or dim < 1:
        raise InvalidConfigException("dimension must be a positive integer, got {}".format(dim))
    if kind == BLOCK_DIAGONAL:
        if block_size is None or int(block_size) != block_size or block_size < 1:
            raise InvalidConfigException(
                "block_diagonal needs a positive integer block_size, got {}".format(block_size))
        if dim % block_size != 0:
            raise InvalidConfigException(
                "dimension {} is not divisible by block_size {}".format(dim, block_size))
    if kind == BANDED:
        if bandwidth is None or int(bandwidth) != bandwidth or bandwidth < 0:
            raise InvalidConfigException(
                "banded needs a non-negative integer bandwidth, got {}".format(bandwidth))
        if bandwidth >= dim:
            raise InvalidConfigException(
                "bandwidth {} must be smaller than the dimension {}".format(bandwidth, dim))


def _structure_indices(kind, dim, block_size, bandwidth):
    """
    Row and column of every parameter, in canonical order
    """
    if kind == DIAGONAL:
        idx = np.arange(dim)
        return idx, idx.copy()
    if kind == BLOCK_DIAGONAL:
        n_blocks = dim // block_size
        local_r, local_c = np.divmod(np.arange(block_size * block_size), block_size)
        offsets = np.repeat(np.arange(n_blocks) * block_size, block_size * block_size)
        return np.tile(local_r, n_blocks) + offsets, np.tile(local_c, n_blocks) + offsets
    if kind == BANDED:
        rows, cols = np.divmod(np.arange(dim * dim), dim)
        in_band = np.abs(rows - cols) <= bandwidth
        return rows[in_band], cols[in_band]
    rows, cols = np.divmod(np.arange(dim * dim), dim)
    return rows, cols


class ScalingOperator:
    """
    A W_s of one of the four kinds. Instances are never mutated: parameter
    updates go through ``with_params``.
    """

    def __init__(self, kind, dim, params, block_size=None, bandwidth=None):
        kind = resolve_kind(kind)
        _validate_structure(kind, dim, block_size, bandwidth)
        self.kind = kind
        self.dim = int(dim)
        self.block_size = int(block_size) if kind == BLOCK_DIAGONAL else None
        self.bandwidth = int(bandwidth) if kind == BANDED else None

        params = np.array(params, dtype=np.float64).ravel()
        expected = self.param_count()
        if params.size != expected:
            raise ShapeMismatchException(
                "{} operator of dimension {} takes {} parameters, got {}".format(
                    kind, self.dim, expected, params.size))
        if not np.all(np.isfinite(params)):
            raise DomainException("scaling parameters must be finite")
        params.setflags(write=False)
        self.params = params

        self._rows, self._cols = _structure_indices(
            self.kind, self.dim, self.block_size, self.bandwidth)
        if self.kind == BANDED:
            self._band = self._band_layout()

    def __repr__(self):
        return "ScalingOperator(kind={}, dim={}, block_size={}, bandwidth={})".format(
            self.kind, self.dim, self.block_size, self.bandwidth)

    def _band_layout(self):
        # per offset k: rows i with (i, i+k) in the band and the parameter index of that entry
        layout = []
        offsets = self._cols - self._rows
        for k in range(-self.bandwidth, self.bandwidth + 1):
            positions = np.nonzero(offsets == k)[0]
            layout.append((k, self._rows[positions], positions))
        return layout

    def structure(self):
        """
        (rows, cols) of every parameter in the dense matrix, in parameter order
        """
        return self._rows, self._cols

    def param_count(self):
        return count_params(self.kind, self.dim, self.block_size, self.bandwidth)

    def with_params(self, params):
        params = np.array(params, dtype=np.float64).ravel()
        if params.size != self.params.size:
            raise ShapeMismatchException(
                "{} takes {} parameters, got {}".format(self, self.params.size, params.size))
        if not np.all(np.isfinite(params)):
            raise DomainException("scaling parameters must be finite")
        params.setflags(write=False)
        clone = copy.copy(self)
        clone.params = params
        return clone

    def _check_operand(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim not in (1, 2) or x.shape[0] != self.dim:
            raise ShapeMismatchException(
                "{} expects operands with leading dimension {}, got shape {}".format(
                    self, self.dim, x.shape))
        return x

    def matvec(self, x):
        """
        W_s @ x for a vector of shape (n,) or a matrix of columns (n, k)
        """
        x = self._check_operand(x)
        if self.kind == DIAGONAL:
            scale = self.params if x.ndim == 1 else self.params[:, None]
            return scale * x
        if self.kind == BLOCK_DIAGONAL:
            b = self.block_size
            blocks = self.params.reshape(-1, b, b)
            stacked = x.reshape(-1, b, 1) if x.ndim == 1 else x.reshape(-1, b, x.shape[1])
            return (blocks @ stacked).reshape(x.shape)
        if self.kind == BANDED:
            result = np.zeros_like(x)
            for k, rows, positions in self._band:
                values = self.params[positions]
                if x.ndim == 2:
                    values = values[:, None]
                result[rows] += values * x[rows + k]
            return result
        return self.params.reshape(self.dim, self.dim) @ x

    def param_vjp(self, a, b):
        """
        Gradient of sum_j a[:, j] . (W_s b[:, j]) with respect to ``params``
        """
        a = self._check_operand(a)
        b = self._check_operand(b)
        if a.shape != b.shape:
            raise ShapeMismatchException(
                "param_vjp operands differ in shape: {} vs {}".format(a.shape, b.shape))
        if a.ndim == 1:
            a = a[:, None]
            b = b[:, None]
        if self.kind == DIAGONAL:
            return np.sum(a * b, axis=1)
        if self.kind == BLOCK_DIAGONAL:
            s = self.block_size
            blocks_a = a.reshape(-1, s, a.shape[1])
            blocks_b = b.reshape(-1, s, b.shape[1])
            return (blocks_a @ np.swapaxes(blocks_b, 1, 2)).ravel()
        if self.kind == DENSE:
            return (a @ b.T).ravel()
        return np.sum(a[self._rows] * b[self._cols], axis=1)

    def to_dense(self):
        """
        Dense n x n expansion with exact structural zeros
        """
        n = self.dim
        if self.kind == DIAGONAL:
            return np.diag(self.params)
        if self.kind == BLOCK_DIAGONAL:
            b = self.block_size
            blocks = list(self.params.reshape(-1, b, b))
            return sps.block_diag(blocks, format="coo").toarray()
        if self.kind == BANDED:
            return sps.coo_matrix((self.params, (self._rows, self._cols)), shape=(n, n)).toarray()
        return self.params.reshape(n, n).copy()

    def to_tensor(self):
        header = [KIND_CODES[self.kind], self.dim, self.block_size or 0, self.bandwidth or 0]
        return np.concatenate([np.array(header, dtype=np.float64), self.params])

    @classmethod
    def from_tensor(cls, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.size < TENSOR_HEADER_SIZE:
            raise ShapeMismatchException("scaling tensor is shorter than its header")
        code, dim, block_size, bandwidth = [int(v) for v in values[:TENSOR_HEADER_SIZE]]
        kinds_by_code = {v: k for k, v in KIND_CODES.items()}
        if code not in kinds_by_code:
            raise InvalidConfigException("unknown scaling kind code {}".format(code))
        return cls(kinds_by_code[code], dim, values[TENSOR_HEADER_SIZE:],
                   block_size=block_size, bandwidth=bandwidth)


def uniform(kind, dim, s, block_size=None, bandwidth=None):
    """
    s * identity in the requested structure
    """
    kind = resolve_kind(kind)
    _validate_structure(kind, dim, block_size, bandwidth)
    rows, cols = _structure_indices(kind, dim, block_size, bandwidth)
    params = np.where(rows == cols, float(s), 0.0)
    return ScalingOperator(kind, dim, params, block_size=block_size, bandwidth=bandwidth)


def init_identity(kind, dim, block_size=None, bandwidth=None):
    return uniform(kind, dim, 1.0, block_size=block_size, bandwidth=bandwidth)
