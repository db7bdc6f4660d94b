import io
import operator
import os
import struct
import tempfile
from functools import reduce
from time import time

import numpy as np

from ...domain.exceptions.invalid_tensor_file import InvalidTensorFileException
from ...logging import log

MAGIC = b"HYPT"
VERSION = 1

DTYPE_F32 = 0
DTYPE_F64 = 1

# code -> little-endian numpy dtype
DTYPES = {
    DTYPE_F32: np.dtype("<f4"),
    DTYPE_F64: np.dtype("<f8"),
}

# magic, version, dtype, rank
HEADER_FORMAT = "<4sBBB"
DIM_FORMAT = "<Q"

READ_CHUNK = 1 << 20


def dtype_code(dtype):
    dtype = np.dtype(dtype)
    for code, known in DTYPES.items():
        if dtype.kind == known.kind and dtype.itemsize == known.itemsize:
            return code
    raise InvalidTensorFileException("dtype {} cannot be stored, use float32 or float64".format(dtype))


def encode_tensor(array, dtype=np.float64):
    code = dtype_code(dtype)
    array = np.asarray(array, dtype=DTYPES[code])
    if array.ndim > 255:
        raise InvalidTensorFileException("rank {} does not fit in the header".format(array.ndim))
    header = struct.pack(HEADER_FORMAT, MAGIC, VERSION, code, array.ndim)
    dims = b"".join(struct.pack(DIM_FORMAT, d) for d in array.shape)
    return header + dims + array.tobytes(order="C")


def _readall(stream, n, what):
    # read exactly n bytes or fail on a truncated file
    data = bytearray()
    while len(data) < n:
        packet = stream.read(min(n - len(data), READ_CHUNK))
        if not packet:
            raise InvalidTensorFileException(
                "truncated tensor file: expected {} bytes of {}, got {}".format(n, what, len(data)))
        data.extend(packet)
    return bytes(data)


def _remaining(stream):
    # bytes left in a seekable stream, None when the stream cannot tell
    try:
        here = stream.tell()
        end = stream.seek(0, io.SEEK_END)
        stream.seek(here)
    except (AttributeError, OSError, ValueError):
        return None
    return end - here


def decode_tensor(stream):
    """
    Reads one tensor from a binary stream. The array keeps the stored dtype.
    """
    magic, version, code, rank = struct.unpack(
        HEADER_FORMAT, _readall(stream, struct.calcsize(HEADER_FORMAT), "header"))
    if magic != MAGIC:
        raise InvalidTensorFileException("bad magic {!r}, expected {!r}".format(magic, MAGIC))
    if version != VERSION:
        raise InvalidTensorFileException("unsupported tensor file version {}".format(version))
    if code not in DTYPES:
        raise InvalidTensorFileException("unknown dtype code {}".format(code))

    dim_size = struct.calcsize(DIM_FORMAT)
    raw_dims = _readall(stream, rank * dim_size, "dimensions")
    dims = tuple(struct.unpack(DIM_FORMAT, raw_dims[i * dim_size:(i + 1) * dim_size])[0]
                 for i in range(rank))
    dtype = DTYPES[code]
    count = reduce(operator.mul, dims, 1)
    size = count * dtype.itemsize
    remaining = _remaining(stream)
    if remaining is not None and size > remaining:
        raise InvalidTensorFileException(
            "header declares {} elements of {} bytes but only {} bytes follow".format(
                count, dtype.itemsize, remaining))
    payload = _readall(stream, size, "payload")
    if stream.read(1):
        raise InvalidTensorFileException("trailing bytes after the tensor payload")
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def write_atomic(path, data):
    """
    Writes ``data`` (bytes or str) next to ``path`` and renames it into place
    """
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def write_tensor(path, array, dtype=np.float64):
    log.debug("[LATENCY_MEASURE][INIT][write_tensor]")
    ts = time()
    write_atomic(path, encode_tensor(array, dtype))
    te = time()
    log.debug("[LATENCY_MEASURE][FINISH][write_tensor][ELAPSED={} seconds]".format(te - ts))


def read_tensor(path):
    log.debug("[LATENCY_MEASURE][INIT][read_tensor]")
    ts = time()
    with open(path, "rb") as f:
        array = decode_tensor(f)
    te = time()
    log.debug("[LATENCY_MEASURE][FINISH][read_tensor][ELAPSED={} seconds]".format(te - ts))
    return array


def read_csv_matrix(path):
    """
    Plain CSV import for hand-made fixtures: one matrix row per line
    """
    try:
        array = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as e:
        raise InvalidTensorFileException("could not parse CSV matrix {}: {}".format(path, e))
    return array
