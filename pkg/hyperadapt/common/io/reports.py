import csv
import io
import json

import numpy as np

from .tensor_file import write_atomic

HISTOGRAM_HEADER = ["bin_lower", "bin_upper", "count"]


def _default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError("{!r} is not JSON serializable".format(type(value)))


def dumps_report(report):
    return json.dumps(report, indent=2, sort_keys=True, default=_default)


def write_json_report(path, report):
    write_atomic(path, dumps_report(report) + "\n")


def write_histogram_csv(path, histogram):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(HISTOGRAM_HEADER)
    for lower, upper, count in histogram.rows():
        writer.writerow([repr(float(lower)), repr(float(upper)), int(count)])
    write_atomic(path, buffer.getvalue())
