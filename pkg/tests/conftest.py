import numpy as np
import pytest

from emastream.kdd import CONTINUOUS_INDEX, N_ATTRIBUTES
from emastream.params import Params


@pytest.fixture
def params():
    return Params()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def kdd_line(cont, label, protocol="tcp", service="http", flag="SF"):
    """Format one KDD-99 style line from the 34 continuous values."""
    attrs = ["0"] * N_ATTRIBUTES
    attrs[1], attrs[2], attrs[3] = protocol, service, flag
    for i, v in zip(CONTINUOUS_INDEX, cont):
        attrs[i] = repr(float(v))
    return ",".join(attrs + [label])


def synthetic_kdd(path, n_normal_prefix, segments, seed=0):
    """Write a KDD-format file.

    ``segments`` is a list of ``(label, count, kind)`` with ``kind`` either
    ``"noise"`` (random continuous values) or ``"burst"`` (one repeated
    record, as in a flood attack).
    """
    rng = np.random.default_rng(seed)
    d = len(CONTINUOUS_INDEX)
    lines = []
    for _ in range(n_normal_prefix):
        lines.append(kdd_line(rng.random(d) * 100, "normal."))
    for label, count, kind in segments:
        if kind == "burst":
            rec = np.zeros(d)
            rec[1] = 1032.0
            rec[20] = 511.0
            for _ in range(count):
                lines.append(kdd_line(rec, label, protocol="icmp", service="ecr_i"))
        else:
            for _ in range(count):
                lines.append(kdd_line(rng.random(d) * 100, label))
    path.write_text("\n".join(lines) + "\n")
    return path
