import os
import subprocess
import sys

import numpy as np
import pytest

from emastream import _kernels
from emastream._kernels import NUMBA, NUMPY, backend

pytestmark = pytest.mark.skipif(NUMBA is None, reason="numba not installed")


def test_backend_selection(monkeypatch):
    monkeypatch.setenv("EMASTREAM_DISABLE_NUMBA", "1")
    assert backend() is NUMPY
    monkeypatch.setenv("EMASTREAM_DISABLE_NUMBA", "0")
    assert backend() is NUMBA
    assert backend("numpy") is NUMPY
    with pytest.raises(ValueError):
        backend("fortran")


def test_env_flag_in_fresh_process():
    code = "from emastream import _kernels; print(_kernels.backend().name)"
    env = dict(os.environ, EMASTREAM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"


def test_ea_hypothetical(rng):
    p, a, b = rng.random(7), rng.random((5, 7)), rng.random((5, 7))
    for x, y in zip(NUMPY.ea_hypothetical(p, a, b, 0.01), NUMBA.ea_hypothetical(p, a, b, 0.01)):
        np.testing.assert_allclose(x, y, rtol=1e-15)


def test_cf_hypothetical(rng):
    m, n, d = 4, 5, 3
    args = (rng.random(d), 40, rng.random((m, d)), rng.random((m, d)), rng.random(m) + 1,
            np.array([39, 30, 38, 35]), rng.random((m, n, d)),
            rng.integers(20, 39, size=(m, n)), np.array([0, 2, 4, 1]), np.array([5, 3, 5, 5]),
            0.2324, n)
    for x, y in zip(NUMPY.cf_hypothetical(*args), NUMBA.cf_hypothetical(*args)):
        np.testing.assert_allclose(x, y, rtol=1e-13)


@pytest.mark.parametrize("gate", [True, False])
def test_select(rng, gate):
    for _ in range(50):
        m, d = int(rng.integers(1, 8)), 6
        mean = rng.random((m, d))
        meansq = mean ** 2 + rng.choice([0.0, 0.001, 0.1], size=(m, d))
        mean_new, meansq_new = NUMPY.ea_hypothetical(rng.random(d), mean, meansq, 0.1)
        w_new = rng.random(m) * 300
        ids = rng.permutation(m).astype(np.int64)
        p = rng.random(d)
        args = (p, mean, meansq, mean_new, meansq_new, w_new, ids, 0.002, 1000.0, 1000.0, 3, 200, 0.9, gate)
        i1, d1 = NUMPY.select(*args)
        i2, d2 = NUMBA.select(*args)
        assert i1 == i2
        assert d1 == pytest.approx(d2, rel=1e-13)


def test_select_tie_lowest_id():
    mean = np.array([[0.0], [1.0], [0.0]])
    meansq = mean ** 2
    ids = np.array([9, 4, 2])
    for k in (NUMPY, NUMBA):
        best, _ = k.select(np.array([0.5]), mean, meansq, mean, meansq, np.full(3, 50.0), ids,
                           0.002, 1000.0, 1000.0, 1, 200, 0.9, True)
        assert best == 2


def test_degrade(rng):
    a1, a2, w = rng.random((4, 3)), rng.random((4, 3)), rng.random(4)
    b1, b2, bw = a1.copy(), a2.copy(), w.copy()
    NUMPY.degrade_ea(a1, a2, w, 2, 0.9, True)
    NUMBA.degrade_ea(b1, b2, bw, 2, 0.9, True)
    np.testing.assert_array_equal(a1, b1)
    np.testing.assert_array_equal(w, bw)
    now_a, now_b = np.zeros(4, np.int64), np.zeros(4, np.int64)
    NUMPY.degrade_cf(a1, a2, w, now_a, -1, 0.5)
    NUMBA.degrade_cf(b1, b2, bw, now_b, -1, 0.5)
    np.testing.assert_array_equal(a2, b2)
    np.testing.assert_array_equal(now_a, [1, 1, 1, 1])
    np.testing.assert_array_equal(now_a, now_b)


def test_pairwise(rng):
    X = rng.random((130, 5))
    W = rng.choice([1.0, 0.001], size=X.shape)
    np.testing.assert_allclose(NUMPY.pairwise_sq(X, W), NUMBA.pairwise_sq(X, W), rtol=1e-12, atol=1e-15)
    assert _kernels.NUMPY.pairwise_sq(X, np.ones_like(X))[3, 3] == 0.0
