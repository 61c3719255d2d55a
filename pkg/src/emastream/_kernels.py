"""Hot numeric kernels.

Every kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version. The numba versions are used when numba imports and
``EMASTREAM_DISABLE_NUMBA`` is unset (or ``0``); set it to ``1`` to force the
numpy path. Both paths are importable through :func:`backend` so tests and the
benchmark can compare them directly.
"""

import math
import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None


# ---------------------------------------------------------------- numpy path

def np_ea_hypothetical(p, ea1, ea2, alpha):
    return alpha * p + (1.0 - alpha) * ea1, alpha * (p * p) + (1.0 - alpha) * ea2


def np_cf_hypothetical(p, seq, cf1, cf2, w, now, buf, times, head, count, lam, n_window):
    m = cf1.shape[0]
    s = np.exp2(-lam * (seq - now).astype(np.float64) / n_window)
    cf1n = s[:, None] * cf1 + p
    cf2n = s[:, None] * cf2 + p * p
    wn = s * w + 1.0
    full = np.nonzero(count == n_window)[0]
    if full.size:
        rows = np.arange(m)[full]
        old = buf[rows, head[full]]
        wo = np.exp2(-lam * (seq - times[rows, head[full]]).astype(np.float64) / n_window)
        cf1n[full] -= wo[:, None] * old
        cf2n[full] -= wo[:, None] * (old * old)
        wn[full] -= wo
    return cf1n, cf2n, wn


def np_select(p, mean, meansq, mean_new, meansq_new, w_new, ids,
              xi, rho, eta, pi_dim, n_window, burst_fraction, gate):
    """Index of the closest eligible summary and its squared projected distance.

    Returns ``(-1, inf)`` when nothing is eligible. Ties go to the lowest id.
    """
    m = mean.shape[0]
    if m == 0:
        return -1, math.inf
    ok = np.ones(m, dtype=bool)
    if gate:
        var_new = meansq_new - mean_new * mean_new
        pd = np.count_nonzero(var_new < xi, axis=1)
        ok = (pd <= pi_dim) | (w_new / n_window > burst_fraction)
        if not ok.any():
            return -1, math.inf
    var = meansq - mean * mean
    psi = np.where(var < xi, rho, 1.0)
    diff = p - mean
    d2 = np.sum(psi / eta * diff * diff, axis=1)
    d2 = np.where(ok, d2, np.inf)
    best_d = d2.min()
    cand = np.nonzero(d2 == best_d)[0]
    best = cand[np.argmin(ids[cand])]
    return int(best), float(best_d)


def np_degrade_ea(ea1, ea2, w, skip, keep, decay_w):
    mask = np.ones(ea1.shape[0], dtype=bool)
    if skip >= 0:
        mask[skip] = False
    ea1[mask] *= keep
    ea2[mask] *= keep
    if decay_w:
        w[mask] *= keep


def np_degrade_cf(cf1, cf2, w, now, skip, s):
    mask = np.ones(cf1.shape[0], dtype=bool)
    if skip >= 0:
        mask[skip] = False
    cf1[mask] *= s
    cf2[mask] *= s
    w[mask] *= s
    now[mask] += 1


def np_pairwise_sq(X, wts):
    """``D[a, b] = sum_j wts[a, j] * (X[a, j] - X[b, j])**2``."""
    n = X.shape[0]
    out = np.empty((n, n))
    step = 64
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        diff = X[lo:hi, None, :] - X[None, :, :]
        out[lo:hi] = np.einsum("aj,abj->ab", wts[lo:hi], diff * diff)
    return out


# ---------------------------------------------------------------- loop path

def lp_ea_hypothetical(p, ea1, ea2, alpha):
    m, d = ea1.shape
    m1 = np.empty((m, d))
    m2 = np.empty((m, d))
    for i in range(m):
        for j in range(d):
            m1[i, j] = alpha * p[j] + (1.0 - alpha) * ea1[i, j]
            m2[i, j] = alpha * (p[j] * p[j]) + (1.0 - alpha) * ea2[i, j]
    return m1, m2


def lp_cf_hypothetical(p, seq, cf1, cf2, w, now, buf, times, head, count, lam, n_window):
    m, d = cf1.shape
    cf1n = np.empty((m, d))
    cf2n = np.empty((m, d))
    wn = np.empty(m)
    for i in range(m):
        s = 2.0 ** (-lam * (seq - now[i]) / n_window)
        for j in range(d):
            cf1n[i, j] = s * cf1[i, j] + p[j]
            cf2n[i, j] = s * cf2[i, j] + p[j] * p[j]
        wn[i] = s * w[i] + 1.0
        if count[i] == n_window:
            h = head[i]
            wo = 2.0 ** (-lam * (seq - times[i, h]) / n_window)
            for j in range(d):
                o = buf[i, h, j]
                cf1n[i, j] -= wo * o
                cf2n[i, j] -= wo * (o * o)
            wn[i] -= wo
    return cf1n, cf2n, wn


def lp_select(p, mean, meansq, mean_new, meansq_new, w_new, ids,
              xi, rho, eta, pi_dim, n_window, burst_fraction, gate):
    m, d = mean.shape
    best = -1
    best_d = math.inf
    for i in range(m):
        if gate:
            pd = 0
            for j in range(d):
                if meansq_new[i, j] - mean_new[i, j] * mean_new[i, j] < xi:
                    pd += 1
            if pd > pi_dim and not (w_new[i] / n_window > burst_fraction):
                continue
        s = 0.0
        for j in range(d):
            v = meansq[i, j] - mean[i, j] * mean[i, j]
            psi = rho if v < xi else 1.0
            diff = p[j] - mean[i, j]
            s += psi / eta * diff * diff
        if s < best_d or (s == best_d and best >= 0 and ids[i] < ids[best]):
            best = i
            best_d = s
    return best, best_d


def lp_degrade_ea(ea1, ea2, w, skip, keep, decay_w):
    m, d = ea1.shape
    for i in range(m):
        if i == skip:
            continue
        for j in range(d):
            ea1[i, j] *= keep
            ea2[i, j] *= keep
        if decay_w:
            w[i] *= keep


def lp_degrade_cf(cf1, cf2, w, now, skip, s):
    m, d = cf1.shape
    for i in range(m):
        if i == skip:
            continue
        for j in range(d):
            cf1[i, j] *= s
            cf2[i, j] *= s
        w[i] *= s
        now[i] += 1


def lp_pairwise_sq(X, wts):
    n, d = X.shape
    out = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            s = 0.0
            for j in range(d):
                diff = X[a, j] - X[b, j]
                s += wts[a, j] * diff * diff
            out[a, b] = s
    return out


_NAMES = ("ea_hypothetical", "cf_hypothetical", "select", "degrade_ea", "degrade_cf", "pairwise_sq")

NUMPY = SimpleNamespace(name="numpy", **{n: globals()["np_" + n] for n in _NAMES})

if numba is not None:
    NUMBA = SimpleNamespace(
        name="numba",
        **{n: numba.njit(cache=True, nogil=True)(globals()["lp_" + n]) for n in _NAMES},
    )
else:  # pragma: no cover
    NUMBA = None


def numba_disabled() -> bool:
    return os.environ.get("EMASTREAM_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


def backend(name: str | None = None) -> SimpleNamespace:
    """Kernel namespace by name; ``None`` picks the environment default."""
    if name is None:
        name = "numpy" if numba_disabled() or NUMBA is None else "numba"
    if name == "numba":
        if NUMBA is None:
            raise RuntimeError("numba is not installed")
        return NUMBA
    if name == "numpy":
        return NUMPY
    raise ValueError(f"unknown kernel backend {name!r}")


def warmup(k: SimpleNamespace) -> None:
    """Trigger JIT compilation outside of any timed region."""
    p = np.zeros(2)
    a = np.zeros((1, 2))
    ids = np.zeros(1, dtype=np.int64)
    k.ea_hypothetical(p, a, a.copy(), 0.5)
    k.cf_hypothetical(p, 1, a, a.copy(), np.ones(1), np.zeros(1, dtype=np.int64),
                      np.zeros((1, 2, 2)), np.zeros((1, 2), dtype=np.int64),
                      np.zeros(1, dtype=np.int64), np.full(1, 2, dtype=np.int64), 0.1, 2)
    k.select(p, a, a, a, a, np.ones(1), ids, 0.1, 10.0, 10.0, 1, 2, 0.9, True)
    k.degrade_ea(a.copy(), a.copy(), np.ones(1), -1, 0.5, True)
    k.degrade_cf(a.copy(), a.copy(), np.ones(1), np.zeros(1, dtype=np.int64), -1, 0.5)
    k.pairwise_sq(a, a)
