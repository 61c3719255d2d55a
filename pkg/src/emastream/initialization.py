"""Initial core micro-clusters from a buffered prefix of the stream.

A density-based projected clustering pass over the buffer:

* ``N_eps(p)`` is the full-dimensional Euclidean eps-neighbourhood.
* A point's preference vector marks the dimensions whose variance over
  ``N_eps(p)`` is below ``xi``.
* ``N_eps^psi(p)`` uses the max-symmetrised preference-weighted distance.
* A point is core when its neighbourhood's projected dimensionality is at most
  ``pi_dim`` and its projected neighbourhood holds at least ``mu`` points.

Clusters grow from core points in ascending index order; each finished cluster
is folded into a single summary.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .params import DimensionError, Params
from .summary import CFTuple, EATuple, Point, cf_update, update_tuple


def _as_matrix(buffer) -> np.ndarray:
    if isinstance(buffer, np.ndarray):
        X = np.asarray(buffer, dtype=np.float64)
    else:
        X = np.array([p.values if isinstance(p, Point) else p for p in buffer], dtype=np.float64)
    if X.ndim != 2:
        if X.size == 0:
            return X.reshape(0, 0)
        raise DimensionError("buffer must be a sequence of equal-length vectors")
    return np.ascontiguousarray(X)


def _directed(a: np.ndarray, b: np.ndarray, psi_a: np.ndarray, rho: float) -> float:
    diff = a - b
    return float(np.sqrt(np.sum(psi_a / rho * diff * diff)))


def point_projected_distance(p, q, psi_p, psi_q, params: Params) -> float:
    """``max(dist_p(p, q), dist_p(q, p))`` with each side weighted by its own preferences."""
    a = p.values if isinstance(p, Point) else np.asarray(p, dtype=np.float64)
    b = q.values if isinstance(q, Point) else np.asarray(q, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return max(_directed(a, b, np.asarray(psi_p), params.rho),
               _directed(b, a, np.asarray(psi_q), params.rho))


@dataclass
class Neighborhoods:
    """All per-point quantities of one buffer, computed once."""

    X: np.ndarray
    full: np.ndarray  # bool (n, n), Euclidean distance <= eps
    psi: np.ndarray  # (n, d)
    pdim: np.ndarray  # (n,)
    projected: np.ndarray  # bool (n, n), symmetrised projected distance <= eps
    core: np.ndarray  # bool (n,)


def neighborhoods(buffer, params: Params, kernels=None) -> Neighborhoods:
    k = kernels or _kernels.backend()
    X = _as_matrix(buffer)
    n, d = X.shape
    eps = params.eps
    full = np.sqrt(k.pairwise_sq(X, np.ones_like(X))) <= eps

    cnt = full.sum(axis=1).astype(np.float64)
    F = full.astype(np.float64)
    mean = (F @ X) / cnt[:, None]
    var = (F @ (X * X)) / cnt[:, None] - mean * mean
    pref = var < params.xi
    psi = np.where(pref, params.rho, 1.0)
    pdim = pref.sum(axis=1)

    P = k.pairwise_sq(X, psi / params.rho)
    projected = np.sqrt(np.maximum(P, P.T)) <= eps
    core = (pdim <= params.pi_dim) & (projected.sum(axis=1) >= params.mu)
    return Neighborhoods(X, full, psi, pdim, projected, core)


def point_preference_vector(idx: int, buffer, params: Params) -> np.ndarray:
    """Preference vector of one buffered point (variance over its ``N_eps``)."""
    X = _as_matrix(buffer)
    diff = X - X[idx]
    members = X[np.sqrt(np.sum(diff * diff, axis=1)) <= params.eps]
    var = members.var(axis=0)
    return np.where(var < params.xi, params.rho, 1.0)


def is_core_point(idx: int, buffer, params: Params) -> bool:
    X = _as_matrix(buffer)
    psi = np.array([point_preference_vector(i, X, params) for i in range(len(X))])
    if np.count_nonzero(psi[idx] == params.rho) > params.pi_dim:
        return False
    count = sum(
        point_projected_distance(X[idx], X[j], psi[idx], psi[j], params) <= params.eps
        for j in range(len(X))
    )
    return count >= params.mu


def predecon_partition(buffer, params: Params, kernels=None) -> list[list[int]]:
    """Disjoint clusters of buffer indices; unclaimed points are left out."""
    X = _as_matrix(buffer)
    if X.shape[0] == 0:
        return []
    nb = neighborhoods(X, params, kernels)
    n = X.shape[0]
    claimed = np.zeros(n, dtype=bool)
    clusters = []
    for o in range(n):
        if not nb.core[o] or claimed[o]:
            continue
        seeds = np.nonzero(nb.full[o] & ~claimed)[0]
        claimed[seeds] = True
        queue = deque(seeds.tolist())
        members = []
        while queue:
            q = queue.popleft()
            members.append(q)
            if nb.core[q]:
                fresh = np.nonzero(nb.projected[q] & ~claimed)[0]
                claimed[fresh] = True
                queue.extend(fresh.tolist())
        clusters.append(sorted(members))
    return clusters


def _points(buffer) -> list[Point]:
    X = _as_matrix(buffer)
    out = []
    for i, row in enumerate(X):
        src = buffer[i] if not isinstance(buffer, np.ndarray) else None
        seq = src.seq if isinstance(src, Point) else i
        out.append(Point(row, seq=seq))
    return out


def fold_ea(points: list[Point], params: Params, id: int | None = None) -> EATuple:
    t = EATuple.from_point(points[0], id=id)
    for p in points[1:]:
        t = update_tuple(t, p, params)
    return t


def fold_cf(points: list[Point], params: Params, id: int | None = None) -> CFTuple:
    t = CFTuple.from_point(points[0], params, id=id)
    for p in points[1:]:
        t = cf_update(t, p, params)
    return t


def build_initial_clusters(buffer, params: Params, kind: str = "EA", kernels=None) -> list:
    """One summary per initial cluster, members folded in index order."""
    pts = _points(buffer)
    fold = fold_ea if kind == "EA" else fold_cf
    return [fold([pts[i] for i in members], params, id=k)
            for k, members in enumerate(predecon_partition(buffer, params, kernels))]
