"""On-demand final clustering over the current core summaries."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .params import Params
from .summary import preference_vector


@dataclass
class FinalClustering:
    clusters: list[set[int]] = field(default_factory=list)
    query_seq: int = 0

    def __len__(self):
        return len(self.clusters)


def center_distances(cores, params: Params) -> np.ndarray:
    """Symmetrised projected distance between every pair of core centers."""
    C = np.array([t.center for t in cores], dtype=np.float64)
    W = np.array([preference_vector(t, params) for t in cores]) / params.rho
    diff2 = (C[:, None, :] - C[None, :, :]) ** 2
    directed = np.einsum("aj,abj->ab", W, diff2)
    return np.sqrt(np.maximum(directed, directed.T))


def final_clusters(cores, params: Params, query_seq: int = 0) -> FinalClustering:
    """Connected components of the graph linking cores whose centers are within eps."""
    cores = list(cores)
    if not cores:
        return FinalClustering([], query_seq)
    adj = center_distances(cores, params) <= params.eps
    _, labels = connected_components(csr_matrix(adj), directed=False)
    groups: dict[int, set[int]] = {}
    for t, lab in zip(cores, labels):
        groups.setdefault(int(lab), set()).add(t.id)
    clusters = sorted(groups.values(), key=min)
    return FinalClustering(clusters, query_seq)
