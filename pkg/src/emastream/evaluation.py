"""Cluster purity, memory accounting and weight profiles."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import asdict, dataclass
from typing import Mapping, Optional

import numpy as np

from .params import Params


@dataclass
class MetricsRow:
    window_index: int
    engine: str
    purity_core_only: Optional[float]
    purity_all: Optional[float]
    num_core: int
    num_outlier: int
    num_final_clusters: int
    window_wall_time_s: float = 0.0
    inclusive_wall_time_s: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def purity(assignments: Mapping[object, object]) -> Optional[float]:
    """Mean dominant-label fraction over the non-empty clusters.

    ``assignments`` maps a cluster id to its labels, either as an iterable or
    as a :class:`collections.Counter`. Returns ``None`` when every cluster is
    empty.
    """
    total = 0.0
    k = 0
    for labels in assignments.values():
        counts = labels if isinstance(labels, Counter) else Counter(labels)
        n = sum(counts.values())
        if n == 0:
            continue
        total += max(counts.values()) / n
        k += 1
    if k == 0:
        return None
    return total / k


class PurityTracker:
    """Label credits per summary id over the last ``horizon`` windows."""

    def __init__(self, horizon: int):
        self.windows: deque[dict[int, Counter]] = deque(maxlen=horizon)
        self.current: dict[int, Counter] = {}

    def credit(self, tuple_id: int, label) -> None:
        self.current.setdefault(tuple_id, Counter())[label] += 1

    def close_window(self) -> None:
        self.windows.append(self.current)
        self.current = {}

    def assignments(self, ids=None) -> dict[int, Counter]:
        merged: dict[int, Counter] = {}
        for win in self.windows:
            for tid, c in win.items():
                if ids is None or tid in ids:
                    merged.setdefault(tid, Counter()).update(c)
        return merged


def weight_profiles(params: Params) -> tuple[np.ndarray, np.ndarray]:
    """Per-point weights of the last ``N`` points, oldest first.

    EA: ``alpha * (1 - alpha)**age``. CF: ``2**(-lam * age / N) / W`` with
    ``W`` the sum of the fading weights, so the CF profile sums to one.
    """
    n = params.n_window
    age = np.arange(n - 1, -1, -1, dtype=np.float64)
    a = params.alpha
    ea = a * (1.0 - a) ** age
    f = np.exp2(-params.lam * age / n)
    return ea, f / f.sum()


def memory_metric(state) -> tuple[int, int, int]:
    """``(num_core, num_outlier, resident_values)`` for an engine state."""
    return len(state.cores), len(state.outliers), state.resident_values()
