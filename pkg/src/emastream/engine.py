"""Online maintenance of core and outlier micro-clusters.

Each arriving point is offered to the core list first, then to the outlier
list, and otherwise seeds a new outlier. Every summary that does not receive
the point is degraded once. At window boundaries (every ``N`` points) summaries
are moved between the two lists by weight and stale outliers are dropped.

Summaries live in array-backed stores so that the per-point scan runs through
the kernels in :mod:`emastream._kernels`. The same engine drives both the EA
summary and the fading-sum (CF) baseline.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .params import DimensionError, Params
from .summary import (
    CFTuple,
    EATuple,
    MCClass,
    Point,
    _variance,
    check_point,
    classify_mc,
    fade,
)

KINDS = ("EA", "CF")


class Target(enum.Enum):
    CORE = "core"
    OUTLIER = "outlier"
    NEW_OUTLIER = "new_outlier"


@dataclass(frozen=True)
class MergeOutcome:
    target: Target
    tuple_id: int
    distance: float


class _Store:
    """Growable struct-of-arrays holding one list of summaries."""

    def __init__(self, d: int, params: Params, kernels):
        self.d = d
        self.params = params
        self.k = kernels
        self.m = 0
        self._alloc(8)

    def _alloc(self, cap):
        self.ids = np.zeros(cap, dtype=np.int64)
        self.created = np.zeros(cap, dtype=np.int64)
        self.last = np.zeros(cap, dtype=np.int64)
        self.w_ = np.zeros(cap)

    def _arrays(self):
        return ["ids", "created", "last", "w_"]

    def _reserve(self):
        cap = self.ids.shape[0]
        if self.m < cap:
            return
        for name in self._arrays():
            old = getattr(self, name)
            new = np.zeros((2 * cap,) + old.shape[1:], dtype=old.dtype)
            new[: self.m] = old[: self.m]
            setattr(self, name, new)

    def __len__(self):
        return self.m

    def __iter__(self):
        return iter(self.tuples())

    @property
    def w(self):
        return self.w_[: self.m]

    def id_list(self) -> list[int]:
        return self.ids[: self.m].tolist()

    def index_of(self, tuple_id: int) -> int:
        hits = np.nonzero(self.ids[: self.m] == tuple_id)[0]
        if hits.size == 0:
            raise KeyError(tuple_id)
        return int(hits[0])

    def tuples(self):
        return [self.get(i) for i in range(self.m)]

    def remove(self, mask: np.ndarray) -> list:
        """Drop rows where ``mask`` is true and return them as summaries."""
        mask = np.asarray(mask, dtype=bool)
        gone = [self.get(i) for i in np.nonzero(mask)[0]]
        keep = np.nonzero(~mask)[0]
        n = keep.size
        for name in self._arrays():
            arr = getattr(self, name)
            arr[:n] = arr[keep]
        self.m = n
        return gone

    def append_point(self, x: np.ndarray, seq: int, tuple_id: int) -> None:
        raise NotImplementedError

    def resident_values(self) -> int:
        raise NotImplementedError


class EAStore(_Store):
    kind = "EA"

    def _alloc(self, cap):
        super()._alloc(cap)
        self.ea1_ = np.zeros((cap, self.d))
        self.ea2_ = np.zeros((cap, self.d))

    def _arrays(self):
        return super()._arrays() + ["ea1_", "ea2_"]

    @property
    def mean(self):
        return self.ea1_[: self.m]

    @property
    def meansq(self):
        return self.ea2_[: self.m]

    def hypothetical(self, x, seq):
        m1, m2 = self.k.ea_hypothetical(x, self.mean, self.meansq, self.params.alpha)
        return m1, m2, self.w + 1.0, (m1, m2)

    def commit(self, i, x, seq, hyp):
        m1, m2 = hyp[3]
        self.ea1_[i] = m1[i]
        self.ea2_[i] = m2[i]
        self.w_[i] += 1.0
        self.last[i] = seq

    def degrade(self, skip=-1):
        if self.m:
            self.k.degrade_ea(self.mean, self.meansq, self.w, skip,
                              1.0 - self.params.alpha, self.params.decay_weight)

    def append_point(self, x, seq, tuple_id):
        self.append(EATuple(x.copy(), x * x, 1.0, seq, seq, tuple_id))

    def append(self, t: EATuple):
        self._reserve()
        i = self.m
        self.ea1_[i] = t.ea1
        self.ea2_[i] = t.ea2
        self.w_[i] = t.w
        self.ids[i] = t.id
        self.created[i] = t.created_seq
        self.last[i] = t.last_update_seq
        self.m += 1

    def get(self, i) -> EATuple:
        return EATuple(self.ea1_[i].copy(), self.ea2_[i].copy(), float(self.w_[i]),
                       int(self.created[i]), int(self.last[i]), int(self.ids[i]))

    def resident_values(self):
        return self.m * (2 * self.d + 1)


class CFStore(_Store):
    kind = "CF"

    def _alloc(self, cap):
        super()._alloc(cap)
        n = self.params.n_window
        self.cf1_ = np.zeros((cap, self.d))
        self.cf2_ = np.zeros((cap, self.d))
        self.now_ = np.zeros(cap, dtype=np.int64)
        self.buf_ = np.zeros((cap, n, self.d))
        self.times_ = np.zeros((cap, n), dtype=np.int64)
        self.head_ = np.zeros(cap, dtype=np.int64)
        self.count_ = np.zeros(cap, dtype=np.int64)

    def _arrays(self):
        return super()._arrays() + ["cf1_", "cf2_", "now_", "buf_", "times_", "head_", "count_"]

    @property
    def mean(self):
        return self.cf1_[: self.m] / self.w[:, None]

    @property
    def meansq(self):
        return self.cf2_[: self.m] / self.w[:, None]

    def hypothetical(self, x, seq):
        m = self.m
        p = self.params
        c1, c2, wn = self.k.cf_hypothetical(
            x, seq, self.cf1_[:m], self.cf2_[:m], self.w, self.now_[:m], self.buf_[:m],
            self.times_[:m], self.head_[:m], self.count_[:m], p.lam, p.n_window)
        return c1 / wn[:, None], c2 / wn[:, None], wn, (c1, c2, wn)

    def commit(self, i, x, seq, hyp):
        c1, c2, wn = hyp[3]
        n = self.params.n_window
        self.cf1_[i] = c1[i]
        self.cf2_[i] = c2[i]
        self.w_[i] = wn[i]
        if self.count_[i] == n:
            slot = self.head_[i]
            self.head_[i] = (slot + 1) % n
        else:
            slot = self.count_[i]
            self.count_[i] += 1
        self.buf_[i, slot] = x
        self.times_[i, slot] = seq
        self.now_[i] = seq
        self.last[i] = seq

    def degrade(self, skip=-1):
        if self.m:
            m = self.m
            s = float(fade(1, self.params))
            self.k.degrade_cf(self.cf1_[:m], self.cf2_[:m], self.w, self.now_[:m], skip, s)

    def append_point(self, x, seq, tuple_id):
        t = CFTuple.empty(self.d, self.params.n_window, seq=seq, id=tuple_id)
        t.cf1, t.cf2, t.w = x.copy(), x * x, 1.0
        t.buf[0] = x
        t.times[0] = seq
        t.count = 1
        self.append(t)

    def append(self, t: CFTuple):
        self._reserve()
        i = self.m
        self.cf1_[i] = t.cf1
        self.cf2_[i] = t.cf2
        self.w_[i] = t.w
        self.now_[i] = t.now
        self.buf_[i] = t.buf
        self.times_[i] = t.times
        self.head_[i] = t.head
        self.count_[i] = t.count
        self.ids[i] = t.id
        self.created[i] = t.created_seq
        self.last[i] = t.last_update_seq
        self.m += 1

    def get(self, i) -> CFTuple:
        return CFTuple(self.cf1_[i].copy(), self.cf2_[i].copy(), float(self.w_[i]),
                       self.buf_[i].copy(), self.times_[i].copy(), int(self.head_[i]),
                       int(self.count_[i]), int(self.now_[i]), int(self.created[i]),
                       int(self.last[i]), int(self.ids[i]))

    def resident_values(self):
        return self.m * (2 * self.d + 1 + self.params.n_window * self.d)


class EngineState:
    """Core and outlier lists plus stream counters.

    ``clock`` is the arrival index assigned to the next point; it starts at
    ``seq_start`` (normally the number of initialisation points).
    """

    def __init__(self, d: int, params: Params, kind: str = "EA", backend: str | None = None,
                 seq_start: int = 0):
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        params.check_dim(d)
        self.d = d
        self.params = params
        self.kind = kind
        self.kernels = _kernels.backend(backend)
        store = EAStore if kind == "EA" else CFStore
        self.cores = store(d, params, self.kernels)
        self.outliers = store(d, params, self.kernels)
        self.window_index = 0
        self.points_seen = 0
        self.clock = seq_start
        self._next_id = 0

    def new_id(self) -> int:
        tid = self._next_id
        self._next_id += 1
        return tid

    def seed_cores(self, tuples) -> None:
        """Install initial core summaries of this engine's kind."""
        cls = EATuple if self.kind == "EA" else CFTuple
        for t in tuples:
            if not isinstance(t, cls):
                raise TypeError(f"{self.kind} engine cannot hold {type(t).__name__}")
            if self.kind == "CF":
                t = _align_cf(t, self.clock - 1, self.params)
            self.cores.append(t)
            self._next_id = max(self._next_id, t.id + 1)

    def core_ids(self) -> list[int]:
        return self.cores.id_list()

    def outlier_ids(self) -> list[int]:
        return self.outliers.id_list()

    def resident_values(self) -> int:
        return self.cores.resident_values() + self.outliers.resident_values()


def _align_cf(t: CFTuple, seq: int, params: Params) -> CFTuple:
    """Fade a CF summary forward so that its clock reads ``seq``."""
    if seq <= t.now:
        return t
    s = float(fade(seq - t.now, params))
    t.cf1, t.cf2, t.w, t.now = s * t.cf1, s * t.cf2, s * t.w, seq
    return t


def _merge(store: _Store, x: np.ndarray, seq: int, params: Params, gate: bool):
    """Offer ``x`` to the closest eligible summary of ``store``.

    Returns ``(row, distance)`` on success and ``None`` on rejection. Either
    way every summary that did not absorb the point is degraded once.
    """
    if store.m == 0:
        return None
    mean, meansq = store.mean, store.meansq
    hyp = store.hypothetical(x, seq)
    mean_new, meansq_new, w_new = hyp[0], hyp[1], hyp[2]
    best, d2 = store.k.select(
        x, mean, meansq, mean_new, meansq_new, w_new, store.ids[: store.m],
        params.xi, params.rho, params.eta, params.pi_dim, params.n_window,
        params.burst_fraction, gate)
    if best >= 0:
        var = _variance(mean_new[best], meansq_new[best])
        psi = np.where(var < params.xi, params.rho, 1.0)
        radius = math.sqrt(float(np.sum(psi / params.rho * var)))
        if radius < params.eps:
            store.commit(best, x, seq, hyp)
            store.degrade(skip=best)
            return best, math.sqrt(d2)
    store.degrade()
    return None


def _values(p, d):
    x = p.values if isinstance(p, Point) else np.asarray(p, dtype=np.float64)
    if x.shape != (d,):
        raise DimensionError(f"expected a {d}-vector, got shape {x.shape}")
    check_point(x, d)
    return x


def add_to_core(p, state: EngineState):
    """Try to merge ``p`` into the closest eligible core summary.

    Eligibility is judged on the tentatively updated summary: its projected
    dimensionality must stay at most ``pi_dim`` unless the burst clause holds.
    """
    ok = _merge(state.cores, _values(p, state.d), state.clock, state.params, gate=True)
    return ok is not None, state


def add_to_outlier(p, state: EngineState):
    ok = _merge(state.outliers, _values(p, state.d), state.clock, state.params, gate=False)
    return ok is not None, state


def create_outlier_mc(p, state: EngineState) -> EngineState:
    state.outliers.append_point(_values(p, state.d), state.clock, state.new_id())
    return state


def process_point(p, state: EngineState) -> tuple[MergeOutcome, EngineState]:
    """Route one point through the core list, the outlier list, or a new outlier."""
    x = _values(p, state.d)
    seq = state.clock
    params = state.params
    hit = _merge(state.cores, x, seq, params, gate=True)
    if hit is not None:
        state.outliers.degrade()
        row, dist = hit
        outcome = MergeOutcome(Target.CORE, int(state.cores.ids[row]), dist)
    else:
        hit = _merge(state.outliers, x, seq, params, gate=False)
        if hit is not None:
            row, dist = hit
            outcome = MergeOutcome(Target.OUTLIER, int(state.outliers.ids[row]), dist)
        else:
            tid = state.new_id()
            state.outliers.append_point(x, seq, tid)
            outcome = MergeOutcome(Target.NEW_OUTLIER, tid, 0.0)
    state.points_seen += 1
    state.clock += 1
    return outcome, state


def window_rebalance(state: EngineState) -> EngineState:
    """Move summaries between lists by weight and drop stale outliers."""
    params = state.params
    bm = params.beta_mu
    demoted = state.cores.remove(state.cores.w < bm)

    outs = state.outliers
    promote = np.zeros(outs.m, dtype=bool)
    for i in np.nonzero(outs.w > bm)[0]:
        promote[i] = classify_mc(outs.get(i), params) is MCClass.CORE
    promoted = outs.remove(promote)

    for t in promoted:
        state.cores.append(t)
    for t in demoted:
        outs.append(t)

    now = state.clock - 1
    outs.remove(now - outs.last[: outs.m] >= params.n_window)
    state.window_index += 1
    return state
