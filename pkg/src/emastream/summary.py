"""Micro-cluster summaries and the per-summary math.

Two summaries are provided:

* :class:`EATuple` keeps exponentially weighted means of the points and of
  their squares plus a weight, ``2d + 1`` numbers in total.
* :class:`CFTuple` is the fading-sum baseline. It keeps weighted sums of the
  points and of their squares and a ring buffer of the last ``N`` absorbed
  points so that the oldest contribution can be evicted exactly.

Everything downstream (variance, preference vector, projected radius and
distance, classification) only needs a center and a mean square, so the
functions below accept either summary.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .params import TAU_VAR, ConsistencyError, DimensionError, NonFiniteError, Params

_ids = itertools.count()


def next_id() -> int:
    """Process-wide unique summary identifier."""
    return next(_ids)


@dataclass
class Point:
    """One observation of the stream."""

    values: np.ndarray
    label: object = None
    seq: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise DimensionError("point values must be a 1-d vector")

    @property
    def d(self) -> int:
        return self.values.shape[0]


def check_point(values: np.ndarray, d: int) -> None:
    if values.shape != (d,):
        raise DimensionError(f"expected a {d}-vector, got shape {values.shape}")
    if not np.isfinite(values).all():
        raise NonFiniteError("point holds non-finite values")


class MCClass(enum.Enum):
    CORE = "core"
    OUTLIER = "outlier"
    NEITHER = "neither"


@dataclass
class EATuple:
    """Exponential-moving-average micro-cluster summary."""

    ea1: np.ndarray
    ea2: np.ndarray
    w: float
    created_seq: int = 0
    last_update_seq: int = 0
    id: int = field(default_factory=next_id)

    @classmethod
    def from_point(cls, p: Point, id: int | None = None) -> "EATuple":
        """Seed a summary with ``p`` as its first and only member."""
        v = p.values
        check_point(v, v.shape[0])
        return cls(
            ea1=v.copy(),
            ea2=v * v,
            w=1.0,
            created_seq=p.seq,
            last_update_seq=p.seq,
            id=next_id() if id is None else id,
        )

    @property
    def d(self) -> int:
        return self.ea1.shape[0]

    @property
    def center(self) -> np.ndarray:
        return self.ea1

    @property
    def mean_square(self) -> np.ndarray:
        return self.ea2

    def resident_values(self) -> int:
        return 2 * self.d + 1


def update_tuple(t: EATuple, p: Point, params: Params) -> EATuple:
    """Absorb ``p`` into ``t`` and return the new summary."""
    check_point(p.values, t.d)
    a = params.alpha
    x = p.values
    return replace(
        t,
        ea1=a * x + (1.0 - a) * t.ea1,
        ea2=a * (x * x) + (1.0 - a) * t.ea2,
        w=t.w + 1.0,
        last_update_seq=p.seq,
    )


def degrade_tuple(t: EATuple, params: Params) -> EATuple:
    """One step of decay for a summary that received no point."""
    keep = 1.0 - params.alpha
    return replace(
        t,
        ea1=keep * t.ea1,
        ea2=keep * t.ea2,
        w=keep * t.w if params.decay_weight else t.w,
    )


@dataclass
class CFTuple:
    """Fading-sum baseline summary with an exact-eviction ring buffer.

    ``now`` is the arrival index the stored sums are expressed at; a buffered
    point that arrived at ``times[k]`` contributes with weight
    ``2 ** (-lam * (now - times[k]) / N)``.
    """

    cf1: np.ndarray
    cf2: np.ndarray
    w: float
    buf: np.ndarray
    times: np.ndarray
    head: int = 0
    count: int = 0
    now: int = 0
    created_seq: int = 0
    last_update_seq: int = 0
    id: int = field(default_factory=next_id)

    @classmethod
    def empty(cls, d: int, n_window: int, seq: int = 0, id: int | None = None) -> "CFTuple":
        return cls(
            cf1=np.zeros(d),
            cf2=np.zeros(d),
            w=0.0,
            buf=np.zeros((n_window, d)),
            times=np.zeros(n_window, dtype=np.int64),
            now=seq,
            created_seq=seq,
            last_update_seq=seq,
            id=next_id() if id is None else id,
        )

    @classmethod
    def from_point(cls, p: Point, params: Params, id: int | None = None) -> "CFTuple":
        t = cls.empty(p.d, params.n_window, seq=p.seq, id=id)
        return cf_update(t, p, params)

    @property
    def d(self) -> int:
        return self.cf1.shape[0]

    @property
    def capacity(self) -> int:
        return self.buf.shape[0]

    @property
    def center(self) -> np.ndarray:
        return self.cf1 / self.w

    @property
    def mean_square(self) -> np.ndarray:
        return self.cf2 / self.w

    def window_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Buffered points and arrival indices, oldest first."""
        # head only moves once the buffer is full; until then slots fill 0..count-1
        order = (self.head + np.arange(self.count)) % self.capacity
        return self.buf[order], self.times[order]

    def resident_values(self) -> int:
        return 2 * self.d + 1 + self.capacity * self.d


def fade(steps, params: Params):
    """Fading weight ``2 ** (-lam * steps / N)``."""
    return np.exp2(-params.lam * np.asarray(steps, dtype=np.float64) / params.n_window)


def cf_update(t: CFTuple, p: Point, params: Params) -> CFTuple:
    """Fade ``t`` forward to ``p.seq``, evict the oldest point if full, add ``p``."""
    check_point(p.values, t.d)
    if p.seq < t.now:
        raise ValueError(f"arrival index {p.seq} precedes summary clock {t.now}")
    x = p.values
    s = float(fade(p.seq - t.now, params))
    cf1 = s * t.cf1
    cf2 = s * t.cf2
    w = s * t.w
    buf = t.buf.copy()
    times = t.times.copy()
    n = t.capacity
    count = t.count
    if count == n:
        old = buf[t.head]
        wo = float(fade(p.seq - times[t.head], params))
        cf1 = cf1 - wo * old
        cf2 = cf2 - wo * (old * old)
        w = w - wo
        slot = t.head
        head = (t.head + 1) % n
    else:
        slot = count
        head = t.head
        count += 1
    buf[slot] = x
    times[slot] = p.seq
    return replace(
        t,
        cf1=cf1 + x,
        cf2=cf2 + x * x,
        w=w + 1.0,
        buf=buf,
        times=times,
        head=head,
        count=count,
        now=p.seq,
        last_update_seq=p.seq,
    )


def cf_degrade(t: CFTuple, params: Params) -> CFTuple:
    """Advance the summary clock one arrival step without absorbing a point."""
    s = float(fade(1, params))
    return replace(t, cf1=s * t.cf1, cf2=s * t.cf2, w=s * t.w, now=t.now + 1)


def cf_recompute(t: CFTuple, params: Params) -> tuple[np.ndarray, np.ndarray, float]:
    """Rebuild ``(cf1, cf2, w)`` from the ring buffer contents."""
    pts, times = t.window_points()
    wts = fade(t.now - times, params)
    return wts @ pts, wts @ (pts * pts), float(wts.sum())


def variance(t) -> np.ndarray:
    """Per-dimension variance ``mean_square - center**2``, round-off clamped."""
    return _variance(t.center, t.mean_square)


def _variance(center: np.ndarray, mean_square: np.ndarray) -> np.ndarray:
    v = mean_square - center * center
    low = v.min(initial=0.0)
    if low < -TAU_VAR:
        raise ConsistencyError(f"variance {low:.3e} is below the round-off slack")
    # round-off residue from identical inputs snaps to an exact zero
    return np.where(v <= TAU_VAR, 0.0, v)


def preference_vector(t, params: Params) -> np.ndarray:
    """``rho`` on dimensions with variance below ``xi``, 1 elsewhere."""
    return np.where(variance(t) < params.xi, params.rho, 1.0)


def pdim(t, params: Params) -> int:
    """Number of preferred dimensions."""
    return int(np.count_nonzero(variance(t) < params.xi))


def projected_radius(t, params: Params) -> float:
    var = variance(t)
    psi = np.where(var < params.xi, params.rho, 1.0)
    return float(np.sqrt(np.sum(psi / params.rho * var)))


def projected_distance(p: Point, t, params: Params) -> float:
    """Preference-weighted distance from ``p`` to the summary center."""
    if p.values.shape != (t.d,):
        raise DimensionError(f"expected a {t.d}-vector, got shape {p.values.shape}")
    psi = preference_vector(t, params)
    diff = p.values - t.center
    return float(np.sqrt(np.sum(psi / params.eta * diff * diff)))


def is_burst(w: float, params: Params) -> bool:
    return w / params.n_window > params.burst_fraction


def classify_mc(t, params: Params) -> MCClass:
    r = projected_radius(t, params)
    k = pdim(t, params)
    if r < params.eps and t.w > params.mu and (k <= params.pi_dim or is_burst(t.w, params)):
        return MCClass.CORE
    if k > params.pi_dim and r < params.eps and t.w < params.mu:
        return MCClass.OUTLIER
    return MCClass.NEITHER
