"""KDD Cup 1999 connection records: parsing and min-max scaling.

A record line holds the 41 connection attributes followed by the class label,
e.g. ``0,tcp,http,SF,181,5450,0,...,0.00,normal.``. Seven attributes are
symbolic or binary flags; the remaining 34 are used as features.
"""

from __future__ import annotations

import gzip
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

log = logging.getLogger(__name__)

KDD_COLUMNS = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
    "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
    "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate",
)
N_ATTRIBUTES = len(KDD_COLUMNS)  # 41
SYMBOLIC_COLUMNS = ("protocol_type", "service", "flag", "land", "logged_in",
                    "is_host_login", "is_guest_login")
SYMBOLIC_INDEX = tuple(KDD_COLUMNS.index(c) for c in SYMBOLIC_COLUMNS)  # (1, 2, 3, 6, 11, 20, 21)
CONTINUOUS_INDEX = tuple(i for i in range(N_ATTRIBUTES) if i not in SYMBOLIC_INDEX)

SOURCE_URL = "http://kdd.ics.uci.edu/databases/kddcup99/kddcup99.html"


class RecordError(ValueError):
    """A line that cannot be turned into a record."""

    def __init__(self, reason: str, line_no: int | None = None):
        self.reason = reason
        self.line_no = line_no
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(where + reason)


@dataclass
class RawRecord:
    fields: list[str]
    label: str
    continuous: np.ndarray
    line_no: int | None = None


def parse_kdd_record(line: str, line_no: int | None = None) -> RawRecord:
    parts = [s.strip() for s in line.strip().split(",")]
    if len(parts) != N_ATTRIBUTES + 1:
        raise RecordError(f"expected {N_ATTRIBUTES + 1} fields, got {len(parts)}", line_no)
    attrs, label = parts[:-1], parts[-1]
    if not label:
        raise RecordError("empty label", line_no)
    try:
        values = np.array([float(attrs[i]) for i in CONTINUOUS_INDEX])
    except ValueError as exc:
        raise RecordError(f"unparseable continuous field ({exc})", line_no) from None
    if not np.isfinite(values).all():
        raise RecordError("non-finite continuous field", line_no)
    return RawRecord(attrs, label, values, line_no)


@dataclass
class IngestStats:
    lines: int = 0
    accepted: int = 0
    rejected: int = 0


def open_text(path) -> Iterator[str]:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt", encoding="utf-8", errors="replace") as fh:
        yield from fh


def read_records(path, stats: IngestStats | None = None, max_records: int | None = None):
    """Yield parsed records; rejected lines are logged and counted, never dropped silently."""
    stats = stats if stats is not None else IngestStats()
    for line_no, line in enumerate(open_text(path), start=1):
        if max_records is not None and stats.accepted >= max_records:
            break
        stats.lines += 1
        try:
            rec = parse_kdd_record(line, line_no)
        except RecordError as exc:
            stats.rejected += 1
            log.warning("rejected %s", exc)
            continue
        stats.accepted += 1
        yield rec


class Normalizer:
    """Min-max scaling fitted on a prefix; later values are clamped to [0, 1]."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = np.asarray(lo, dtype=np.float64)
        self.hi = np.asarray(hi, dtype=np.float64)
        span = self.hi - self.lo
        self._const = span <= 0
        self._span = np.where(self._const, 1.0, span)

    def apply(self, x) -> np.ndarray:
        z = (np.asarray(x, dtype=np.float64) - self.lo) / self._span
        z = np.clip(z, 0.0, 1.0)
        z[..., self._const] = 0.0
        return z

    __call__ = apply


class IdentityNormalizer:
    def apply(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64)

    __call__ = apply


def fit_normalizer(buffer) -> Normalizer:
    """Fit on records or on a 2-d array of continuous features."""
    rows = [r.continuous if isinstance(r, RawRecord) else r for r in buffer]
    if len(rows) == 0:
        raise ValueError("cannot fit a normalizer on an empty buffer")
    X = np.asarray(rows, dtype=np.float64)
    return Normalizer(X.min(axis=0), X.max(axis=0))
