"""Run configuration and the end-to-end streaming pipeline."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .engine import EngineState, process_point, window_rebalance
from .evaluation import MetricsRow, PurityTracker, purity
from .initialization import _points, fold_cf, fold_ea, predecon_partition
from .kdd import IdentityNormalizer, IngestStats, fit_normalizer, read_records
from .offline import final_clusters
from .params import ParamError, Params
from .summary import pdim, projected_radius

log = logging.getLogger(__name__)

METRIC_FIELDS = ("window_index", "engine", "purity_core_only", "purity_all", "num_core",
                 "num_outlier", "num_final_clusters")
TIMING_FIELDS = ("window_index", "engine", "window_wall_time_s", "inclusive_wall_time_s")

ENV_PREFIX = "EMASTREAM_"

# config key -> (Params field, parser); keys mirror the parameter table symbols
PARAM_KEYS = {
    "N": ("n_window", int),
    "alpha": ("alpha", float),
    "xi": ("xi", float),
    "rho": ("rho", float),
    "epsilon": ("eps", float),
    "mu": ("mu", int),
    "pi": ("pi_dim", int),
    "beta": ("beta", float),
    "H": ("horizon", int),
    "initialPoints": ("initial_points", int),
    "lambda": ("lam", float),
    "burst_fraction": ("burst_fraction", float),
    "decay_weight": ("decay_weight", lambda s: _parse_bool(s)),
    "distance_normalizer": ("distance_normalizer", str),
}
RUN_KEYS = ("input", "output", "engine", "normalization", "max_records", "backend", "prefetch")
ALIASES = {"eps": "epsilon", "initial_points": "initialPoints", "lam": "lambda",
           "n_window": "N", "pi_dim": "pi", "horizon": "H"}


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


class DataError(ValueError):
    """Input that parses but cannot drive a run."""


def _parse_bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


@dataclass
class RunConfig:
    input_path: Path
    output_path: Path
    engine: str = "EA"
    params: Params = field(default_factory=Params)
    normalization: str = "minmax_initial"
    max_records: int | None = None
    backend: str | None = None
    prefetch: int = 1024

    def __post_init__(self):
        self.input_path = Path(self.input_path)
        self.output_path = Path(self.output_path)
        if self.engine not in ("EA", "CF", "both"):
            raise ConfigError(f"engine must be EA, CF or both, got {self.engine!r}")
        if self.normalization not in ("minmax_initial", "none"):
            raise ConfigError(f"normalization must be minmax_initial or none, got {self.normalization!r}")
        if self.max_records is not None and self.max_records < 0:
            raise ConfigError("max_records must be non-negative")

    @property
    def engines(self) -> tuple[str, ...]:
        return ("EA", "CF") if self.engine == "both" else (self.engine,)


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {no}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def env_overrides(environ=None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    keys = list(PARAM_KEYS) + list(RUN_KEYS)
    out = {}
    for k in keys:
        name = ENV_PREFIX + k.upper()
        if name in environ:
            out[k] = environ[name]
    return out


def build_config(*layers: dict) -> RunConfig:
    """Merge ``key -> value`` layers (later wins) into a :class:`RunConfig`."""
    merged: dict[str, object] = {}
    for layer in layers:
        for k, v in layer.items():
            if v is None:
                continue
            merged[ALIASES.get(k, k)] = v
    unknown = set(merged) - set(PARAM_KEYS) - set(RUN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    try:
        for k, (name, conv) in PARAM_KEYS.items():
            if k in merged:
                kwargs[name] = conv(merged[k])
        params = Params(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    for k in ("input", "output"):
        if k not in merged:
            raise ConfigError(f"missing required key {k!r}")
    try:
        max_records = merged.get("max_records")
        return RunConfig(
            input_path=merged["input"],
            output_path=merged["output"],
            engine=str(merged.get("engine", "EA")),
            params=params,
            normalization=str(merged.get("normalization", "minmax_initial")),
            max_records=None if max_records in (None, "") else int(max_records),
            backend=merged.get("backend") or None,
            prefetch=int(merged.get("prefetch", 1024)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def prefetch(iterable, maxsize: int):
    """Iterate ``iterable`` on a reader thread through a bounded, ordered queue."""
    if maxsize <= 0:
        yield from iterable
        return
    q: queue.Queue = queue.Queue(maxsize=maxsize)
    done = object()
    stop = threading.Event()

    def pump():
        try:
            for item in iterable:
                while not stop.is_set():
                    try:
                        q.put(item, timeout=0.1)
                        break
                    except queue.Full:
                        continue
                if stop.is_set():
                    return
            q.put(done)
        except BaseException as exc:  # handed to the consumer
            q.put(exc)

    th = threading.Thread(target=pump, name="emastream-reader", daemon=True)
    th.start()
    try:
        while True:
            item = q.get()
            if item is done:
                break
            if isinstance(item, BaseException):
                raise item
            yield item
    finally:
        stop.set()
        th.join(timeout=5)


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


class _EngineRun:
    """One engine's state plus its metric bookkeeping."""

    def __init__(self, kind, d, params, backend, seq_start, initial):
        self.kind = kind
        self.state = EngineState(d, params, kind=kind, backend=backend, seq_start=seq_start)
        self.state.seed_cores(initial)
        self.tracker = PurityTracker(params.horizon)
        self.num_final = 0
        self.last_final = None
        self.rows: list[MetricsRow] = []

    def run_window(self, X, labels) -> MetricsRow:
        params = self.state.params
        t0 = time.perf_counter()
        for x, lab in zip(X, labels):
            outcome, _ = process_point(x, self.state)
            self.tracker.credit(outcome.tuple_id, lab)
        window_rebalance(self.state)
        if self.state.window_index % params.horizon == 0:
            self.last_final = final_clusters(self.state.cores, params, self.state.clock - 1)
            self.num_final = len(self.last_final)
        t1 = time.perf_counter()
        self.tracker.close_window()
        core_ids = set(self.state.core_ids())
        row = MetricsRow(
            window_index=self.state.window_index,
            engine=self.kind,
            purity_core_only=purity(self.tracker.assignments(core_ids)),
            purity_all=purity(self.tracker.assignments()),
            num_core=len(self.state.cores),
            num_outlier=len(self.state.outliers),
            num_final_clusters=self.num_final,
        )
        row.window_wall_time_s = t1 - t0
        row.inclusive_wall_time_s = time.perf_counter() - t0
        self.rows.append(row)
        return row


@dataclass
class RunResult:
    rows: dict[str, list[MetricsRow]]
    states: dict[str, EngineState]
    stats: IngestStats
    paths: dict[str, Path]
    finals: dict[str, object] = field(default_factory=dict)


def _tuple_json(t, params) -> dict:
    return {
        "id": t.id,
        "w": t.w,
        "center": [float(v) for v in t.center],
        "pdim": pdim(t, params),
        "projected_radius": projected_radius(t, params),
        "created_seq": t.created_seq,
        "last_update_seq": t.last_update_seq,
    }


def state_json(state: EngineState) -> dict:
    p = state.params
    return {
        "engine": state.kind,
        "window_index": state.window_index,
        "points_seen": state.points_seen,
        "cores": [_tuple_json(t, p) for t in state.cores],
        "outliers": [_tuple_json(t, p) for t in state.outliers],
    }


def run_pipeline(config: RunConfig) -> RunResult:
    """Initialise, stream every remaining record in windows of ``N`` and write outputs."""
    params = config.params
    if not config.input_path.is_file():
        raise FileNotFoundError(f"input not found: {config.input_path}")
    kernels = _kernels.backend(config.backend)
    _kernels.warmup(kernels)

    stats = IngestStats()
    records = prefetch(read_records(config.input_path, stats, config.max_records), config.prefetch)

    init = []
    for rec in records:
        init.append(rec)
        if len(init) >= params.initial_points:
            break
    if len(init) < params.initial_points:
        raise DataError(f"need {params.initial_points} initial records, input holds {len(init)}")
    if config.normalization == "minmax_initial":
        if not init:
            raise ConfigError("minmax_initial normalization needs initialPoints >= 1")
        norm = fit_normalizer(init)
    else:
        norm = IdentityNormalizer()

    X0 = norm(np.array([r.continuous for r in init])) if init else np.zeros((0, 0))
    d = X0.shape[1] if init else None
    members = predecon_partition(X0, params, kernels) if init else []
    pts = _points(X0) if init else []
    log.info("initialisation: %d points, %d clusters", len(init), len(members))

    runs: dict[str, _EngineRun] = {}

    def ensure_runs(dim):
        for kind in config.engines:
            fold = fold_ea if kind == "EA" else fold_cf
            initial = [fold([pts[i] for i in m], params, id=k) for k, m in enumerate(members)]
            runs[kind] = _EngineRun(kind, dim, params, config.backend, len(init), initial)

    if d is not None:
        ensure_runs(d)

    n = params.n_window
    win_x, win_y = [], []

    def flush():
        X = norm(np.array(win_x))
        for run in runs.values():
            run.run_window(X, win_y)
        win_x.clear()
        win_y.clear()

    for rec in records:
        if not runs:
            ensure_runs(rec.continuous.shape[0])
        win_x.append(rec.continuous)
        win_y.append(rec.label)
        if len(win_x) == n:
            flush()
    if win_x:
        flush()

    result = RunResult(
        rows={k: r.rows for k, r in runs.items()},
        states={k: r.state for k, r in runs.items()},
        stats=stats,
        paths={},
        finals={k: r.last_final for k, r in runs.items()},
    )
    write_outputs(config, result)
    return result


def write_outputs(config: RunConfig, result: RunResult) -> None:
    out = config.output_path
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "metrics_csv": out / "metrics.csv",
        "metrics_jsonl": out / "metrics.jsonl",
        "timing_csv": out / "timing.csv",
        "clusters_json": out / "clusters.json",
    }
    # windows interleave engines so both streams stay ordered by window_index
    rows = [r for group in zip(*result.rows.values()) for r in group] if result.rows else []
    with open(paths["metrics_csv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in METRIC_FIELDS])
    with open(paths["metrics_jsonl"], "w") as fh:
        for r in rows:
            fh.write(json.dumps({f: getattr(r, f) for f in METRIC_FIELDS}) + "\n")
    with open(paths["timing_csv"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TIMING_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, f)) for f in TIMING_FIELDS])
    summary = {
        "input": str(config.input_path),
        "input_sha256": file_sha256(config.input_path),
        "records": {"lines": result.stats.lines, "accepted": result.stats.accepted,
                    "rejected": result.stats.rejected},
        "params": config.params.as_dict(),
        "engines": {},
    }
    for kind, state in result.states.items():
        final = result.finals.get(kind)
        summary["engines"][kind] = {
            "windows": state.window_index,
            "num_core": len(state.cores),
            "num_outlier": len(state.outliers),
            "resident_values": state.resident_values(),
            "final_clusters": [sorted(c) for c in final.clusters] if final else [],
            "cores": [_tuple_json(t, state.params) for t in state.cores],
        }
    with open(paths["clusters_json"], "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.paths.update(paths)
