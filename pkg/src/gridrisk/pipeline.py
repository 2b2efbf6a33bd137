"""Segment-level orchestration shared by the CLI and the acceptance tests."""
import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .bigan import train_segment
from .index import DegenerateSeriesError, IndexSeries, RiskLevel, assess_series, average_index, n_phi
from .ingest import normalize, vectorize, window_segments

log = logging.getLogger(__name__)

ASSESSMENT_HEADER = [
    "segment_end_tick", "n_phi", "standardized", "p_value", "risk_level", "converged", "degenerate",
]
THA_HEADER = ["segment_end_tick", "p_a", "alarm"]


@dataclass
class SegmentResult:
    end_tick: int
    index: float
    converged: bool = True
    degenerate: bool = False
    iterations: int = 0


@dataclass
class Assessment:
    method: str
    series: IndexSeries
    segments: list
    elapsed_seconds: float = 0.0
    N_w: int = 0
    N_s: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def all_converged(self):
        return all(s.converged for s in self.segments)

    def alarms(self):
        return [t for t, lvl in zip(self.series.end_ticks, self.series.risk_levels) if lvl == RiskLevel.EMERGENCY]


def _bigan_task(args):
    k, end_tick, x, degenerate, train_cfg, shape, test_function = args
    out = train_segment(x, train_cfg, shape, segment_index=k)
    value = average_index(n_phi(f, test_function) for f in out.features)
    return SegmentResult(end_tick, value, out.converged, degenerate, out.iterations_run)


def _dae_task(args):
    k, end_tick, x, degenerate, dae_cfg, seed, test_function = args
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(k),)))
    feats, mse = baselines.dae_features(x, dae_cfg, rng, return_error=True)
    return SegmentResult(end_tick, n_phi(feats, test_function), mse < dae_cfg.min_error, degenerate, 0)


def _run_tasks(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _series(feeder_id, results):
    values = [r.index for r in results]
    ticks = [r.end_tick for r in results]
    try:
        return assess_series(feeder_id, values, ticks)
    except DegenerateSeriesError:
        if len(values) < 2 or len(set(values)) > 1:
            raise
        # every segment scored identically: nothing stands out
        log.warning("all %d segment indices are equal; grading every segment NORMAL", len(values))
        return IndexSeries(feeder_id, ticks, values, [0.0] * len(values), [0.5] * len(values),
                           [RiskLevel.NORMAL] * len(values), len(values) - 1)


def _prepared(matrix, cfg):
    segments = window_segments(matrix, cfg.N_w, cfg.N_s)
    prepared = []
    for s in segments:
        nv = normalize(vectorize(s))
        prepared.append((s, nv))
    return prepared


def run_bigan(matrix, cfg, seed, workers=1):
    prepared = _prepared(matrix, cfg)
    shape = cfg.model_shape(matrix.P * cfg.N_w)
    train_cfg = cfg.train_config(seed)
    tasks = [
        (k, s.end_tick, nv.values, nv.degenerate, train_cfg, shape, cfg.test_function)
        for k, (s, nv) in enumerate(prepared)
    ]
    t0 = time.perf_counter()
    results = _run_tasks(_bigan_task, tasks, workers)
    elapsed = time.perf_counter() - t0
    return Assessment("bigan", _series(cfg.feeder_id, results), results, elapsed, cfg.N_w, cfg.N_s)


def run_dae(matrix, cfg, seed, workers=1):
    prepared = _prepared(matrix, cfg)
    dae_cfg = cfg.dae_config()
    tasks = [
        (k, s.end_tick, nv.values, nv.degenerate, dae_cfg, seed, cfg.test_function)
        for k, (s, nv) in enumerate(prepared)
    ]
    t0 = time.perf_counter()
    results = _run_tasks(_dae_task, tasks, workers)
    elapsed = time.perf_counter() - t0
    return Assessment("dae", _series(cfg.feeder_id, results), results, elapsed, cfg.N_w, cfg.N_s)


def run_pca(matrix, cfg):
    segments = window_segments(matrix, cfg.N_w, cfg.N_s)
    pca_cfg = cfg.pca_config()
    t0 = time.perf_counter()
    results = []
    for s in segments:
        try:
            feats = baselines.pca_features(s.window, pca_cfg)
            results.append(SegmentResult(s.end_tick, n_phi(feats, cfg.test_function)))
        except baselines.DegenerateWindowError:
            results.append(SegmentResult(s.end_tick, 0.0, degenerate=True))
    elapsed = time.perf_counter() - t0
    return Assessment("pca", _series(cfg.feeder_id, results), results, elapsed, cfg.N_w, cfg.N_s)


@dataclass
class ThaResult:
    end_ticks: list
    p_a: list
    alarm: list
    elapsed_seconds: float = 0.0
    N_w: int = 0
    N_s: int = 0
    method: str = "tha"

    def alarms(self):
        return [t for t, a in zip(self.end_ticks, self.alarm) if a]


def run_tha(matrix, cfg):
    segments = window_segments(matrix, cfg.N_w, cfg.N_s)
    tha_cfg = cfg.tha_config()
    t0 = time.perf_counter()
    rows = [baselines.tha_index(s.window, tha_cfg) for s in segments]
    elapsed = time.perf_counter() - t0
    return ThaResult([s.end_tick for s in segments], [r[0] for r in rows], [r[1] for r in rows],
                     elapsed, cfg.N_w, cfg.N_s)


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def _real(v):
    return f"{float(v):.12g}"


def _flag(v):
    return "true" if v else "false"


def write_assessment_csv(assessment, path):
    s = assessment.series
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ASSESSMENT_HEADER)
        for k, seg in enumerate(assessment.segments):
            w.writerow([
                s.end_ticks[k], _real(s.n_phi[k]), _real(s.standardized[k]), _real(s.p_values[k]),
                s.risk_levels[k].name, _flag(seg.converged), _flag(seg.degenerate),
            ])


def write_tha_csv(result, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(THA_HEADER)
        for t, p, a in zip(result.end_ticks, result.p_a, result.alarm):
            w.writerow([t, _real(p), _flag(a)])


def meta_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_meta(result, path, windows):
    meta = {
        "method": result.method,
        "N_w": result.N_w,
        "N_s": result.N_s,
        "elapsed_seconds": result.elapsed_seconds,
        "windows": windows,
    }
    meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_meta(path):
    p = meta_path(path)
    if not p.exists():
        return {}
    return json.loads(p.read_text(encoding="utf-8"))


def read_alarms(path):
    """End ticks of alarmed windows from an assessment CSV (EMERGENCY rows) or a THA CSV."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return [], 0
        header = [h.strip() for h in header]
        rows = [r for r in reader if r]
    if header == ASSESSMENT_HEADER:
        alarms = [int(r[0]) for r in rows if r[4].strip() == RiskLevel.EMERGENCY.name]
    elif header == THA_HEADER:
        alarms = [int(r[0]) for r in rows if r[2].strip() == "true"]
    else:
        raise ValueError(f"{path}: not an assessment or THA file (header {header!r})")
    return sorted(alarms), len(rows)
