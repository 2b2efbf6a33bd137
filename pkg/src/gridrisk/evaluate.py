"""Alarm-to-ground-truth matching and TDR / FAR / ACT metrics."""
import csv
from dataclasses import dataclass
from pathlib import Path


class UndefinedMetricError(ValueError):
    """TDR is undefined without ground-truth anomalies."""


@dataclass(frozen=True)
class DetectionMetrics:
    TDR: float
    FAR: float
    ACT_seconds: float
    N_cr: int
    N_gt: int
    N_al: int


def _alarm_span(end_tick, N_w, N_s, slack_windows):
    pad = slack_windows * N_s
    return end_tick - N_w + 1 - pad, end_tick + pad


def match_alarms(alarms, truth, N_w, N_s, slack_windows=1):
    """Count anomalies certified by an alarm, one alarm per anomaly at most.

    Anomalies are taken in order of start tick and each grabs the earliest
    unused alarm whose dilated window overlaps it.
    """
    if slack_windows < 0:
        raise ValueError("slack_windows must be non-negative")
    alarms = sorted(int(a) for a in alarms)
    used = [False] * len(alarms)
    matched = 0
    for anomaly in sorted(truth, key=lambda a: (a.start_tick, a.end_tick)):
        for k, end in enumerate(alarms):
            if used[k]:
                continue
            lo, hi = _alarm_span(end, N_w, N_s, slack_windows)
            if lo <= anomaly.end_tick and anomaly.start_tick <= hi:
                used[k] = True
                matched += 1
                break
    return matched


def compute_metrics(N_cr, N_gt, N_al, total_elapsed_seconds=0.0, windows_processed=0):
    if N_gt < 1:
        raise UndefinedMetricError("TDR needs at least one ground-truth anomaly")
    if not 0 <= N_cr <= min(N_gt, N_al):
        raise ValueError("correct detections cannot exceed anomalies or alarms")
    far = (N_al - N_cr) / N_al if N_al > 0 else 0.0
    act = total_elapsed_seconds / windows_processed if windows_processed > 0 else 0.0
    return DetectionMetrics(N_cr / N_gt, far, act, int(N_cr), int(N_gt), int(N_al))


METRICS_HEADER = ["method", "TDR", "FAR", "ACT_seconds", "N_cr", "N_gt", "N_al"]


def write_metrics_csv(rows, path):
    """``rows`` maps method name to :class:`DetectionMetrics`; methods are written in name order."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        for method in sorted(rows):
            m = rows[method]
            writer.writerow(
                [method, f"{m.TDR:.12g}", f"{m.FAR:.12g}", f"{m.ACT_seconds:.12g}", m.N_cr, m.N_gt, m.N_al]
            )
