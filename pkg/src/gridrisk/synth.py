"""Labeled synthetic per-unit voltage matrices with injected anomalies."""
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import SpatioTemporalMatrix

ANOMALY_KINDS = ("step", "burst", "violation")


@dataclass(frozen=True)
class AnomalySpec:
    """Anomaly over the inclusive 1-based tick range [start_tick, end_tick] on 0-based channel rows."""

    channels: tuple
    start_tick: int
    end_tick: int
    kind: str = "step"
    magnitude: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if not self.channels:
            raise ValueError("an anomaly needs at least one channel")
        if self.start_tick > self.end_tick:
            raise ValueError("start_tick must not exceed end_tick")
        if self.kind not in ANOMALY_KINDS:
            raise ValueError(f"anomaly kind must be one of {ANOMALY_KINDS}")


@dataclass
class LabeledDataset:
    matrix: SpatioTemporalMatrix
    anomalies: list = field(default_factory=list)
    seed: int = 0


def generate(P, T, baseline=1.0, noise_sigma=0.005, anomalies=(), coupling=0.5, seed=0,
             tick_seconds=900.0, channel_prefix="ch"):
    """Baseline + coupling * shared walk + white noise, then the listed anomalies.

    The shared walk is a gaussian random walk scaled so its spread after T
    ticks is about ``noise_sigma`` and centered to zero time-mean; it
    correlates all channels without moving their averages. Anomaly
    randomness is never drawn, so removing anomalies leaves every other
    entry unchanged.
    """
    if P < 1 or T < 1:
        raise ValueError("P and T must be at least 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    if not 0.0 <= coupling <= 1.0:
        raise ValueError("coupling must lie in [0, 1]")
    anomalies = list(anomalies)
    for a in anomalies:
        if a.start_tick < 1 or a.end_tick > T:
            raise ValueError(f"anomaly ticks {a.start_tick}-{a.end_tick} fall outside [1, {T}]")
        if min(a.channels) < 0 or max(a.channels) >= P:
            raise ValueError(f"anomaly channels {a.channels} fall outside [0, {P})")

    rng = np.random.default_rng(seed)
    walk = np.cumsum(rng.standard_normal(T)) * (noise_sigma / np.sqrt(T))
    walk -= walk.mean()
    noise = rng.standard_normal((P, T)) * noise_sigma
    values = baseline + coupling * walk[None, :] + noise

    for a in anomalies:
        rows = list(a.channels)
        cols = slice(a.start_tick - 1, a.end_tick)
        if a.kind == "step":
            values[rows, cols] += a.magnitude
        elif a.kind == "burst":
            length = a.end_tick - a.start_tick + 1
            signs = np.where(np.arange(length) % 2 == 0, 1.0, -1.0)
            values[rows, cols] += a.magnitude * signs[None, :]
        else:
            values[rows, cols] = baseline + a.magnitude

    ids = [f"{channel_prefix}{k}" for k in range(P)]
    return LabeledDataset(SpatioTemporalMatrix(ids, values, tick_seconds), anomalies, seed)


TRUTH_HEADER = ["channel_set", "start_tick", "end_tick", "kind", "magnitude"]


def write_truth_csv(anomalies, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRUTH_HEADER)
        for a in anomalies:
            writer.writerow(
                [";".join(str(c) for c in a.channels), a.start_tick, a.end_tick, a.kind, repr(float(a.magnitude))]
            )


def read_truth_csv(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TRUTH_HEADER:
            raise ValueError(f"{path}: expected header {','.join(TRUTH_HEADER)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                chans = tuple(int(c) for c in row[0].split(";") if c.strip())
                out.append(AnomalySpec(chans, int(row[1]), int(row[2]), row[3].strip(), float(row[4])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}: row {lineno}: {exc}") from None
    return out
