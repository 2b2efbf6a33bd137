"""Loading, windowing, vectorization and min-max normalization of sensor matrices."""
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    """Malformed wide-CSV input."""


class EmptyInputError(ValueError):
    """Not enough ticks to form a single window."""


@dataclass(frozen=True)
class SpatioTemporalMatrix:
    """P channels by T ticks of per-unit readings (channels are rows)."""

    channel_ids: list
    values: np.ndarray
    tick_seconds: float = 900.0
    ticks: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"values must be a non-empty P x T matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("matrix entries must be finite")
        if len(self.channel_ids) != values.shape[0]:
            raise ValueError("channel_ids length must equal the number of rows")
        if len(set(self.channel_ids)) != len(self.channel_ids):
            raise ValueError("channel_ids must be unique")
        if self.tick_seconds <= 0:
            raise ValueError("tick_seconds must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_ids", list(self.channel_ids))
        ticks = self.ticks
        if ticks is None:
            ticks = np.arange(1, values.shape[1] + 1)
        ticks = np.asarray(ticks, dtype=np.int64)
        if ticks.shape != (values.shape[1],):
            raise ValueError("ticks must have one entry per column")
        object.__setattr__(self, "ticks", ticks)

    @property
    def P(self):
        return self.values.shape[0]

    @property
    def T(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class Segment:
    """Window of ``N_w`` consecutive columns ending at 1-based tick ``end_tick``."""

    end_tick: int
    window: np.ndarray


@dataclass(frozen=True)
class NormalizedVector:
    values: np.ndarray
    degenerate: bool = False

    def __len__(self):
        return self.values.shape[0]


def load_matrix_csv(path, tick_seconds=900.0):
    """Read a wide CSV (rows are ticks, columns are channels) into a P x T matrix.

    The first header cell must be ``tick``; every later row holds an integer
    tick followed by one decimal reading per channel.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "tick":
            raise ParseError(f"{path}: header must be 'tick,<channel_1>,...', got {header!r}")
        channels = header[1:]
        if any(not c for c in channels) or len(set(channels)) != len(channels):
            raise ParseError(f"{path}: channel ids must be non-empty and unique")
        ticks, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
                )
            try:
                ticks.append(int(row[0]))
            except ValueError:
                raise ParseError(f"{path}: row {lineno}, column 'tick': not an integer: {row[0]!r}") from None
            vals = []
            for col, cell in zip(channels, row[1:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {lineno}, column {col!r}: not a number: {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise ParseError(f"{path}: row {lineno}, column {col!r}: non-finite value")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return SpatioTemporalMatrix(channels, np.array(rows).T, tick_seconds, np.array(ticks))


def write_matrix_csv(matrix, path):
    """Write ``matrix`` in the wide CSV layout read by :func:`load_matrix_csv`."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tick", *matrix.channel_ids])
        for k, tick in enumerate(matrix.ticks):
            writer.writerow([int(tick), *(repr(float(v)) for v in matrix.values[:, k])])


def window_segments(matrix, N_w, N_s):
    """Slice ``matrix`` into windows ending at columns N_w, N_w + N_s, ... .

    ``end_tick`` carries the tick label of the window's last column, which
    equals the 1-based column position for matrices with default ticks.
    """
    if N_w < 1 or N_s < 1:
        raise ValueError("N_w and N_s must be positive")
    if N_w > matrix.T:
        raise EmptyInputError(f"empty input: window width N_w={N_w} exceeds the {matrix.T} available ticks")
    count = (matrix.T - N_w) // N_s + 1
    segments = []
    for k in range(count):
        end = N_w + k * N_s
        segments.append(Segment(end_tick=int(matrix.ticks[end - 1]), window=matrix.values[:, end - N_w:end]))
    return segments


def vectorize(segment):
    # column-major: all channels at the earliest tick first
    window = segment.window if isinstance(segment, Segment) else np.asarray(segment)
    return np.asarray(window, dtype=np.float64).ravel(order="F")


def normalize(x):
    """Min-max scale ``x`` into [0, 1]; a constant vector maps to all 0.5 and is flagged."""
    x = np.asarray(x, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return NormalizedVector(np.full(x.shape, 0.5), degenerate=True)
    out = (x - lo) / (hi - lo)
    # pin the extremes exactly; rounding in (x - lo) / (hi - lo) can miss 1.0
    out[x == lo] = 0.0
    out[x == hi] = 1.0
    np.clip(out, 0.0, 1.0, out=out)
    return NormalizedVector(out, degenerate=False)
