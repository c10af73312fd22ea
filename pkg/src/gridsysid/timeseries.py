"""Uniformly sampled signals and CSV ingestion.

A :class:`Signal` is a read-only sample vector on a uniform time grid
``start_time + k * ts``.  A :class:`SignalPair` couples the perturbation
input ``u`` (PCC voltage) with the measured output ``y`` (inverter current)
on one shared grid.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import LengthMismatch, MissingColumn, NonUniformSampling, ParseError, ValidationError

__all__ = ["Signal", "SignalPair", "CsvConfig", "load_csv", "save_csv", "format_float"]

#: relative spacing tolerance for inferring ``ts`` from a time column
UNIFORMITY_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class Signal:
    samples: np.ndarray
    ts: float
    start_time: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        ts = float(self.ts)
        if not np.isfinite(ts) or ts <= 0:
            raise ValidationError(f"sampling period must be > 0, got {self.ts!r}")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "start_time", float(self.start_time))

    def __len__(self):
        return self.samples.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.samples if dtype is None else self.samples.astype(dtype)

    @property
    def time(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) * self.ts

    def replace(self, samples, start_time: Optional[float] = None) -> "Signal":
        """New signal on the same sampling period."""
        return Signal(samples, self.ts, self.start_time if start_time is None else start_time)

    def segment(self, start: int, stop: Optional[int] = None) -> "Signal":
        stop = len(self) if stop is None else stop
        return Signal(self.samples[start:stop], self.ts, self.start_time + start * self.ts)

    def equals(self, other: "Signal") -> bool:
        return (
            isinstance(other, Signal)
            and self.ts == other.ts
            and self.start_time == other.start_time
            and np.array_equal(self.samples, other.samples)
        )


@dataclass(frozen=True, eq=False)
class SignalPair:
    u: Signal
    y: Signal
    label: str = ""

    def __post_init__(self):
        if len(self.u) != len(self.y):
            raise LengthMismatch(f"u has {len(self.u)} samples but y has {len(self.y)}")
        if not np.isclose(self.u.ts, self.y.ts, rtol=1e-12, atol=0):
            raise ValidationError(f"u.ts={self.u.ts} differs from y.ts={self.y.ts}")
        if not np.isclose(self.u.start_time, self.y.start_time, rtol=0, atol=1e-9 * self.u.ts):
            raise ValidationError("u and y start at different times")

    @classmethod
    def from_arrays(cls, u, y, ts: float, start_time: float = 0.0, label: str = "") -> "SignalPair":
        return cls(Signal(u, ts, start_time), Signal(y, ts, start_time), label)

    def __len__(self):
        return len(self.u)

    @property
    def ts(self) -> float:
        return self.u.ts

    @property
    def start_time(self) -> float:
        return self.u.start_time

    @property
    def time(self) -> np.ndarray:
        return self.u.time

    def segment(self, start: int, stop: Optional[int] = None) -> "SignalPair":
        return SignalPair(self.u.segment(start, stop), self.y.segment(start, stop), self.label)

    def map(self, fn) -> "SignalPair":
        """Apply ``fn: Signal -> Signal`` to both channels."""
        return SignalPair(fn(self.u), fn(self.y), self.label)

    def equals(self, other: "SignalPair") -> bool:
        return self.u.equals(other.u) and self.y.equals(other.y)


@dataclass(frozen=True)
class CsvConfig:
    """Column mapping for :func:`load_csv`.

    Columns are header names or 0-based indices.  ``time_col=None`` looks for
    a ``time`` or ``t`` header and falls back to ``ts`` when neither exists.
    ``time_col=False`` ignores any time column.
    """

    time_col: Union[str, int, None, bool] = None
    u_col: Union[str, int] = "u"
    y_col: Union[str, int] = "y"
    ts: Optional[float] = None
    start_time: float = 0.0
    label: str = field(default="")


def _resolve(header, col, what):
    if isinstance(col, bool):
        raise MissingColumn(f"invalid {what} column {col!r}")
    if isinstance(col, int):
        if not 0 <= col < len(header):
            raise MissingColumn(f"{what} column index {col} out of range (have {len(header)} columns)")
        return col
    try:
        return header.index(col)
    except ValueError:
        raise MissingColumn(f"{what} column {col!r} not in header {header}") from None


def _data_rows(text):
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not "".join(row).strip():
            continue
        if row[0].lstrip().startswith("#"):
            continue
        rows.append((lineno, [c.strip() for c in row]))
    return rows


def load_csv(path, config: Optional[CsvConfig] = None) -> SignalPair:
    config = config or CsvConfig()
    text = Path(path).read_text(encoding="utf-8")
    rows = _data_rows(text)
    if not rows:
        raise ParseError(f"{path}: no header row", row=None)
    header = rows[0][1]
    body = rows[1:]
    if len(body) < 2:
        raise ParseError(f"{path}: need at least 2 data rows, got {len(body)}", row=None)

    iu = _resolve(header, config.u_col, "u")
    iy = _resolve(header, config.y_col, "y")
    it = None
    if config.time_col is None:
        for name in ("time", "t"):
            if name in header:
                it = header.index(name)
                break
    elif config.time_col is not False:
        it = _resolve(header, config.time_col, "time")
    if it is None and config.ts is None:
        raise MissingColumn("no time column and no ts given")

    cols = [c for c in (it, iu, iy) if c is not None]
    values = np.empty((len(body), len(cols)))
    for r, (lineno, row) in enumerate(body):
        if len(row) != len(header):
            raise LengthMismatch(f"line {lineno}: {len(row)} fields, header has {len(header)}")
        for j, c in enumerate(cols):
            try:
                values[r, j] = float(row[c])
            except ValueError:
                raise ParseError(f"line {lineno}, column {c + 1}: cannot parse {row[c]!r}",
                                 row=lineno, col=c + 1) from None

    if it is not None:
        t = values[:, 0]
        gaps = np.diff(t)
        ts = float(np.median(gaps))
        if ts <= 0:
            raise NonUniformSampling("time column is not increasing", worst_gap=ts)
        dev = np.abs(gaps - ts)
        worst = int(np.argmax(dev))
        if dev[worst] > UNIFORMITY_RTOL * ts:
            raise NonUniformSampling(
                f"non-uniform sampling: gap {float(gaps[worst])!r} after t={float(t[worst])!r} "
                f"(median spacing {ts!r})",
                worst_gap=float(gaps[worst]), index=worst)
        if config.ts is not None and not np.isclose(config.ts, ts, rtol=UNIFORMITY_RTOL):
            raise NonUniformSampling(f"time column spacing {ts!r} disagrees with ts={config.ts!r}")
        # the span estimate carries less rounding than any single gap
        ts = float((t[-1] - t[0]) / (len(t) - 1))
        start = float(t[0])
        u, y = values[:, 1], values[:, 2]
    else:
        ts, start = float(config.ts), config.start_time
        u, y = values[:, 0], values[:, 1]
    return SignalPair(Signal(u, ts, start), Signal(y, ts, start), config.label)


def format_float(x: float) -> str:
    """Shortest round-tripping repr, with integral values printed bare (``2`` not ``2.0``)."""
    x = float(x)
    if x == 0.0:
        return "0"
    s = repr(x)
    return s[:-2] if s.endswith(".0") else s


def save_csv(pair: SignalPair, path) -> None:
    if len(pair) == 0:
        raise ValidationError("refusing to write an empty SignalPair")
    lines = ["time,u,y"]
    for t, u, y in zip(pair.time, pair.u.samples, pair.y.samples):
        lines.append(f"{format_float(t)},{format_float(u)},{format_float(y)}")
    data = "\n".join(lines) + "\n"
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)
    os.replace(tmp, path)
