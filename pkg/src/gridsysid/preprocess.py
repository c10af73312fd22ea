"""Measurement conditioning: median filter, sliding RMS, detrend, demean, split.

:func:`run_chain` applies the stages in a fixed order to both channels of a
:class:`~gridsysid.timeseries.SignalPair`::

    median -> RMS (optional) -> detrend (optional) -> demean (optional) -> split
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EvenWindow, SegmentTooShort, TooShort, ValidationError, WindowTooLarge
from .timeseries import Signal, SignalPair

__all__ = [
    "PreprocessConfig",
    "median_filter",
    "sliding_rms",
    "detrend_linear",
    "demean",
    "split",
    "run_chain",
]


@dataclass(frozen=True)
class PreprocessConfig:
    median_window: int = 5
    rms_window: int = 1
    detrend: bool = True
    demean: bool = True
    split_fraction: float = 0.5

    def __post_init__(self):
        if int(self.median_window) != self.median_window or self.median_window < 1:
            raise ValidationError(f"median_window must be a positive integer, got {self.median_window!r}")
        if self.median_window % 2 == 0:
            raise EvenWindow(f"median_window must be odd, got {self.median_window}")
        if int(self.rms_window) != self.rms_window or self.rms_window < 1:
            raise ValidationError(f"rms_window must be a positive integer, got {self.rms_window!r}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValidationError(f"split_fraction must lie in (0, 1), got {self.split_fraction}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown preprocess keys: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PreprocessConfig":
        return cls.from_dict(json.loads(text))


def median_filter(s: Signal, window: int) -> Signal:
    """Centered running median with edge replication; output length unchanged."""
    n = len(s)
    if window % 2 == 0:
        raise EvenWindow(f"median window must be odd, got {window}")
    if window < 1:
        raise ValidationError("median window must be >= 1")
    if window > n:
        raise WindowTooLarge(f"median window {window} exceeds signal length {n}")
    if window == 1:
        return s.replace(s.samples.copy())
    half = window // 2
    padded = np.pad(s.samples, half, mode="edge")
    out = np.median(sliding_window_view(padded, window), axis=1)
    return s.replace(out)


def sliding_rms(s: Signal, window: int) -> Signal:
    """RMS over trailing full windows.

    Sample ``k`` of the result is the RMS of ``s[k:k+window]`` and is stamped
    at the window's last sample, so the output is ``window - 1`` samples
    shorter and starts ``(window - 1) * ts`` later.
    """
    n = len(s)
    if window < 1:
        raise ValidationError("RMS window must be >= 1")
    if window > n:
        raise WindowTooLarge(f"RMS window {window} exceeds signal length {n}")
    sq = np.square(s.samples)
    out = np.sqrt(np.mean(sliding_window_view(sq, window), axis=1))
    return Signal(out, s.ts, s.start_time + (window - 1) * s.ts)


def detrend_linear(s: Signal) -> Signal:
    """Remove the least-squares line ``c0 + c1 t``."""
    n = len(s)
    if n < 2:
        raise TooShort(f"detrend needs at least 2 samples, got {n}")
    # centred abscissa keeps the 2x2 normal equations diagonal
    k = np.arange(n) - (n - 1) / 2.0
    x = s.samples
    resid = x - x.mean()
    slope = np.dot(k, resid) / np.dot(k, k)
    return s.replace(resid - slope * k)


def demean(s: Signal) -> Signal:
    if len(s) < 1:
        raise TooShort("demean needs at least 1 sample")
    return s.replace(s.samples - s.samples.mean())


def split(pair: SignalPair, fraction: float):
    """Contiguous train/test split; train length is ``floor(fraction*N + 0.5)``."""
    if not 0.0 < fraction < 1.0:
        raise ValidationError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(pair)
    k = int(math.floor(fraction * n + 0.5))
    if k < 2 or n - k < 2:
        raise SegmentTooShort(f"split of N={n} at {fraction} gives segments {k} and {n - k}; need >= 2 each")
    return pair.segment(0, k), pair.segment(k)


def run_chain(pair: SignalPair, cfg: PreprocessConfig | None = None):
    cfg = cfg or PreprocessConfig()
    pair = pair.map(lambda s: median_filter(s, cfg.median_window))
    if cfg.rms_window > 1:
        pair = pair.map(lambda s: sliding_rms(s, cfg.rms_window))
    if cfg.detrend:
        pair = pair.map(detrend_linear)
    if cfg.demean:
        pair = pair.map(demean)
    return split(pair, cfg.split_fraction)
