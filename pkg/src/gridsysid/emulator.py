"""Synthetic perturbation experiments from a known transfer-function plant.

The plant stands in for the inverter: the PCC voltage deviation drives the
bilinear discretisation of ``plant`` and the logger records the current one
sample later.  ``envelope`` mode emits RMS-level signals around the
operating point; ``waveform`` mode modulates those envelopes onto a
``sqrt(2) sin(2 pi f t)`` carrier so the RMS preprocessing stage has
something to demodulate.

Defaults (120 V, 60 Hz) follow the device nameplate; the step profile
(+-5 % of v0 held for 10 s) is an invented placeholder.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import signal as sps

from .errors import InvalidScenario, ValidationError
from .order_search import FitReport, SweepConfig, select_best, sweep
from .preprocess import PreprocessConfig, run_chain
from .tf import ContinuousTf, continuous_to_discrete, is_stable
from .timeseries import Signal, SignalPair

__all__ = [
    "REFERENCE_PLANT",
    "NOMINAL_VOLTAGE",
    "NOMINAL_CURRENT",
    "ExcitationSpec",
    "EmulationScenario",
    "excitation_signal",
    "generate",
    "end_to_end_roundtrip",
]

#: second-order current/voltage model identified for the 700 W inverter
REFERENCE_PLANT = ContinuousTf([-0.02113, -9.334e-4], [1.0, 2.104, 0.1133])
NOMINAL_VOLTAGE = 120.0
NOMINAL_CURRENT = 700.0 / 120.0
KINDS = ("step_sequence", "prbs", "multistep")
MODES = ("envelope", "waveform")
#: logger delay between the plant response and the recorded current, in samples
LOG_LATENCY = 1


@dataclass(frozen=True)
class ExcitationSpec:
    """Voltage deviation profile (volts, relative to ``v0``).

    step_sequence
        ``levels[i]`` is held from ``switch_times[i]`` on; zero before the first switch.
    multistep
        ``levels[i]`` is an increment applied at ``switch_times[i]`` (a staircase).
    prbs
        ``+-amplitude`` maximal-length binary sequence with one bit every
        ``prbs_bit_period`` seconds.  Optional ``switch_times=[start, stop]``
        restricts it to that window (zero deviation outside).
    """

    kind: str = "step_sequence"
    levels: tuple = (6.0, 0.0, -6.0, 0.0)
    switch_times: tuple = (10.0, 20.0, 30.0, 40.0)
    prbs_bit_period: float = 1.0
    amplitude: float = 6.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidScenario(f"excitation kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        object.__setattr__(self, "switch_times", tuple(float(v) for v in self.switch_times))
        st = np.asarray(self.switch_times)
        if st.size > 1 and np.any(np.diff(st) <= 0):
            raise InvalidScenario("switch_times must be strictly increasing")
        if self.kind == "prbs":
            if self.prbs_bit_period <= 0:
                raise InvalidScenario("prbs_bit_period must be > 0")
            if st.size not in (0, 2):
                raise InvalidScenario("prbs switch_times must be empty or [start, stop]")
        elif len(self.levels) != len(self.switch_times):
            raise InvalidScenario("levels and switch_times must have equal length")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "levels": list(self.levels), "switch_times": list(self.switch_times),
                "prbs_bit_period": self.prbs_bit_period, "amplitude": self.amplitude}

    @classmethod
    def from_dict(cls, d: dict) -> "ExcitationSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidScenario(f"unknown excitation keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class EmulationScenario:
    plant: ContinuousTf = field(default_factory=lambda: REFERENCE_PLANT)
    ts: float = 0.1
    duration: float = 60.0
    excitation: ExcitationSpec = field(default_factory=ExcitationSpec)
    noise_std: float = 0.0
    mode: str = "envelope"
    carrier_hz: float = 60.0
    v0: float = NOMINAL_VOLTAGE
    i0: float = NOMINAL_CURRENT
    seed: int = 0

    def __post_init__(self):
        if not self.ts > 0:
            raise InvalidScenario("ts must be > 0")
        if self.duration < 10 * self.ts:
            raise InvalidScenario("duration must cover at least 10 samples")
        if self.noise_std < 0:
            raise InvalidScenario("noise_std must be >= 0")
        if self.mode not in MODES:
            raise InvalidScenario(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.carrier_hz > 0:
            raise InvalidScenario("carrier_hz must be > 0")
        if self.mode == "waveform" and self.ts > 1.0 / (20.0 * self.carrier_hz) * (1 + 1e-9):
            raise InvalidScenario("waveform mode needs at least 20 samples per carrier cycle")
        st = self.excitation.switch_times
        if st and (st[0] < 0 or st[-1] > self.duration):
            raise InvalidScenario("switch_times fall outside [0, duration]")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.ts + 1e-9)) + 1

    @property
    def samples_per_cycle(self) -> int:
        return int(round(1.0 / (self.carrier_hz * self.ts)))

    def to_dict(self) -> dict:
        return {
            "plant": self.plant.to_dict(),
            "ts": self.ts,
            "duration": self.duration,
            "excitation": self.excitation.to_dict(),
            "noise_std": self.noise_std,
            "mode": self.mode,
            "carrier_hz": self.carrier_hz,
            "operating_point": {"v0": self.v0, "i0": self.i0},
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmulationScenario":
        d = dict(d)
        known = {"plant", "ts", "duration", "excitation", "noise_std", "mode", "carrier_hz",
                 "operating_point", "seed"}
        unknown = set(d) - known
        if unknown:
            raise InvalidScenario(f"unknown scenario keys: {sorted(unknown)}")
        kw = {}
        try:
            if "plant" in d:
                kw["plant"] = ContinuousTf.from_dict(d.pop("plant"))
            if "excitation" in d:
                kw["excitation"] = ExcitationSpec.from_dict(d.pop("excitation"))
            op = d.pop("operating_point", {})
            if set(op) - {"v0", "i0"}:
                raise InvalidScenario(f"unknown operating_point keys: {sorted(set(op) - {'v0', 'i0'})}")
            kw.update({k: float(v) for k, v in op.items()})
            for k in ("ts", "duration", "noise_std", "carrier_hz"):
                if k in d:
                    kw[k] = float(d.pop(k))
            if "seed" in d:
                kw["seed"] = int(d.pop("seed"))
            if "mode" in d:
                kw["mode"] = d.pop("mode")
        except (KeyError, TypeError) as exc:
            raise InvalidScenario(f"malformed scenario: {exc}") from None
        except ValidationError as exc:
            if isinstance(exc, InvalidScenario):
                raise
            raise InvalidScenario(str(exc)) from None
        return cls(**kw)


def _prbs_bits(n_bits: int, rng: np.random.Generator) -> np.ndarray:
    """``n_bits`` values of +-1 from a maximal-length sequence with a random start state."""
    order = max(4, min(24, int(math.ceil(math.log2(n_bits + 1)))))
    state = rng.integers(0, 2, size=order)
    if not state.any():
        state[0] = 1
    seq, _ = sps.max_len_seq(order, state=state, length=n_bits)
    return 2.0 * seq - 1.0


def excitation_signal(spec: ExcitationSpec, t: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Voltage deviation sampled at times ``t``."""
    out = np.zeros_like(t, dtype=float)
    if spec.kind == "prbs":
        start, stop = spec.switch_times if spec.switch_times else (t[0], np.inf)
        active = (t >= start - 1e-9) & (t < stop - 1e-9)
        idx = np.floor((t - start) / spec.prbs_bit_period + 1e-9).astype(int)
        n_bits = int(idx[active].max()) + 1 if active.any() else 1
        bits = _prbs_bits(n_bits, rng)
        out[active] = spec.amplitude * bits[idx[active]]
        return out
    for level, ts_ in zip(spec.levels, spec.switch_times):
        on = t >= ts_ - 1e-9
        if spec.kind == "step_sequence":
            out[on] = level
        else:
            out[on] += level
    return out


def generate(scenario: EmulationScenario) -> SignalPair:
    """Emulated (voltage, current) record; deterministic for a fixed seed."""
    if not is_stable(scenario.plant).stable:
        warnings.warn("emulated plant is unstable; the response will grow without bound", RuntimeWarning)
    n = scenario.n_samples
    t = np.arange(n) * scenario.ts
    exc_seed, noise_seed = np.random.SeedSequence(scenario.seed).spawn(2)
    du = excitation_signal(scenario.excitation, t, np.random.default_rng(exc_seed))

    b, a = continuous_to_discrete(scenario.plant, scenario.ts).filter_coefficients()
    response = sps.lfilter(b, a, du)
    dy = np.concatenate([np.zeros(LOG_LATENCY), response[:n - LOG_LATENCY]])

    u = scenario.v0 + du
    y = scenario.i0 + dy
    if scenario.mode == "waveform":
        carrier = math.sqrt(2.0) * np.sin(2.0 * math.pi * scenario.carrier_hz * t)
        u = u * carrier
        y = y * carrier
    if scenario.noise_std > 0:
        y = y + scenario.noise_std * np.random.default_rng(noise_seed).standard_normal(n)
    label = f"emulated {scenario.mode}, seed {scenario.seed}"
    return SignalPair(Signal(u, scenario.ts), Signal(y, scenario.ts), label)


def end_to_end_roundtrip(scenario: EmulationScenario, preprocess: Optional[PreprocessConfig] = None,
                         sweep_cfg: Optional[SweepConfig] = None) -> FitReport:
    """generate -> preprocess -> sweep -> select_best."""
    sweep_cfg = sweep_cfg or SweepConfig()
    train, test = run_chain(generate(scenario), preprocess or PreprocessConfig())
    return select_best(sweep(train, test, sweep_cfg), sweep_cfg.selection)
