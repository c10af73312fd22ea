"""
Cleaning logged measurements
============================

Median filtering for spikes, one-cycle RMS for raw waveforms,
and linear detrending for drift.
"""

import numpy as np

from gridsysid import EmulationScenario, ExcitationSpec, PreprocessConfig, Signal, generate, run_chain
from gridsysid.preprocess import demean, detrend_linear, median_filter, sliding_rms

rng = np.random.default_rng(0)

# A step with two isolated logger spikes. A 5-sample median removes
# them and keeps the edge sharp.
x = np.r_[np.zeros(20), np.ones(20)]
x[[7, 30]] = [8.0, -5.0]
clean = median_filter(Signal(x, 0.1), 5)
print("spikes left:", np.abs(clean.samples - np.r_[np.zeros(20), np.ones(20)]).max())

# %%
# A waveform-mode record samples the 60 Hz carrier directly. A
# sliding RMS over one cycle (20 samples at 1200 Hz) gives back the
# envelope that the identification expects.
exc = ExcitationSpec(levels=(6.0,), switch_times=(0.5,))
wave = generate(EmulationScenario(ts=1 / 1200, duration=1.0, excitation=exc, mode="waveform"))
env = generate(EmulationScenario(ts=1 / 1200, duration=1.0, excitation=exc))
rms = sliding_rms(wave.u, 20)
print("RMS before step:", rms.samples[100], " envelope:", env.u.samples[119])
print("RMS after step: ", rms.samples[-1], " envelope:", env.u.samples[-1])

# %%
# Drift on top of noise. Detrending removes the best-fit line, and
# demeaning removes whatever offset is left.
t = np.arange(500) * 0.1
drift = Signal(3.0 + 0.02 * t + 0.05 * rng.standard_normal(t.size), 0.1)
flat = detrend_linear(drift)
print("slope after detrend:", np.polyfit(t, flat.samples, 1)[0])
print("mean after demean:", demean(drift).samples.mean())

# %%
# The full chain runs median, RMS, detrend and demean on both channels,
# then splits into training and test halves.
pair = generate(EmulationScenario(ts=0.1, duration=100.0, noise_std=0.01, seed=2,
                                  excitation=ExcitationSpec(kind="prbs", switch_times=(5.0, 90.0))))
train, test = run_chain(pair, PreprocessConfig())
print("train", len(train), "test", len(test))
