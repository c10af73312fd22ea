"""
Fit quality, FPE and confidence bands
=====================================

Fit one model to noisy data, score it and put a band on its simulated
output.
"""

import numpy as np

from gridsysid import EmulationScenario, ExcitationSpec, ModelOrder, PreprocessConfig, fit_tf_arx, generate, run_chain
from gridsysid.emulator import REFERENCE_PLANT
from gridsysid.estimation import prediction_residuals, simulate_free_run
from gridsysid.metrics import confidence_band, fpe, nrmse_fit
from gridsysid.tf import arx_to_continuous

# The output step for a 6 V input is |G(0)| * 6 V, about 49 mA. The
# sensor noise here is 1 % of that.
step = abs(REFERENCE_PLANT.dc_gain()) * 6.0
scenario = EmulationScenario(
    plant=REFERENCE_PLANT, ts=0.1, duration=800.0, noise_std=0.01 * step, seed=7,
    excitation=ExcitationSpec(kind="prbs", switch_times=(5.0, 500.0), prbs_bit_period=0.5, amplitude=6.0),
)
train, test = run_chain(generate(scenario), PreprocessConfig(median_window=1, detrend=False))

# Two poles and one zero, fitted on the first half. Least squares on
# the equation error is biased once the output is noisy, so the
# coefficients move even though the simulated output still tracks well.
model = fit_tf_arx(train, ModelOrder(2, 1))
print("estimate:", arx_to_continuous(model))
print("true:    ", REFERENCE_PLANT)

# %%
# Free-run simulation on the held-out half, seeded with the first
# lag_span measured outputs. The fit percentage is 100 (1 - NRMSE);
# a constant at the mean scores 0.
k0 = model.lag_span
sim = simulate_free_run(model, test.u, test.y.samples[:k0])
print("test fit: %.2f %%" % nrmse_fit(test.y.samples[k0:], sim.samples[k0:]).fit_percent)
print("FPE:", fpe(prediction_residuals(model, train), model.d).fpe)

# %%
# Monte Carlo band from the parameter covariance.
band = confidence_band(model, test.u, test.y.samples[:k0], level=0.95, draws=500, seed=0)
width = band.upper.samples - band.lower.samples
inside = np.mean((test.y.samples >= band.lower.samples) & (test.y.samples <= band.upper.samples))
print("mean 95 %% width: %.3g A, share of samples inside: %.2f" % (width.mean(), inside))
# The band covers parameter uncertainty only, not the sensor noise, so
# most noisy samples fall outside it.

# %%
# Noise lowers the fit. Ten seeds at each level, noise as a share of
# the output step:
for share in (0.0, 0.01, 0.1):
    fits = []
    for seed in range(10):
        sc = EmulationScenario(plant=REFERENCE_PLANT, ts=0.1, duration=800.0, noise_std=share * step, seed=seed,
                               excitation=scenario.excitation)
        tr, te = run_chain(generate(sc), PreprocessConfig(median_window=1, detrend=False))
        m = fit_tf_arx(tr, ModelOrder(2, 1))
        sim = simulate_free_run(m, te.u, te.y.samples[:m.lag_span])
        fits.append(nrmse_fit(te.y.samples[m.lag_span:], sim.samples[m.lag_span:]).fit_percent)
    print("noise %4.0f %% of step: mean fit %.1f %%" % (100 * share, np.mean(fits)))
