"""
Identifying a converter's voltage-to-current dynamics
=====================================================

Emulate a grid-connected inverter, excite it with a PRBS voltage,
and recover its transfer function by sweeping ARX model orders.
"""

# The emulated plant maps a change in grid voltage (V) to a change in
# output current (A). It has one fast pole, one slow pole and one zero.
import numpy as np

from gridsysid import EmulationScenario, ExcitationSpec, PreprocessConfig, SweepConfig, generate, run_chain, sweep
from gridsysid.emulator import REFERENCE_PLANT
from gridsysid.order_search import format_table, select_best
from gridsysid.tf import poles_zeros

print("true plant:", REFERENCE_PLANT)
print("poles:", np.round(poles_zeros(REFERENCE_PLANT).poles.real, 4))

# A 6 V PRBS around 120 V, switched on between 5 s and 500 s, sampled
# every 0.1 s. The quiet tail lets the slow pole settle.
scenario = EmulationScenario(
    plant=REFERENCE_PLANT, ts=0.1, duration=800.0, seed=1,
    excitation=ExcitationSpec(kind="prbs", switch_times=(5.0, 500.0), prbs_bit_period=0.5, amplitude=6.0),
)
pair = generate(scenario)
print(len(pair), "samples; voltage range", pair.u.samples.min(), "to", pair.u.samples.max())

# Noise-free data, so the median filter and detrend stages are left
# as identity. Demeaning removes the operating point.
train, test = run_chain(pair, PreprocessConfig(median_window=1, detrend=False))

# Try every (n poles, m zeros) with n up to 5, ranked by FPE.
reports = sweep(train, test, SweepConfig(n_range=(1, 5), selection="best_fpe"))
print(format_table(reports[:6]))

best = select_best(reports)
print("selected", best.order, "->", best.continuous)
print("stable:", best.stable)

# The same sweep ranked by test fit picks the same order.
print("by test fit:", select_best(reports, "best_test_fit").order)
