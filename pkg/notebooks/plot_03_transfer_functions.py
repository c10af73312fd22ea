"""
Moving between ARX, discrete and continuous models
==================================================

Tustin conversion in both directions, poles and zeros, and step
responses.
"""

import numpy as np

from gridsysid import ContinuousTf
from gridsysid.emulator import REFERENCE_PLANT
from gridsysid.tf import (
    arx_to_continuous,
    continuous_to_arx,
    continuous_to_discrete,
    discrete_to_continuous,
    is_stable,
    poles_zeros,
    step_response,
)

# Sampled at 0.1 s, the plant becomes a discrete transfer function whose
# poles sit inside the unit circle.
h = continuous_to_discrete(REFERENCE_PLANT, 0.1)
print("discrete num:", h.num)
print("discrete den:", h.den)
print("discrete poles:", poles_zeros(h).poles.real, is_stable(h))

# Going back recovers the continuous coefficients.
print("back:", discrete_to_continuous(h))

# %%
# The same model in ARX form. The numerator carries the (1 + q^-1)
# factors that the bilinear map puts on a proper transfer function.
arx = continuous_to_arx(REFERENCE_PLANT, 0.1)
print("a:", arx.a)
print("b:", arx.b, "structure:", arx.structure)
print("continuous:", arx_to_continuous(arx))

# %%
# DC gain and step response. A 1 V rise in grid voltage settles at
# about -8.2 mA of output current.
print("DC gain:", REFERENCE_PLANT.dc_gain(), "A/V")
step = step_response(REFERENCE_PLANT, 0.1, 300.0)
print("after 10 s:", step.samples[100], " after 300 s:", step.samples[-1])

# %%
# A lightly damped pair for comparison.
g = ContinuousTf([4.0], [1.0, 0.4, 4.0])
pz = poles_zeros(g)
print("poles:", np.round(pz.poles, 3), " peak of step:", step_response(g, 0.01, 20.0).samples.max())
