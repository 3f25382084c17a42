"""
Choosing the sign of the spin equations
=======================================

The spin equations of motion can be read with either overall sign on the
interaction bracket. Only one choice keeps tr L^k constant along the flow,
and this script shows which.
"""

import numpy as np

from ellipticrs import Lattice, SpinState
from ellipticrs.verify import sign_calibration

lat = Lattice.rectangular()
rng = np.random.default_rng(7)

# A generic 3-particle spin state: real positions, positive f_ij.
F = rng.uniform(0.6, 1.2, (3, 3))
state = SpinState([0.6, 0.0, -0.7], F, 0.3j)

report = sign_calibration(state, lat, t_end=5.0)
for name, drift in report.details["drifts"].items():
    print(f"{name:>8}: drift of tr L^k over t in [0, 5] = {drift:.2e}")
print("selected:", report.convention)

# The rejected convention is stopped early once its drift is unmistakable,
# which keeps the run short.
print(report.details["notes"])
