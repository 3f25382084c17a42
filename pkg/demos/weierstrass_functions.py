"""
Weierstrass functions on a period lattice
=========================================

sigma, zeta and wp for the square lattice, a look at quasi-periodicity and
at what happens when the second period is sent to infinity.
"""

import cmath

import numpy as np

from ellipticrs import Lattice, sigma, wp, zeta_w

# The square lattice with half-periods 1 and i. Its quasi-period eta1 is pi/4.
lat = Lattice.rectangular(1.0, 1.0)
print("nome", lat.nome, " eta1", lat.eta1, " eta3", lat.eta3)
print("Legendre residual", lat.legendre_residual())

# All three functions accept arrays.
z = np.array([0.1, 0.5 + 0.3j, 1.7 - 0.8j])
print("sigma", sigma(z, lat))
print("zeta ", zeta_w(z, lat))
print("wp   ", wp(z, lat))

# Shifting by a full period multiplies sigma by a known exponential factor
# and adds 2 eta to zeta.
u = 0.37 - 0.21j
ratio = complex(sigma(u + 2, lat) / sigma(u, lat))
print("sigma(z+2)/sigma(z)   ", ratio)
print("-exp(2 eta1 (z+1))    ", -cmath.exp(2 * lat.eta1 * (u + 1)))

# Far from the origin the evaluation reduces the argument into the
# fundamental cell first, so large arguments stay accurate.
far = 7.3 + 11.6j
print("zeta far away minus zeta in the cell:", complex(zeta_w(far, lat) - zeta_w(far - 6 - 12j, lat)),
      "expected", 6 * lat.eta1 + 12 * lat.eta3)

# Stretching the imaginary period makes the lattice degenerate to a strip,
# and the functions approach their trigonometric forms.
trig = Lattice.trigonometric(1.0)
for T in (1.0, 2.0, 5.0, 20.0):
    ell = Lattice("elliptic", 1.0, 1j * T)
    err = np.max(np.abs(zeta_w(z, ell) - zeta_w(z, trig)))
    print(f"omega3 = {T:>4}i   max |zeta_ell - zeta_trig| = {err:.2e}")
