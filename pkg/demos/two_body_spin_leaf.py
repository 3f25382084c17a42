"""
The two-body spin system on a leaf
==================================

For two particles the spin variables enter only through f3^2 = f12 f21.
Trading f3 for z0, the zero of det L, gives coordinates (x1, x2, f1, f2) on a
leaf of fixed z0. Three descriptions of the motion are compared: the leaf
equations, the Hamiltonian flow of the leaf two-form, and the full spin
equations.
"""

import numpy as np

from ellipticrs import Lattice, N2LeafState, solve_z0
from ellipticrs.verify import flow_equivalence_test

lat = Lattice.rectangular()
x1, x2, f1, f2, f3, eta = 0.2, 0.9, 0.9, 1.1, 1.2, 0.3j

sol = solve_z0(x1, x2, f1, f2, f3, eta, lat)
print("z0 =", sol.z0, " residual", sol.residual, " Newton iterations", sol.newton_iterations)
print("-z0 is also a root:", sol.paired_residual)

# When f3^2 = f1 f2 the spin structure is trivial and z0 sits at eta.
print("spinless z0 =", solve_z0(x1, x2, f1, f2, np.sqrt(f1 * f2), eta, lat).z0)

leaf = N2LeafState(x1, x2, f1, f2, sol.z0, eta)
report = flow_equivalence_test(leaf, lat, t_end=5.0)
for line in report.summary_lines():
    print(line)
