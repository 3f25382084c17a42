"""Elliptic spin Ruijsenaars-Schneider dynamics, Lax matrices and N=2 verification."""
from .dynamics import (
    IntegrationError,
    N2LeafState,
    RSState,
    SpinState,
    Trajectory,
    hamiltonian,
    integrate,
    momenta_to_f,
    n2_flow_rhs,
    rs_rhs,
    spin_from_leaf,
    spin_rs_rhs,
)
from .lattice import BranchDatum, Lattice, PoleError, phi, sigma, v_potential, v_tilde, wp, zeta_w
from .lax import (
    det_condition_n2,
    f3_from_z0,
    isospectral_drift,
    lax_gauged_n2,
    lax_rs,
    lax_spin,
    solve_z0,
    spectral_invariants,
)
from .verify import SUITES, VerificationReport, run_suites, two_form_n2

__all__ = [
    "BranchDatum", "IntegrationError", "Lattice", "N2LeafState", "PoleError", "RSState", "SUITES",
    "SpinState", "Trajectory", "VerificationReport", "det_condition_n2", "f3_from_z0", "hamiltonian",
    "integrate", "isospectral_drift", "lax_gauged_n2", "lax_rs", "lax_spin", "momenta_to_f",
    "n2_flow_rhs", "phi", "rs_rhs", "run_suites", "sigma", "solve_z0", "spectral_invariants",
    "spin_from_leaf", "spin_rs_rhs", "two_form_n2", "v_potential", "v_tilde", "wp", "zeta_w",
]
