import cmath
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipticrs.dynamics import RSState, SpinState, bind, integrate, spin_rs_rhs
from ellipticrs.lattice import BranchDatum, Lattice, PoleError, phi
from ellipticrs.lax import (
    NewtonDivergence,
    _newton,
    det_condition_n2,
    f3_squared_from_z0,
    isospectral_drift,
    lax_gauged_n2,
    lax_rs,
    lax_spin,
    solve_z0,
    spectral_invariants,
)
from ellipticrs.verify import rational_z0_closed_form

LAT = Lattice.rectangular()
ETA = 0.3j
Z = 0.4 + 0.25j
LEAF = dict(x1=0.2, x2=0.9, f1=0.5 + 0.1j, f2=0.4 - 0.2j, f3=0.3 + 0.05j)


def test_kernel_matches_entrywise_phi():
    x = np.array([0.1, 0.6 + 0.05j, -0.5])
    f = np.array([1.0, 0.8, 1.3])
    b = BranchDatum.at(Z, ETA, LAT)
    L = lax_rs(RSState(x, f, ETA), Z, b, LAT).matrix
    for i in range(3):
        for j in range(3):
            ref = f[i] * complex(phi(x[i] - x[j] - ETA, Z, ETA, LAT, b))
            assert abs(L[i, j] - ref) < 1e-13 * abs(ref)


def test_spin_lax_with_rank_one_f_equals_rs_lax():
    x = np.array([0.1, 0.6, -0.5])
    f = np.array([1.0, 0.8, 1.3])
    b = BranchDatum.at(Z, ETA, LAT)
    F = np.tile(f[:, None], (1, 3))
    assert np.allclose(lax_spin(SpinState(x, F, ETA), Z, b, LAT).matrix, lax_rs(RSState(x, f, ETA), Z, b, LAT).matrix)


def test_branch_mismatch_rejected():
    b = BranchDatum.at(Z, ETA, LAT)
    with pytest.raises(ValueError):
        lax_rs(RSState([0.1, 0.5], [1, 1], ETA), Z + 0.1, b, LAT)


@pytest.mark.parametrize("lat", [LAT, Lattice.trigonometric(1.0), Lattice.rational()])
def test_gauged_matrix_spectrum_matches_spin_lax(lat):
    p = LEAF
    b = BranchDatum.at(Z, ETA, lat)
    F = np.array([[p["f1"], p["f3"]], [p["f3"], p["f2"]]])
    spin = lax_spin(SpinState([p["x1"], p["x2"]], F, ETA), Z, b, lat).matrix
    g = lax_gauged_n2(*p.values(), ETA, Z, lat, policy="with_sqrt_prefactor", branch=b).matrix
    # diagonal gauge: same diagonal, same spectrum
    assert np.allclose(np.diag(g), np.diag(spin), rtol=1e-12, atol=0)
    assert abs(g[0, 1] * g[1, 0] - spin[0, 1] * spin[1, 0]) < 1e-12 * abs(spin[0, 1] * spin[1, 0])
    assert abs(np.linalg.det(g) - np.linalg.det(spin)) < 1e-12 * abs(np.linalg.det(spin))


def test_unknown_prefactor_policy():
    with pytest.raises(ValueError):
        lax_gauged_n2(*LEAF.values(), ETA, Z, LAT, policy="sqrt")


@pytest.mark.parametrize("lat", [LAT, Lattice.trigonometric(1.0), Lattice.rational()])
def test_solve_z0_roots(lat):
    sol = solve_z0(*LEAF.values(), ETA, lat)
    assert sol.residual < 1e-12
    assert sol.paired_root == -sol.z0
    assert sol.paired_residual < 1e-12
    assert sol.z0.real >= -1e-12
    g = lax_gauged_n2(*LEAF.values(), ETA, sol.z0, lat).matrix
    scale = abs(g[0, 0] * g[1, 1]) + abs(g[0, 1] * g[1, 0])
    assert abs(np.linalg.det(g)) < 1e-10 * scale
    assert json.loads(json.dumps(sol.to_json()))["newton_iterations"] == sol.newton_iterations


def test_spinless_root_is_eta():
    p = dict(LEAF)
    p["f3"] = cmath.sqrt(p["f1"] * p["f2"])
    assert abs(solve_z0(*p.values(), ETA, LAT).z0 - ETA) < 1e-12


def test_rational_closed_form():
    sol = solve_z0(*LEAF.values(), ETA, Lattice.rational())
    ref = rational_z0_closed_form(*LEAF.values(), ETA)
    assert min(abs(sol.z0 - ref), abs(sol.z0 + ref)) < 1e-12


def test_rational_closed_form_by_hand():
    # rational: f1 f2 z^2/eta^2 = f3^2 (z^2 - d^2)/(eta^2 - d^2), solved for z^2
    x1, x2, f1, f2, f3 = LEAF.values()
    d2 = (x1 - x2) ** 2
    a = f1 * f2 / ETA**2 - f3**2 / (ETA**2 - d2)
    z2 = -(f3**2) * d2 / (ETA**2 - d2) / a
    sol = solve_z0(*LEAF.values(), ETA, Lattice.rational())
    assert abs(sol.z0**2 - z2) < 1e-12 * abs(z2)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 1.0), st.floats(0.5, 1.5), st.floats(0.5, 1.5), st.floats(0.6, 1.4))
def test_f3_z0_round_trip(sep, f1, f2, ratio):
    f3 = ratio * cmath.sqrt(f1 * f2)
    sol = solve_z0(0.0, sep, f1, f2, f3, ETA, LAT)
    back = f3_squared_from_z0(0.0, sep, f1, f2, sol.z0, ETA, LAT)
    assert abs(back - f3**2) < 1e-9 * abs(f3**2)
    assert abs(det_condition_n2(0.0, sep, f1, f2, f3, ETA, -sol.z0, LAT)) < 1e-10


def test_newton_divergence():
    with pytest.raises(NewtonDivergence):
        _newton(lambda z: 1.0 + 0 * z, 0.3)
    with pytest.raises(NewtonDivergence):
        _newton(lambda z: cmath.exp(z), 0.0, max_iter=5)


def test_spectral_invariants_are_power_sums():
    x = np.array([0.1, 0.6, -0.5])
    b = BranchDatum.at(Z, ETA, LAT)
    sample = lax_rs(RSState(x, [1.0, 0.8, 1.3], ETA), Z, b, LAT)
    ev = np.linalg.eigvals(sample.matrix)
    for k, tk in zip((1, 2, 3), spectral_invariants(sample, (1, 2, 3))):
        assert abs(tk - np.sum(ev**k)) < 1e-12 * max(1, abs(tk))


def test_isospectral_drift_and_report():
    rng = np.random.default_rng(3)
    F = rng.uniform(0.5, 1.2, (3, 3))
    state = SpinState([0.6, 0.0, -0.7], F, ETA)
    tr = integrate(bind(spin_rs_rhs, LAT), state, (0, 3), rel_tol=1e-12, abs_tol=1e-14,
                   sample_times=np.linspace(0, 3, 31))
    b = BranchDatum.at(Z, ETA, LAT)
    rep = isospectral_drift(tr, Z, b, (1, 2, 3), LAT, report=True)
    assert rep.drift < 1e-8
    assert len(rep.per_time) == 31 and rep.skipped == []
    assert json.loads(rep.dumps())["orders"] == [1, 2, 3]
    # a different sheet changes L by a conjugation and a scalar phase; drift stays small
    assert isospectral_drift(tr, Z, b.shifted(1), (1, 2), LAT) < 1e-8
    bad = integrate(bind(spin_rs_rhs, LAT, sign="printed"), state, (0, 3), rel_tol=1e-12, abs_tol=1e-14)
    assert isospectral_drift(bad, Z, b, (1, 2, 3), LAT) > 1e-3


def test_pole_in_lax_raises():
    b = BranchDatum.at(Z, ETA, LAT)
    with pytest.raises(PoleError):
        # x1 - x2 - eta = 0 puts the kernel on a pole
        lax_rs(RSState([0.3j, 0.0], [1, 1], ETA), Z, b, LAT)
