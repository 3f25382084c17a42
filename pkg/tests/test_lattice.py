import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ellipticrs.lattice import (
    BranchDatum,
    Lattice,
    PoleError,
    phi,
    sigma,
    sigma_three_term_residual,
    v_potential,
    wp,
    zeta_sigma_residual,
    zeta_w,
)

SQUARE = Lattice.rectangular()
SKEW = Lattice("elliptic", 1.0, 0.3 + 0.9j)


def theta_oracle(lattice, z, dps=40):
    """sigma, zeta and wp from mpmath's Jacobi theta function, independent of the library series."""
    with mp.workdps(dps):
        w1, w3 = mp.mpc(lattice.omega1), mp.mpc(lattice.omega3)
        q = mp.exp(1j * mp.pi * w3 / w1)
        nu = mp.pi / (2 * w1)
        v = nu * mp.mpc(z)
        t1p = mp.jtheta(1, 0, q, 1)
        eta1 = -mp.pi**2 * mp.jtheta(1, 0, q, 3) / (12 * w1 * t1p)
        th, th1, th2 = (mp.jtheta(1, v, q, k) for k in (0, 1, 2))
        s = mp.exp(eta1 * mp.mpc(z) ** 2 / (2 * w1)) * th / (nu * t1p)
        zt = eta1 * mp.mpc(z) / w1 + nu * th1 / th
        p = -eta1 / w1 - nu**2 * (th2 * th - th1**2) / th**2
        return complex(s), complex(zt), complex(p), complex(eta1)


def eisenstein_invariants(lattice, terms=60):
    """g2, g3 from the divisor-sum q-expansions of the Eisenstein series."""
    nu = math.pi / (2 * lattice.omega1)
    q2 = cmath.exp(2j * math.pi * lattice.omega3 / lattice.omega1)
    s3 = sum(sum(d**3 for d in range(1, n + 1) if n % d == 0) * q2**n for n in range(1, terms))
    s5 = sum(sum(d**5 for d in range(1, n + 1) if n % d == 0) * q2**n for n in range(1, terms))
    return 4 / 3 * nu**4 * (1 + 240 * s3), 8 / 27 * nu**6 * (1 - 504 * s5)


@pytest.mark.parametrize("lattice", [SQUARE, SKEW, Lattice("elliptic", 0.7 + 0.2j, -0.4 + 1.3j)])
@pytest.mark.parametrize("z", [0.1, 0.37 - 0.21j, 1.3 + 0.8j, -2.7 + 3.1j, 5.2 - 4.4j])
def test_against_theta_oracle(lattice, z):
    s, zt, p, _ = theta_oracle(lattice, z)
    assert abs(complex(sigma(z, lattice)) - s) <= 1e-12 * max(1.0, abs(s))
    assert abs(complex(zeta_w(z, lattice)) - zt) <= 1e-11 * max(1.0, abs(zt))
    assert abs(complex(wp(z, lattice)) - p) <= 1e-11 * max(1.0, abs(p))


def test_eta1_matches_oracle_and_square_value():
    assert abs(SKEW.eta1 - theta_oracle(SKEW, 0.2)[3]) < 1e-13
    # square lattice: eta1 = pi / 4 (Legendre relation plus symmetry)
    assert abs(SQUARE.eta1 - math.pi / 4) < 1e-14


@pytest.mark.parametrize("lattice", [SQUARE, SKEW])
def test_half_period_values_against_eisenstein(lattice):
    g2, g3 = eisenstein_invariants(lattice)
    w1, w3 = lattice.omega1, lattice.omega3
    e = [complex(wp(u, lattice)) for u in (w1, w1 + w3, w3)]
    assert abs(sum(e)) < 1e-12
    assert abs(e[0] * e[1] + e[1] * e[2] + e[2] * e[0] + g2 / 4) < 1e-11 * abs(g2)
    assert abs(e[0] * e[1] * e[2] - g3 / 4) < 1e-11 * max(1, abs(g3))


def test_laurent_expansion_near_origin():
    g2, g3 = eisenstein_invariants(SQUARE)
    for z in (0.05, 0.03j, 0.02 + 0.04j):
        approx = 1 / z**2 + g2 * z**2 / 20 + g3 * z**4 / 28 + g2**2 * z**6 / 1200
        assert abs(complex(wp(z, SQUARE)) - approx) < 1e-9 * abs(approx)
        s_approx = z - g2 * z**5 / 240 - g3 * z**7 / 840
        assert abs(complex(sigma(z, SQUARE)) - s_approx) < 1e-12


def test_trigonometric_closed_forms():
    lat = Lattice.trigonometric(1.3)
    nu = math.pi / 2.6
    for z in (0.2, 0.7 + 0.4j, -1.9 + 0.3j):
        assert abs(complex(sigma(z, lat)) - cmath.sin(nu * z) * cmath.exp(nu**2 * z**2 / 6) / nu) < 1e-13
        assert abs(complex(zeta_w(z, lat)) - (nu**2 * z / 3 + nu / cmath.tan(nu * z))) < 1e-12
        assert abs(complex(wp(z, lat)) - (-(nu**2) / 3 + nu**2 / cmath.sin(nu * z) ** 2)) < 1e-12


def test_rational_closed_forms():
    lat = Lattice.rational()
    z = np.array([0.3, 1.7 - 2j, -4 + 0.1j])
    assert np.allclose(sigma(z, lat), z, rtol=0, atol=0)
    assert np.allclose(zeta_w(z, lat), 1 / z, rtol=1e-15)
    assert np.allclose(wp(z, lat), 1 / z**2, rtol=1e-15)


def test_vectorised_matches_scalar():
    z = np.array([[0.1 + 0.2j, 1.4], [-0.3j, 2.2 - 1.1j]])
    out = zeta_w(z, SKEW)
    assert out.shape == z.shape
    for idx in np.ndindex(z.shape):
        assert out[idx] == complex(zeta_w(z[idx], SKEW))


def test_poles_raise_and_sigma_vanishes():
    for z in (0, 2.0, 2 + 2j, -2j):
        with pytest.raises(PoleError):
            zeta_w(z, SQUARE)
        with pytest.raises(PoleError):
            wp(z, SQUARE)
        assert abs(complex(sigma(z, SQUARE))) < 1e-12


def test_lattice_validation_and_json():
    with pytest.raises(ValueError):
        Lattice("elliptic", 1.0, -1j)
    for lat in (SQUARE, SKEW, Lattice.trigonometric(2.0), Lattice.rational()):
        assert Lattice.from_json(lat.to_json()) == lat


def test_branch_datum():
    z, eta = 0.4 + 0.25j, 0.3j
    b = BranchDatum.at(z, eta, SQUARE)
    b.check(SQUARE)
    b.shifted(2).check(SQUARE)
    with pytest.raises(ValueError):
        BranchDatum(z, eta, b.w + 0.1).check(SQUARE)
    with pytest.raises(PoleError):
        BranchDatum.at(eta, eta, SQUARE)
    with pytest.raises(ValueError):
        phi(0.3, z + 0.1, eta, SQUARE, b)


def test_phi_sheet_change_is_a_phase():
    z, eta, x = 0.4 + 0.25j, 0.3j, 0.55 - 0.1j
    b = BranchDatum.at(z, eta, SQUARE)
    ratio = complex(phi(x, z, eta, SQUARE, b.shifted(1)) / phi(x, z, eta, SQUARE, b))
    assert abs(ratio - cmath.exp(1j * math.pi * x / eta)) < 1e-12


def test_potential_is_zeta_difference():
    x, eta = 0.41 + 0.07j, 0.3j
    assert v_potential(x, eta, SKEW) == complex(zeta_w(x + eta, SKEW) - zeta_w(x, SKEW))


# ----------------------------------------------------------------------
# properties on random lattices

lattices = st.builds(
    lambda a, b, w1: Lattice("elliptic", w1, w1 * complex(a, b)),
    st.floats(-0.5, 0.5),
    st.floats(0.7, 2.0),
    st.floats(0.6, 1.5),
)
unit = st.floats(-0.45, 0.45)


def _point(lat, s, t):
    return 2 * s * lat.omega1 + 2 * t * lat.omega3


@settings(max_examples=60, deadline=None)
@given(lattices, unit, unit)
def test_parity(lat, s, t):
    z = _point(lat, s, t)
    if abs(z) < 1e-3:
        return
    assert abs(complex(sigma(-z, lat) + sigma(z, lat))) <= 1e-13 * abs(complex(sigma(z, lat)))
    assert abs(complex(zeta_w(-z, lat) + zeta_w(z, lat))) <= 1e-12 * abs(complex(zeta_w(z, lat)))
    assert abs(complex(wp(-z, lat) - wp(z, lat))) <= 1e-12 * abs(complex(wp(z, lat)))


@settings(max_examples=60, deadline=None)
@given(lattices, unit, unit)
def test_quasi_periodicity(lat, s, t):
    z = _point(lat, s, t)
    if abs(z) < 1e-3:
        return
    for w, eta in ((lat.omega1, lat.eta1), (lat.omega3, lat.eta3)):
        lhs = complex(sigma(z + 2 * w, lat))
        rhs = -cmath.exp(2 * eta * (z + w)) * complex(sigma(z, lat))
        assert abs(lhs - rhs) <= 1e-10 * abs(rhs)
        assert abs(complex(zeta_w(z + 2 * w, lat) - zeta_w(z, lat)) - 2 * eta) <= 1e-10 * max(1, abs(eta))


@settings(max_examples=60, deadline=None)
@given(lattices)
def test_legendre_relation(lat):
    assert abs(lat.eta1 * lat.omega3 - lat.eta3 * lat.omega1 - 1j * math.pi / 2) < 1e-12


@settings(max_examples=40, deadline=None)
@given(lattices, unit, unit, unit, unit, unit, unit)
def test_addition_identities(lat, a1, a2, b1, b2, c1, c2):
    a, b, c = _point(lat, a1, a2), _point(lat, b1, b2), _point(lat, c1, c2)
    d = _point(lat, a2, c1)
    if min(abs(u) for u in (a, b, c, a - b, b - c, a - c, a + b)) < 1e-2:
        return
    assert sigma_three_term_residual(a, b, c, d, lat, relative=True) < 1e-10
    assert zeta_sigma_residual(a, b, c, lat, relative=True) < 1e-10


@settings(max_examples=40, deadline=None)
@given(unit, unit)
def test_zeta_is_log_derivative_of_sigma(s, t):
    z = _point(SKEW, s, t)
    if abs(z) < 1e-2:
        return
    h = 1e-6
    fd = (cmath.log(complex(sigma(z + h, SKEW))) - cmath.log(complex(sigma(z - h, SKEW)))) / (2 * h)
    assert abs(fd - complex(zeta_w(z, SKEW))) < 1e-6 * max(1, abs(complex(zeta_w(z, SKEW))))
    fd2 = -(complex(zeta_w(z + h, SKEW)) - complex(zeta_w(z - h, SKEW))) / (2 * h)
    assert abs(fd2 - complex(wp(z, SKEW))) < 1e-5 * max(1, abs(complex(wp(z, SKEW))))


def test_elliptic_tends_to_trigonometric():
    trig = Lattice.trigonometric(1.0)
    z = np.array([0.3 + 0.2j, -0.7 + 0.5j, 0.1 - 0.4j])
    errs = []
    for T in (0.6, 1.2, 2.4):
        ell = Lattice("elliptic", 1.0, 1j * T)
        errs.append(np.max(np.abs(zeta_w(z, ell) - zeta_w(z, trig))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-5
