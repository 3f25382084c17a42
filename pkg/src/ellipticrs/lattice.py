"""Weierstrass sigma, zeta and wp on a period lattice.

Elliptic evaluation reduces the argument into the fundamental cell using the
quasi-periodicity of sigma and then sums a nome series for the cell value.
The trigonometric and rational degenerations use closed forms.

All evaluators accept scalars or numpy arrays and return the same shape.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

MODES = ("elliptic", "trigonometric", "rational")

#: inputs closer than this to a pole are rejected
POLE_TOL = 1e-12

#: largest nome the series kernel accepts
MAX_NOME = 0.95


class PoleError(ValueError):
    """Argument coincides with a pole (or a lattice point) of the function."""


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite argument")
    return arr


def _out(arr):
    return arr[()] if arr.ndim == 0 else arr


@dataclass(frozen=True)
class Lattice:
    """Period lattice ``2*omega1*Z + 2*omega3*Z`` or one of its degenerations.

    Parameters
    ----------
    mode : {"elliptic", "trigonometric", "rational"}
    omega1 : complex
        First half-period. Ignored in rational mode.
    omega3 : complex
        Second half-period, elliptic mode only. ``Im(omega3/omega1) > 0``.

    Derived attributes (``tau``, ``nome``, ``eta1``, ``eta3``) are computed at
    construction and never change.
    """

    mode: str = "elliptic"
    omega1: complex = 1.0
    omega3: complex | None = 1j
    tau: complex | None = field(init=False, default=None)
    nome: complex | None = field(init=False, default=None)
    eta1: complex | None = field(init=False, default=None)
    eta3: complex | None = field(init=False, default=None)
    _coef: Any = field(init=False, default=None, repr=False, compare=False)
    _theta: Any = field(init=False, default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown lattice mode {self.mode!r}")
        put = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.mode == "rational":
            put("omega1", None)
            put("omega3", None)
            return
        w1 = complex(self.omega1)
        if w1 == 0 or not cmath.isfinite(w1):
            raise ValueError("omega1 must be finite and nonzero")
        put("omega1", w1)
        nu = math.pi / (2 * w1)
        if self.mode == "trigonometric":
            put("omega3", None)
            put("eta1", nu * nu * w1 / 3)
            return

        w3 = complex(self.omega3)
        tau = w3 / w1
        if not tau.imag > 0:
            raise ValueError("Im(omega3/omega1) must be positive")
        q = cmath.exp(1j * math.pi * tau)
        if abs(q) > MAX_NOME:
            raise ValueError(f"|nome| = {abs(q):.3f} exceeds {MAX_NOME}; series too slow")
        put("omega3", w3)
        put("tau", tau)
        put("nome", q)

        # a-priori truncation: after cell reduction every series term is
        # bounded by |q|**n (zeta/wp series) or |q|**(n*n) (theta series)
        aq = abs(q)
        n_terms = max(1, int(math.ceil(math.log(1e-18) / math.log(aq))) + 1)
        n = np.arange(1, n_terms + 1)
        q2n = q ** (2 * n)
        coef = q2n / (1 - q2n)
        put("_coef", (n, coef))
        m_terms = int(math.ceil(math.sqrt(n_terms))) + 2
        m = np.arange(m_terms)
        tcoef = (-1.0) ** m * q ** (m * (m + 1))
        put("_theta", (2 * m + 1, tcoef, complex(np.sum(tcoef * (2 * m + 1)))))

        eta1 = math.pi**2 / (12 * w1) * (1 - 24 * complex(np.sum(n * coef)))
        put("eta1", eta1)
        # eta3 from the series at z = omega3 (edge of the cell); the Legendre
        # relation is then an independent check rather than a definition
        put("eta3", complex(self._zeta_cell(np.asarray(w3, dtype=complex))))

    # ------------------------------------------------------------------
    @classmethod
    def rectangular(cls, omega1: float = 1.0, omega3_imag: float = 1.0) -> Lattice:
        """Lattice with real ``omega1`` and imaginary ``omega3``.

        sigma, zeta and wp are real on the real axis for such lattices.
        """
        if omega1 <= 0 or omega3_imag <= 0:
            raise ValueError("rectangular lattice needs positive half-periods")
        return cls("elliptic", float(omega1), 1j * float(omega3_imag))

    @classmethod
    def trigonometric(cls, omega1: complex = 1.0) -> Lattice:
        return cls("trigonometric", omega1, None)

    @classmethod
    def rational(cls) -> Lattice:
        return cls("rational", None, None)

    def to_json(self) -> dict:
        enc = lambda w: None if w is None else [w.real, w.imag]  # noqa: E731
        return {"mode": self.mode, "omega1": enc(self.omega1), "omega3": enc(self.omega3)}

    @classmethod
    def from_json(cls, obj: dict) -> Lattice:
        dec = lambda v: None if v is None else complex(v[0], v[1])  # noqa: E731
        mode = obj.get("mode", "elliptic")
        if mode == "rational":
            return cls.rational()
        if mode == "trigonometric":
            return cls.trigonometric(dec(obj["omega1"]))
        return cls("elliptic", dec(obj["omega1"]), dec(obj["omega3"]))

    @property
    def nu(self) -> complex:
        return math.pi / (2 * self.omega1)

    def legendre_residual(self) -> float:
        """``|eta1*omega3 - eta3*omega1 - i*pi/2|`` (elliptic mode)."""
        if self.mode != "elliptic":
            raise ValueError("Legendre relation needs an elliptic lattice")
        return abs(self.eta1 * self.omega3 - self.eta3 * self.omega1 - 0.5j * math.pi)

    # ------------------------------------------------------------------
    # argument reduction
    def reduce(self, z):
        """Split ``z = zr + 2*m*omega1 + 2*n*omega3`` with ``zr`` in the cell.

        Returns ``(zr, m, n)`` as arrays. In trigonometric mode ``n`` is zero and
        only the real period is removed; in rational mode nothing is removed.
        """
        z = np.asarray(z, dtype=complex)
        if self.mode == "rational":
            zeros = np.zeros(z.shape)
            return z, zeros, zeros
        s = z / (2 * self.omega1)
        if self.mode == "trigonometric":
            m = np.round(s.real)
            return z - 2 * m * self.omega1, m, np.zeros_like(m)
        # z/(2 w1) = a + b*tau with real a, b
        b = s.imag / self.tau.imag
        a = s.real - b * self.tau.real
        n = np.round(b)
        m = np.round(a)
        zr = z - 2 * m * self.omega1 - 2 * n * self.omega3
        return zr, m, n

    def distance_to_lattice(self, z):
        """Distance from ``z`` to the nearest lattice point (pole set of zeta)."""
        zr, _, _ = self.reduce(z)
        if self.mode == "rational":
            return np.abs(zr)
        if self.mode == "trigonometric":
            return np.abs(np.sin(self.nu * zr) / self.nu)
        d = np.abs(zr)
        w1, w3 = 2 * self.omega1, 2 * self.omega3
        for shift in (w1, w3, w1 + w3, w1 - w3):
            d = np.minimum(d, np.minimum(np.abs(zr - shift), np.abs(zr + shift)))
        return d

    def check_off_lattice(self, z, what: str = "argument"):
        d = self.distance_to_lattice(z)
        if np.any(d < POLE_TOL):
            raise PoleError(f"{what} lies on a lattice point (distance {np.min(d):.3g})")

    # ------------------------------------------------------------------
    # cell kernels (elliptic mode, zr already reduced)
    def _zeta_cell(self, zr):
        n, coef = self._coef
        nu = self.nu
        v = nu * zr
        tail = 4 * np.sum(coef * np.sin(2 * np.multiply.outer(v, n)), axis=-1)
        return self.eta1 * zr / self.omega1 + nu * (np.cos(v) / np.sin(v) + tail)

    def _wp_cell(self, zr):
        n, coef = self._coef
        nu = self.nu
        v = nu * zr
        tail = 8 * np.sum(n * coef * np.cos(2 * np.multiply.outer(v, n)), axis=-1)
        return -self.eta1 / self.omega1 + nu * nu * (1 / np.sin(v) ** 2 - tail)

    def _log_sigma_parts(self, z):
        """``sigma(z) = sign * exp(expo) * kernel`` with the kernel O(1)."""
        zr, m, n = self.reduce(z)
        odd, dens, theta1p0 = self._theta
        v = self.nu * zr
        kern = np.sum(dens * np.sin(np.multiply.outer(v, odd)), axis=-1) / (self.nu * theta1p0)
        half = m * self.omega1 + n * self.omega3
        eta_half = m * self.eta1 + n * self.eta3
        expo = self.eta1 * zr * zr / (2 * self.omega1) + 2 * eta_half * (zr + half)
        parity = (m + n + m * n) % 2
        sign = np.where(parity == 0, 1.0, -1.0)
        return sign, expo, kern, zr


def sigma(z, lattice: Lattice):
    """Weierstrass sigma function.

    Lattice points give exactly zero. In trigonometric mode this is
    ``sin(nu z) exp(nu^2 z^2 / 6) / nu`` with ``nu = pi / (2 omega1)``; in
    rational mode it is ``z``.
    """
    z = _as_complex(z)
    if lattice.mode == "rational":
        return _out(z.copy())
    if lattice.mode == "trigonometric":
        nu = lattice.nu
        return _out(np.exp(nu * nu * z * z / 6) * np.sin(nu * z) / nu)
    sign, expo, kern, zr = lattice._log_sigma_parts(z)
    val = sign * np.exp(expo) * kern
    val = np.where(zr == 0, 0.0 + 0.0j, val)
    return _out(val)


def zeta_w(z, lattice: Lattice):
    """Weierstrass zeta function, ``sigma'/sigma``.

    Raises
    ------
    PoleError
        If ``z`` is within ``POLE_TOL`` of a lattice point.
    """
    z = _as_complex(z)
    lattice.check_off_lattice(z, "zeta argument")
    if lattice.mode == "rational":
        return _out(1 / z)
    if lattice.mode == "trigonometric":
        nu = lattice.nu
        return _out(nu * nu * z / 3 + nu / np.tan(nu * z))
    zr, m, n = lattice.reduce(z)
    return _out(lattice._zeta_cell(zr) + 2 * (m * lattice.eta1 + n * lattice.eta3))


def wp(z, lattice: Lattice):
    """Weierstrass ``wp = -zeta'``."""
    z = _as_complex(z)
    lattice.check_off_lattice(z, "wp argument")
    if lattice.mode == "rational":
        return _out(1 / (z * z))
    if lattice.mode == "trigonometric":
        nu = lattice.nu
        return _out(-nu * nu / 3 + nu * nu / np.sin(nu * z) ** 2)
    zr, _, _ = lattice.reduce(z)
    return _out(lattice._wp_cell(zr))


def v_potential(x, eta, lattice: Lattice):
    """Pair potential ``V(x) = zeta(x + eta) - zeta(x)``."""
    x = _as_complex(x)
    return _out(np.asarray(zeta_w(x + eta, lattice) - zeta_w(x, lattice)))


def v_tilde(x, z0, lattice: Lattice):
    """``zeta(x + z0) - zeta(x)``; same as :func:`v_potential` with ``z0`` for eta."""
    return v_potential(x, z0, lattice)


# ----------------------------------------------------------------------
# Lax kernel


@dataclass(frozen=True)
class BranchDatum:
    """A fixed value ``w`` of ``log(sigma(z - eta) / sigma(z + eta))``.

    The spectral curve carries a cut joining ``z = eta`` and ``z = -eta``;
    ``w`` selects the sheet. ``sheet=0`` in :meth:`at` is the principal log.
    """

    z: complex
    eta: complex
    w: complex
    cut_convention: str = "cut joins z=eta and z=-eta"

    @classmethod
    def at(cls, z: complex, eta: complex, lattice: Lattice, sheet: int = 0) -> BranchDatum:
        ratio = complex(sigma(z - eta, lattice) / sigma(z + eta, lattice))
        if ratio == 0 or not cmath.isfinite(ratio):
            raise PoleError("spectral point at a branch point +-eta")
        return cls(complex(z), complex(eta), cmath.log(ratio) + 2j * math.pi * sheet)

    def shifted(self, k: int = 1) -> BranchDatum:
        return BranchDatum(self.z, self.eta, self.w + 2j * math.pi * k, self.cut_convention)

    def check(self, lattice: Lattice, rtol: float = 1e-10):
        ratio = complex(sigma(self.z - self.eta, lattice) / sigma(self.z + self.eta, lattice))
        if abs(cmath.exp(self.w) - ratio) > rtol * abs(ratio):
            raise ValueError("branch datum inconsistent with its spectral point")


def phi(x, z: complex, eta: complex, lattice: Lattice, branch: BranchDatum):
    """Lax kernel ``sigma(z+x+eta) / (sigma(z+eta) sigma(x)) * exp(x w / (2 eta))``.

    ``w`` comes from ``branch``, which must have been built for the same
    ``z`` and ``eta``.
    """
    if branch.z != complex(z) or branch.eta != complex(eta):
        raise ValueError("branch datum belongs to a different (z, eta)")
    x = _as_complex(x)
    lattice.check_off_lattice(x, "phi argument x")
    lattice.check_off_lattice(z + eta, "spectral point z + eta")
    lattice.check_off_lattice(z - eta, "spectral point z - eta")
    num = sigma(x + z + eta, lattice)
    den = sigma(z + eta, lattice) * sigma(x, lattice)
    return _out(np.asarray(num / den * np.exp(x * branch.w / (2 * eta))))


# ----------------------------------------------------------------------
# addition identities


def sigma_three_term_residual(a, b, c, d, lattice: Lattice, relative: bool = False) -> float:
    """Residual of the three-term sigma identity.

    ``s(a+c)s(a-c)s(b+d)s(b-d) - s(a+d)s(a-d)s(b+c)s(b-c) - s(a+b)s(a-b)s(c+d)s(c-d)``

    With ``relative=True`` the residual is divided by the largest term.
    """
    s = lambda u: complex(sigma(u, lattice))  # noqa: E731
    t1 = s(a + c) * s(a - c) * s(b + d) * s(b - d)
    t2 = s(a + d) * s(a - d) * s(b + c) * s(b - c)
    t3 = s(a + b) * s(a - b) * s(c + d) * s(c - d)
    res = abs(t1 - t2 - t3)
    if relative:
        scale = max(abs(t1), abs(t2), abs(t3))
        return res / scale if scale > 0 else res
    return res


def zeta_sigma_residual(a, b, c, lattice: Lattice, relative: bool = False) -> float:
    """Residual of ``z(a)+z(b)+z(c)-z(a+b+c) = s(a+b)s(b+c)s(a+c)/(s(a)s(b)s(c)s(a+b+c))``."""
    for u, name in ((a, "a"), (b, "b"), (c, "c"), (a + b + c, "a+b+c")):
        lattice.check_off_lattice(u, name)
    z = lambda u: complex(zeta_w(u, lattice))  # noqa: E731
    s = lambda u: complex(sigma(u, lattice))  # noqa: E731
    lhs = z(a) + z(b) + z(c) - z(a + b + c)
    rhs = s(a + b) * s(b + c) * s(a + c) / (s(a) * s(b) * s(c) * s(a + b + c))
    res = abs(lhs - rhs)
    if relative:
        scale = max(abs(lhs), abs(rhs))
        return res / scale if scale > 0 else res
    return res
