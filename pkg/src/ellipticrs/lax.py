"""Lax matrices, the N=2 gauged matrix, the z0 equation and isospectrality checks."""
from __future__ import annotations

import cmath
import json
from dataclasses import dataclass

import numpy as np

from .dynamics import N2LeafState, RSState, SpinState, Trajectory
from .lattice import BranchDatum, Lattice, PoleError, sigma


@dataclass(frozen=True)
class LaxSample:
    """Lax matrix evaluated at spectral point ``z`` on the sheet fixed by ``branch``."""

    z: complex
    matrix: np.ndarray
    branch: BranchDatum
    prefactor_policy: str = "ungauged"

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _kernel_matrix(x, z, eta, lattice: Lattice, branch: BranchDatum) -> np.ndarray:
    """``K[i, j] = Phi(x_i - x_j - eta, z)``.

    Shares the spectral-point factors across entries; :func:`lattice.phi` is
    the entrywise reference.
    """
    if branch.z != complex(z) or branch.eta != complex(eta):
        raise ValueError("branch datum belongs to a different (z, eta)")
    lattice.check_off_lattice(z + eta, "spectral point z + eta")
    lattice.check_off_lattice(z - eta, "spectral point z - eta")
    x = np.asarray(x, dtype=complex)
    arg = np.subtract.outer(x, x) - eta
    lattice.check_off_lattice(arg, "Lax kernel argument")
    num = sigma(arg + z + eta, lattice)
    den = sigma(z + eta, lattice) * sigma(arg, lattice)
    return num / den * np.exp(arg * branch.w / (2 * eta))


def lax_rs(state: RSState, z: complex, branch: BranchDatum, lattice: Lattice) -> LaxSample:
    """Spinless Lax matrix ``L[i, j] = f_i Phi(x_i - x_j - eta, z)``."""
    K = _kernel_matrix(state.x, z, state.eta, lattice, branch)
    return LaxSample(complex(z), state.f[:, None] * K, branch)


def lax_spin(state: SpinState, z: complex, branch: BranchDatum, lattice: Lattice) -> LaxSample:
    """Spin Lax matrix ``L[i, j] = f_ij Phi(x_i - x_j - eta, z)``."""
    K = _kernel_matrix(state.x, z, state.eta, lattice, branch)
    return LaxSample(complex(z), state.F * K, branch)


def lax_gauged_n2(
    x1, x2, f1, f2, f3, eta, z, lattice: Lattice, policy: str = "stripped", branch: BranchDatum | None = None
) -> LaxSample:
    """Diagonally gauged 2x2 spin Lax matrix.

    With ``policy="stripped"`` the overall factor
    ``(sigma(z+eta) sigma(z-eta))^(-1/2)`` is left out. With
    ``policy="with_sqrt_prefactor"`` it is applied on the sheet of ``branch``,
    i.e. as ``exp(-w/2) / sigma(z + eta)``, which makes the spectrum agree with
    :func:`lax_spin` for the same branch datum.
    """
    s = lambda u: complex(sigma(u, lattice))  # noqa: E731
    d = x1 - x2
    for u, what in ((z + eta, "z + eta"), (z - eta, "z - eta"), (z + x1 + eta, "z + x1 + eta"),
                    (z + x2 + eta, "z + x2 + eta"), (x1, "x1"), (x2, "x2"),
                    (d - eta, "x1 - x2 - eta"), (-d - eta, "x2 - x1 - eta")):
        lattice.check_off_lattice(u, what)
    diag = s(z) / s(eta)
    m = np.array(
        [
            [-f1 * diag, f3 * s(z - d) * s(z + x1 + eta) * s(x2) / (s(-d - eta) * s(z + x2 + eta) * s(x1))],
            [f3 * s(z + d) * s(z + x2 + eta) * s(x1) / (s(d - eta) * s(z + x1 + eta) * s(x2)), -f2 * diag],
        ],
        dtype=complex,
    )
    if policy == "with_sqrt_prefactor":
        if branch is None:
            branch = BranchDatum.at(z, eta, lattice)
        m = m * cmath.exp(-branch.w / 2) / s(z + eta)
    elif policy != "stripped":
        raise ValueError(f"unknown prefactor policy {policy!r}")
    if branch is None:
        branch = BranchDatum(complex(z), complex(eta), 0j, "unused (stripped)")
    return LaxSample(complex(z), m, branch, policy)


# ----------------------------------------------------------------------
# the z0 equation


def det_condition_n2(x1, x2, f1, f2, f3, eta, z, lattice: Lattice) -> complex:
    """``f1 f2 s(z)^2 / s(eta)^2 - f3^2 s(z+d) s(z-d) / (s(d-eta) s(-d-eta))``, ``d = x1 - x2``.

    Zeros of this even function of ``z`` are the zeros of ``det L``.
    """
    d = x1 - x2
    sz, se, sp, sm, a, b = sigma(np.array([z, eta, z + d, z - d, d - eta, -d - eta], dtype=complex), lattice)
    return complex(f1 * f2 * sz**2 / se**2 - f3**2 * sp * sm / (a * b))


@dataclass(frozen=True)
class Z0Solution:
    z0: complex
    residual: float
    newton_iterations: int
    paired_root: complex
    paired_residual: float

    def to_json(self) -> dict:
        return {
            "z0": [self.z0.real, self.z0.imag],
            "residual": self.residual,
            "newton_iterations": self.newton_iterations,
            "paired_root": [self.paired_root.real, self.paired_root.imag],
            "paired_residual": self.paired_residual,
        }


class NewtonDivergence(RuntimeError):
    pass


def _newton(g, z, tol=1e-10, max_iter=50, h=1e-7):
    """Complex Newton iteration with a central-difference derivative."""
    for it in range(1, max_iter + 1):
        val = g(z)
        if abs(val) < tol:
            # one polishing step; kept only if it helps
            deriv = (g(z + h) - g(z - h)) / (2 * h)
            if deriv != 0 and cmath.isfinite(deriv):
                znew = z - val / deriv
                vnew = g(znew)
                if abs(vnew) < abs(val):
                    return znew, abs(vnew), it
            return z, abs(val), it - 1
        deriv = (g(z + h) - g(z - h)) / (2 * h)
        if deriv == 0 or not cmath.isfinite(deriv):
            raise NewtonDivergence(f"vanishing derivative at z={z}")
        z = z - val / deriv
        if not cmath.isfinite(z):
            raise NewtonDivergence("Newton iterate left the finite plane")
    val = abs(g(z))
    if val < tol:
        return z, val, max_iter
    raise NewtonDivergence(f"no convergence after {max_iter} iterations (|g|={val:.3g})")


_KICKS = (0, 1e-3 * (1 + 1j), 1e-3 * (1 - 1j), 1e-2 * (1 + 1j), 1e-2 * (1 - 1j))


def _newton_with_restarts(g, z, tol):
    """Newton from ``z``, then from slightly displaced starts.

    On the real slice the root pair ``+-z0`` can collide at a half-period and
    leave the symmetry line it travelled on; Newton seeded on that line cannot
    follow, so the displaced starts break the symmetry.
    """
    err = None
    for kick in _KICKS:
        try:
            znew, _, its = _newton(g, z + kick, tol=tol)
            return znew, its
        except NewtonDivergence as exc:
            err = exc
    raise err


def solve_z0(
    x1, x2, f1, f2, f3, eta, lattice: Lattice, initial_guess: complex | None = None,
    tol: float = 1e-10, continuation_steps: int = 8,
) -> Z0Solution:
    """Root of :func:`det_condition_n2` connected to ``eta``.

    Without an ``initial_guess`` the root is tracked from ``z0 = eta`` (where
    ``f3^2 = f1 f2``) along ``f3^2 -> f3^2_target`` in ``continuation_steps``
    Newton solves. A supplied guess is polished directly.
    """
    target = complex(f3) ** 2
    total_iters = 0
    if initial_guess is None:
        z = complex(eta)
        start = complex(f1) * complex(f2)
        s, ds = 0.0, 1.0 / continuation_steps
        while s < 1.0:
            s_new = min(1.0, s + ds)
            sq = start + (target - start) * s_new
            g = lambda u, sq=sq: det_condition_n2(x1, x2, f1, f2, cmath.sqrt(sq), eta, u, lattice)  # noqa: E731
            try:
                z, its = _newton_with_restarts(g, z, tol)
            except NewtonDivergence:
                ds /= 2
                if ds < 1e-4:
                    raise
                continue
            total_iters += its
            s = s_new
    else:
        z = complex(initial_guess)
    g = lambda u: det_condition_n2(x1, x2, f1, f2, f3, eta, u, lattice)  # noqa: E731
    z, its = _newton_with_restarts(g, z, tol)
    total_iters += its
    res = abs(g(z))
    if lattice.mode != "rational" and float(lattice.distance_to_lattice(z)) < 1e-8:
        raise PoleError("z0 collided with a lattice point")
    if z.real < -1e-12:
        z = -z
    return Z0Solution(z, abs(g(z)), total_iters, -z, abs(g(-z)))


def f3_squared_from_z0(x1, x2, f1, f2, z0, eta, lattice: Lattice) -> complex:
    """Solve ``det_condition_n2(z0) = 0`` for ``f3^2``."""
    s = lambda u: complex(sigma(u, lattice))  # noqa: E731
    d = x1 - x2
    coef = s(z0 + d) * s(z0 - d)
    if abs(coef) < 1e-14:
        raise PoleError("z0 coincides with +-(x1 - x2); f3 is undetermined")
    return f1 * f2 * s(z0) ** 2 / s(eta) ** 2 * s(d - eta) * s(-d - eta) / coef


def f3_from_z0(state: N2LeafState, lattice: Lattice) -> complex:
    """Principal square root of :func:`f3_squared_from_z0` for a leaf state."""
    return cmath.sqrt(f3_squared_from_z0(state.x1, state.x2, state.f1, state.f2, state.z0, state.eta, lattice))


# ----------------------------------------------------------------------
# isospectrality


def spectral_invariants(sample: LaxSample, orders) -> list[complex]:
    """``tr(L^k)`` for each requested ``k``."""
    out = []
    for k in orders:
        out.append(complex(np.trace(np.linalg.matrix_power(sample.matrix, int(k)))))
    return out


def lax_of(state, z, branch, lattice: Lattice) -> LaxSample:
    if isinstance(state, SpinState):
        return lax_spin(state, z, branch, lattice)
    if isinstance(state, RSState):
        return lax_rs(state, z, branch, lattice)
    raise TypeError(f"no Lax matrix for {type(state).__name__}")


@dataclass(frozen=True)
class DriftReport:
    z: complex
    orders: tuple
    drift: float
    per_time: list
    skipped: list

    def to_json(self) -> dict:
        return {
            "z": [self.z.real, self.z.imag],
            "orders": list(self.orders),
            "drift": self.drift,
            "per_time": self.per_time,
            "skipped": self.skipped,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def isospectral_drift(trajectory: Trajectory, z, branch: BranchDatum, orders, lattice: Lattice,
                      report: bool = False):
    """Largest relative change of ``tr(L^k)`` along ``trajectory``.

    Snapshots where the Lax matrix hits a pole are skipped and listed in the
    report.
    """
    orders = tuple(orders)
    ref = spectral_invariants(lax_of(trajectory.states[0], z, branch, lattice), orders)
    per_time, skipped = [], []
    worst = 0.0
    for t, st in zip(trajectory.times, trajectory.states):
        try:
            cur = spectral_invariants(lax_of(st, z, branch, lattice), orders)
        except PoleError:
            skipped.append(float(t))
            continue
        d = max(abs(c - r) / abs(r) if r != 0 else abs(c) for c, r in zip(cur, ref))
        per_time.append(float(d))
        worst = max(worst, d)
    if report:
        return DriftReport(complex(z), orders, worst, per_time, skipped)
    return worst
