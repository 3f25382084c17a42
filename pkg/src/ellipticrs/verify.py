"""Machine checks of the N=2 symplectic form, its flow and the surrounding identities.

Each suite returns a :class:`VerificationReport`. A report is a list of named
checks; every check carries its own residual and tolerance, and the report
passes exactly when every check does. The headline ``max_residual`` is the
largest ``residual / tolerance`` ratio, so ``pass <=> max_residual < 1``.
"""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as dyn
from .dynamics import (
    IntegrationError,
    N2LeafState,
    RSState,
    SpinState,
    Trajectory,
    bind,
    integrate,
    n2_flow_rhs,
    rs_rhs,
    spin_from_leaf,
    spin_rs_rhs,
)
from .lattice import (
    BranchDatum,
    Lattice,
    PoleError,
    sigma,
    sigma_three_term_residual,
    v_potential,
    wp,
    zeta_sigma_residual,
    zeta_w,
)
from .lax import (
    det_condition_n2,
    f3_from_z0,
    f3_squared_from_z0,
    isospectral_drift,
    lax_spin,
    solve_z0,
    spectral_invariants,
)

W_CONVENTIONS = ("odd_combination", "two_v_tilde")
DEFAULT_W = "odd_combination"

#: coupling used for the physical (real-slice) trajectory runs
FLOW_ETA = 0.3j


# ----------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class Check:
    name: str
    residual: float
    tolerance: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.residual < self.tolerance)

    def to_json(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tolerance": self.tolerance,
                "pass": self.passed, "note": self.note}


@dataclass(frozen=True)
class VerificationReport:
    suite: str
    checks: list
    seed: int | None = None
    convention: str | None = None
    runtime_ms: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max((c.residual / c.tolerance for c in self.checks), default=0.0)

    @property
    def tolerance(self) -> float:
        return 1.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "pass": self.passed,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "seed": self.seed,
            "convention": self.convention,
            "runtime_ms": self.runtime_ms,
            "checks": [c.to_json() for c in self.checks],
            "details": _jsonable(self.details),
        }

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.checks:
            flag = "PASS" if c.passed else "FAIL"
            out.append(f"[{flag}] {self.suite}/{c.name}: {c.residual:.3e} (tol {c.tolerance:.1e})")
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = 1e3 * (time.perf_counter() - self.t0)


# ----------------------------------------------------------------------
# the two-form of the N=2 theorem


@dataclass(frozen=True)
class TwoFormN2:
    """Antisymmetric 4x4 coefficients in coordinates ``(x1, x2, ln f1, ln f2)``.

    ``omega = 1/2 sum_ab matrix[a, b] dy_a ^ dy_b``.
    """

    matrix: np.ndarray
    convention: str
    w: complex


def leaf_w(delta, z0, lattice: Lattice, convention: str = DEFAULT_W) -> complex:
    """The ``dx1 ^ dx2`` coefficient of the leaf form."""
    if convention == "odd_combination":
        return complex(zeta_w(delta + z0, lattice) + zeta_w(delta - z0, lattice) - 2 * zeta_w(delta, lattice))
    if convention == "two_v_tilde":
        return complex(2 * (zeta_w(delta + z0, lattice) - zeta_w(delta, lattice)))
    raise ValueError(f"unknown W convention {convention!r}")


def two_form_n2(state: N2LeafState, lattice: Lattice, convention: str = DEFAULT_W,
                w: complex | None = None) -> TwoFormN2:
    """``-dln f1 ^ dx1 - dln f2 ^ dx2 + W dx1 ^ dx2``.

    ``w`` overrides the coefficient (``w=0`` gives the canonical form).
    """
    if w is None:
        w = leaf_w(state.delta, state.z0, lattice, convention)
    m = np.zeros((4, 4), dtype=complex)
    m[0, 2] = m[1, 3] = 1.0
    m[0, 1] = w
    m = m - m.T
    return TwoFormN2(m, convention, complex(w))


def hamiltonian_vector_field(matrix: np.ndarray, dH: np.ndarray) -> np.ndarray:
    """Solve ``omega(X, .) = dH``, i.e. ``matrix^T X = dH``."""
    if abs(np.linalg.det(matrix)) < 1e-12:
        raise np.linalg.LinAlgError("degenerate two-form")
    return np.linalg.solve(matrix.T, dH)


def symplectic_flow(form: TwoFormN2, state: N2LeafState) -> N2LeafState:
    """Hamiltonian vector field of ``H = f1 + f2`` for ``form``, as ``(x1', x2', f1', f2')``."""
    dH = np.array([0, 0, state.f1, state.f2], dtype=complex)
    X = hamiltonian_vector_field(form.matrix, dH)
    return N2LeafState(X[0], X[1], state.f1 * X[2], state.f2 * X[3], state.z0, state.eta)


def symplectic_rhs(state: N2LeafState, lattice: Lattice, convention: str = DEFAULT_W) -> N2LeafState:
    return symplectic_flow(two_form_n2(state, lattice, convention), state)


def closedness_residual(state: N2LeafState, lattice: Lattice, convention: str = DEFAULT_W,
                        h: float = 1e-5) -> float:
    """Largest component of ``d(omega)`` by central differences in ``(x1, x2, u1, u2)``."""
    y0 = np.array([state.x1, state.x2, np.log(state.f1), np.log(state.f2)])

    def coeffs(y):
        st = N2LeafState(y[0], y[1], np.exp(y[2]), np.exp(y[3]), state.z0, state.eta)
        return two_form_n2(st, lattice, convention).matrix

    grads = []
    for a in range(4):
        e = np.zeros(4)
        e[a] = h
        grads.append((coeffs(y0 + e) - coeffs(y0 - e)) / (2 * h))
    worst = 0.0
    for a, b, c in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        comp = grads[a][b, c] + grads[b][c, a] + grads[c][a, b]
        worst = max(worst, abs(comp))
    return worst


# ----------------------------------------------------------------------
# the general-N spinless form


def general_n_form(state: RSState, lattice: Lattice, v_sign: float = 1.0) -> np.ndarray:
    """Coefficients of ``sum dln f_i ^ dx_i + v_sign * sum_{i != j} V(x_i - x_j) dx_i ^ dx_j``.

    Coordinates are ``(x_1..x_N, ln f_1..ln f_N)``. ``v_sign=1`` is the form
    as written; ``v_sign=-1`` is the form obtained by rewriting the canonical
    ``sum dp_i ^ dx_i`` in the ``(x, ln f)`` chart.
    """
    n = state.n
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for i in range(n):
        m[n + i, i] = 1.0
        m[i, n + i] = -1.0
        for j in range(n):
            if i != j:
                vij = complex(v_potential(state.x[i] - state.x[j], state.eta, lattice))
                m[i, j] += v_sign * vij
                m[j, i] -= v_sign * vij
    return m


def general_n_form_rhs(state: RSState, lattice: Lattice, orientation: float = -1.0,
                       v_sign: float = 1.0) -> RSState:
    """Flow of ``H = sum f_i`` for :func:`general_n_form`.

    Solves ``omega(X, .) = orientation * dH``. With ``orientation=-1`` the
    ``dln f ^ dx`` block yields ``x_i' = f_i``.
    """
    n = state.n
    m = general_n_form(state, lattice, v_sign)
    dH = np.concatenate([np.zeros(n), state.f])
    X = hamiltonian_vector_field(m, orientation * dH)
    return RSState(X[:n], state.f * X[n:], state.eta)


def compare_forms_at_spinless_point(x1, x2, f1, f2, eta, lattice: Lattice) -> dict:
    """Coefficient comparison of the leaf form at ``z0 = eta`` with the N=2 general form."""
    leaf = N2LeafState(x1, x2, f1, f2, eta, eta)
    o9 = two_form_n2(leaf, lattice, "odd_combination").matrix
    o7 = general_n_form(RSState([x1, x2], [f1, f2], eta), lattice)
    dxdx = abs(o9[0, 1] - o7[0, 1])
    block_sign = abs(o9[0, 2] + o7[0, 2]) + abs(o9[1, 3] + o7[1, 3])
    global_sign = min(np.max(np.abs(o9 - o7)), np.max(np.abs(o9 + o7)))
    return {"dxdx_mismatch": float(dxdx), "log_block_sign_flip_mismatch": float(block_sign),
            "global_sign_mismatch": float(global_sign), "w": complex(o9[0, 1])}


# ----------------------------------------------------------------------
# identity (8) and the recovered RS system


def identity8_residual(x1, x2, f1, f2, f3, z0, eta, lattice: Lattice) -> float:
    """Relative residual of the identity that follows from the z0 equation.

    ``f1 f2 (2z(d) + z(z0-d) - z(z0+d)) = f3^2 (2z(d) + z(eta-d) - z(eta+d))``
    """
    d = x1 - x2
    z = lambda u: complex(zeta_w(u, lattice))  # noqa: E731
    lhs = f1 * f2 * (2 * z(d) + z(z0 - d) - z(z0 + d))
    rhs = f3**2 * (2 * z(d) + z(eta - d) - z(eta + d))
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


def rs_acceleration_n2(x1, x2, f3sq, eta, lattice: Lattice) -> complex:
    """``x1'' = f3^2 (2 z(d) + z(eta - d) - z(eta + d))``; ``x2'' = -x1''``."""
    d = x1 - x2
    z = lambda u: complex(zeta_w(u, lattice))  # noqa: E731
    return f3sq * (2 * z(d) + z(eta - d) - z(eta + d))


# ----------------------------------------------------------------------
# random inputs


def random_leaf_inputs(rng: np.random.Generator, eta=None):
    """``(x1, x2, f1, f2, f3, eta)`` drawn from the verification distribution.

    ``x1 - x2`` uniform in [0.2, 0.8], ``f1, f2`` in [0.5, 2],
    ``f3^2 / (f1 f2)`` in [0.1, 0.9]. ``eta`` is drawn from a generic complex
    box unless given.
    """
    d = rng.uniform(0.2, 0.8)
    x2 = rng.uniform(-0.5, 0.5)
    f1, f2 = rng.uniform(0.5, 2.0, 2)
    ratio = rng.uniform(0.1, 0.9)
    if eta is None:
        eta = complex(rng.uniform(-0.3, 0.3), rng.uniform(0.2, 0.5))
    return x2 + d, x2, f1, f2, math.sqrt(ratio * f1 * f2), complex(eta)


def _backends():
    return {
        "elliptic": Lattice.rectangular(1.0, 1.0),
        "trigonometric": Lattice.trigonometric(1.0),
        "rational": Lattice.rational(),
    }


def _cell_point(rng, size=None):
    # fundamental cell of the omega1=1, omega3=i lattice; reused as a box for the degenerations
    return rng.uniform(-1, 1, size) + 1j * rng.uniform(-1, 1, size)


# ----------------------------------------------------------------------
# suites


def elliptic_identities(seed: int = 0, samples: int = 1000, tol: float = 1e-10) -> VerificationReport:
    """Three-term sigma identity and the zeta-sigma identity on every backend."""
    checks = []
    with _Timer() as tm:
        for name, lat in _backends().items():
            rng = np.random.default_rng(seed)
            worst3 = worstz = 0.0
            for _ in range(samples):
                a, b, c, d = _cell_point(rng, 4)
                worst3 = max(worst3, sigma_three_term_residual(a, b, c, d, lat, relative=True))
                worstz = max(worstz, zeta_sigma_residual(a, b, c, lat, relative=True))
            checks.append(Check(f"{name}/three_term_sigma", worst3, tol))
            checks.append(Check(f"{name}/zeta_sigma", worstz, tol))
    return VerificationReport("elliptic-identities", checks, seed, runtime_ms=tm.ms)


def function_theory(seed: int = 0, points: int = 100) -> VerificationReport:
    """Parity, derivative consistency, quasi-periodicity and the Legendre relation."""
    checks = []
    h = 1e-5
    with _Timer() as tm:
        for name, lat in _backends().items():
            rng = np.random.default_rng(seed)
            z = _cell_point(rng, points) * 0.9
            z = z[np.abs(z) > 0.05]
            s, zt, p = sigma(z, lat), zeta_w(z, lat), wp(z, lat)
            par = max(
                np.max(np.abs(sigma(-z, lat) + s) / np.abs(s)),
                np.max(np.abs(zeta_w(-z, lat) + zt) / np.abs(zt)),
                np.max(np.abs(wp(-z, lat) - p) / np.abs(p)),
            )
            checks.append(Check(f"{name}/parity", float(par), 1e-12))
            dlog = np.log(sigma(z + h, lat) / sigma(z - h, lat)) / (2 * h)
            dz = (zeta_w(z + h, lat) - zeta_w(z - h, lat)) / (2 * h)
            e1 = np.max(np.abs(dlog - zt) / np.maximum(1, np.abs(zt)))
            e2 = np.max(np.abs(dz + p) / np.maximum(1, np.abs(p)))
            checks.append(Check(f"{name}/dlogsigma_is_zeta", float(e1), 1e-8))
            checks.append(Check(f"{name}/dzeta_is_minus_wp", float(e2), 1e-8))
            if name == "elliptic":
                q1 = np.abs(sigma(z + 2 * lat.omega1, lat) / (-s * np.exp(2 * lat.eta1 * (z + lat.omega1))) - 1)
                q3 = np.abs(sigma(z + 2 * lat.omega3, lat) / (-s * np.exp(2 * lat.eta3 * (z + lat.omega3))) - 1)
                checks.append(Check(f"{name}/quasi_periodicity", float(max(q1.max(), q3.max())), 1e-10))
                checks.append(Check(f"{name}/legendre", lat.legendre_residual(), 1e-12))
        skew = Lattice("elliptic", 1.0, 0.3 + 0.8j)
        checks.append(Check("skew_lattice/legendre", skew.legendre_residual(), 1e-12))
    return VerificationReport("function-theory", checks, seed, runtime_ms=tm.ms)


def degeneration(grid=None, periods=(5.0, 10.0, 20.0), tol: float = 1e-8) -> VerificationReport:
    """Elliptic sigma/zeta approach the trigonometric forms as ``omega3 = iT`` grows."""
    if grid is None:
        re = np.linspace(-0.9, 0.9, 7)
        im = np.linspace(-0.6, 0.6, 5)
        grid = (re[:, None] + 1j * im[None, :]).ravel()
        grid = grid[np.abs(grid) > 0.1]
    trig = Lattice.trigonometric(1.0)
    errs = []
    with _Timer() as tm:
        for T in periods:
            ell = Lattice("elliptic", 1.0, 1j * T)
            es = np.max(np.abs(sigma(grid, ell) - sigma(grid, trig)) / np.abs(sigma(grid, trig)))
            ez = np.max(np.abs(zeta_w(grid, ell) - zeta_w(grid, trig)) / np.abs(zeta_w(grid, trig)))
            errs.append(float(max(es, ez)))
    # error must not grow with T beyond rounding
    growth = max((b - a for a, b in zip(errs, errs[1:])), default=0.0)
    checks = [
        Check(f"T={periods[-1]:g}/max_rel_error", errs[-1], tol),
        Check("monotone_nonincreasing", max(growth, 0.0), 1e-15, "largest increase between successive T"),
    ]
    return VerificationReport("degeneration", checks, details={"periods": list(periods), "errors": errs},
                              runtime_ms=tm.ms)


def identity_8(seed: int = 0, samples: int = 500, tol: float = 1e-9) -> VerificationReport:
    """Identity (8) at solver-produced z0 on every backend."""
    checks = []
    with _Timer() as tm:
        for name, lat in _backends().items():
            rng = np.random.default_rng(seed)
            worst = worst_det = 0.0
            for _ in range(samples):
                x1, x2, f1, f2, f3, eta = random_leaf_inputs(rng)
                sol = solve_z0(x1, x2, f1, f2, f3, eta, lat)
                worst_det = max(worst_det, sol.residual)
                worst = max(worst, identity8_residual(x1, x2, f1, f2, f3, sol.z0, eta, lat))
            checks.append(Check(f"{name}/identity8", worst, tol))
            checks.append(Check(f"{name}/det_residual", worst_det, 1e-10))
    return VerificationReport("identity-8", checks, seed, runtime_ms=tm.ms)


def spinless_limit_test(x1, x2, f1, f2, eta, lattice: Lattice) -> VerificationReport:
    """Both directions of ``f3^2 = f1 f2 <=> z0 = eta`` plus the form comparison at ``z0 = eta``."""
    with _Timer() as tm:
        f3 = cmath.sqrt(f1 * f2)
        guess = eta + (0.03 + 0.02j) * abs(eta)
        sol = solve_z0(x1, x2, f1, f2, f3, eta, lattice, initial_guess=guess)
        dz = min(abs(sol.z0 - eta), abs(sol.paired_root - eta))
        f3sq = f3_squared_from_z0(x1, x2, f1, f2, eta, eta, lattice)
        cmp = compare_forms_at_spinless_point(x1, x2, f1, f2, eta, lattice)
    checks = [
        Check("z0_equals_eta", dz, 1e-9),
        Check("f3sq_equals_f1f2", abs(f3sq - f1 * f2) / abs(f1 * f2), 1e-9),
        Check("dxdx_coefficients_agree", cmp["dxdx_mismatch"], 1e-12),
        Check("log_blocks_opposite_sign", cmp["log_block_sign_flip_mismatch"], 1e-12),
    ]
    return VerificationReport("spinless-limit-point", checks, details=cmp, runtime_ms=tm.ms)


def z0_chart(seed: int = 0, states: int = 50) -> VerificationReport:
    """Spinless limit on many states, f3 <-> z0 round trip and the rational closed form."""
    checks = []
    with _Timer() as tm:
        lat = Lattice.rectangular()
        rng = np.random.default_rng(seed)
        w_eta = w_f3 = w_rt = w_pair = 0.0
        for _ in range(states):
            x1, x2, f1, f2, f3, eta = random_leaf_inputs(rng)
            rep = spinless_limit_test(x1, x2, f1, f2, eta, lat)
            w_eta = max(w_eta, rep.checks[0].residual)
            w_f3 = max(w_f3, rep.checks[1].residual)
            sol = solve_z0(x1, x2, f1, f2, f3, eta, lat)
            back = cmath.sqrt(f3_squared_from_z0(x1, x2, f1, f2, sol.z0, eta, lat))
            w_rt = max(w_rt, abs(back - f3) / abs(f3))
            w_pair = max(w_pair, sol.paired_residual)
        checks += [
            Check("spinless_z0_equals_eta", w_eta, 1e-9),
            Check("z0_eta_gives_f3sq_f1f2", w_f3, 1e-9),
            Check("f3_z0_round_trip", w_rt, 1e-9),
            Check("paired_root_residual", w_pair, 1e-9),
        ]
        err = rational_closed_form_error()
        checks.append(Check("rational_closed_form", err, 1e-10))
    return VerificationReport("spinless-limit", checks, seed, runtime_ms=tm.ms)


def rational_z0_closed_form(x1, x2, f1, f2, f3, eta) -> complex:
    """Positive-real-part root of the rational z0 equation (a quadratic in z^2)."""
    d = x1 - x2
    c = (d - eta) * (-d - eta)
    z2 = -(f3**2) * d * d * eta * eta / (f1 * f2 * c - f3**2 * eta * eta)
    z = cmath.sqrt(z2)
    return z if z.real >= 0 else -z


def rational_closed_form_error() -> float:
    lat = Lattice.rational()
    cases = [(1.0, 0.0, 1.0, 1.0, math.sqrt(0.5), 0.5), (0.7, 0.1, 1.3, 0.6, 0.5, 0.2 + 0.3j)]
    worst = 0.0
    for x1, x2, f1, f2, f3, eta in cases:
        sol = solve_z0(x1, x2, f1, f2, f3, eta, lat)
        worst = max(worst, abs(sol.z0 - rational_z0_closed_form(x1, x2, f1, f2, f3, eta)))
    return worst


def _random_spin_state(rng, n, eta):
    x = np.sort(rng.uniform(0.0, 1.8, n))
    x = x - x.mean()
    F = rng.uniform(0.5, 1.5, (n, n)).astype(complex)
    return SpinState(x, F, eta)


def _drift_or_partial(state, lattice, sign, t_end, z, orders):
    branch = BranchDatum.at(z, state.eta, lattice)
    ref = spectral_invariants(lax_spin(state, z, branch, lattice), orders)

    def runaway(st):
        # drift far beyond the rejection threshold already settles the run
        try:
            cur = spectral_invariants(lax_spin(st, z, branch, lattice), orders)
        except PoleError:
            return True
        return max(abs(c - r) / abs(r) for c, r in zip(cur, ref)) > 1e-1

    try:
        traj = integrate(bind(spin_rs_rhs, lattice, sign=sign), state, (0.0, t_end),
                         rel_tol=1e-12, abs_tol=1e-14, lattice=lattice, stop_when=runaway)
        note = "" if not traj.terminated else (
            f"{traj.stats['termination_reason']} at t={traj.stats['terminated_at']:.4g}")
    except IntegrationError as exc:
        traj, note = exc.partial, f"integration failed: {exc}"
        if traj is None or len(traj.times) < 2:
            return math.inf, note
    return isospectral_drift(traj, z, branch, orders, lattice), note


def sign_calibration(initial: SpinState, lattice: Lattice, t_end: float = 5.0,
                     z: complex = 0.4 + 0.25j) -> VerificationReport:
    """Select the spin-equation sign under which ``tr L^k`` is conserved.

    Exactly one convention must keep the drift below 1e-8 while the other
    exceeds 1e-3. ``contrast`` records ``1e-3 / drift_rejected`` so that it
    passes when the rejected convention drifts by more than 1e-3.
    """
    orders = range(1, min(initial.n, 3) + 1)
    off = initial.F - np.diag(np.diag(initial.F))
    if np.all(off == 0):
        raise ValueError("diagonal F: both conventions give free motion, state is degenerate")
    with _Timer() as tm:
        drifts, notes = {}, {}
        for conv in dyn.SIGN_CONVENTIONS:
            drifts[conv], notes[conv] = _drift_or_partial(initial, lattice, conv, t_end, z, orders)
    passing = [c for c, d in drifts.items() if d < 1e-8]
    if not passing:
        raise RuntimeError(f"no sign convention is isospectral (drifts {drifts}); check the elliptic core")
    if len(passing) == 2:
        raise ValueError("both conventions isospectral: degenerate initial state")
    chosen = passing[0]
    other = next(c for c in drifts if c != chosen)
    checks = [
        Check("selected_drift", drifts[chosen], 1e-8, chosen),
        Check("contrast", 1e-3 / drifts[other] if drifts[other] > 0 else math.inf, 1.0, other),
        Check("matches_shipped_default", 0.0 if chosen == dyn.CALIBRATED_SIGN else 1.0, 0.5),
    ]
    return VerificationReport(f"sign-calibration/N={initial.n}/{lattice.mode}", checks, convention=chosen,
                              runtime_ms=tm.ms, details={"drifts": drifts, "notes": notes})


def sign_calibration_suite(seed: int = 0) -> VerificationReport:
    """Calibration runs for N=2 and N=3 on the elliptic lattice, N=2 on the rational one."""
    rng = np.random.default_rng(seed)
    ell, rat = Lattice.rectangular(), Lattice.rational()
    reps = [
        sign_calibration(_random_spin_state(rng, 2, FLOW_ETA), ell),
        sign_calibration(_random_spin_state(rng, 3, FLOW_ETA), ell),
        sign_calibration(_random_spin_state(rng, 2, FLOW_ETA), rat),
    ]
    return _merge("sign-calibration", reps, seed, convention=reps[0].convention)


def isospectral_suite(seed: int = 0) -> VerificationReport:
    """Isospectral drift of the calibrated spin flow (N=2: k<=2, N=3: k<=3) and the spinless flow."""
    rng = np.random.default_rng(seed + 1)
    lat = Lattice.rectangular()
    z = 0.35 - 0.2j
    checks = []
    with _Timer() as tm:
        for n in (2, 3):
            st = _random_spin_state(rng, n, FLOW_ETA)
            tr = integrate(bind(spin_rs_rhs, lat), st, (0, 5), rel_tol=1e-12, abs_tol=1e-14, lattice=lat)
            d = isospectral_drift(tr, z, BranchDatum.at(z, st.eta, lat), range(1, n + 1), lat)
            checks.append(Check(f"spin/N={n}", d, 1e-8))
        rs = RSState([0.5, -0.1, -0.6], [1.1, 0.8, 1.3], FLOW_ETA)
        tr = integrate(bind(rs_rhs, lat), rs, (0, 5), rel_tol=1e-12, abs_tol=1e-14, lattice=lat)
        d = isospectral_drift(tr, z, BranchDatum.at(z, rs.eta, lat), (1, 2, 3), lat)
        checks.append(Check("spinless/N=3", d, 1e-8))
    return VerificationReport("isospectral", checks, seed, convention=dyn.CALIBRATED_SIGN, runtime_ms=tm.ms)


def _merge(suite, reports, seed=None, convention=None):
    checks = []
    details = {}
    for r in reports:
        tag = r.suite.removeprefix(suite + "/")
        checks += [Check(f"{tag}/{c.name}", c.residual, c.tolerance, c.note) for c in r.checks]
        details[r.suite] = r.details
    return VerificationReport(suite, checks, seed, convention, sum(r.runtime_ms for r in reports), details)


# ----------------------------------------------------------------------
# flow equivalence


def leaf_from_inputs(x1, x2, f1, f2, f3, eta, lattice: Lattice) -> N2LeafState:
    sol = solve_z0(x1, x2, f1, f2, f3, eta, lattice)
    return N2LeafState(x1, x2, f1, f2, sol.z0, eta)


def _track_z0(spin_traj: Trajectory, lattice: Lattice, z_start: complex) -> float:
    """Re-solve z0 along a 2x2 spin trajectory, seeding Newton with the previous root."""
    z = z_start
    worst = 0.0
    for st in spin_traj.states:
        F = st.F
        f3 = cmath.sqrt(F[0, 1] * F[1, 0])
        sol = solve_z0(st.x[0], st.x[1], F[0, 0], F[1, 1], f3, st.eta, lattice, initial_guess=z)
        z = sol.z0 if abs(sol.z0 - z) <= abs(sol.paired_root - z) else sol.paired_root
        worst = max(worst, abs(z - z_start))
    return worst


def _leaf_columns(traj: Trajectory) -> np.ndarray:
    rows = []
    for st in traj.states:
        if isinstance(st, N2LeafState):
            rows.append([st.x1, st.x2, st.f1, st.f2])
        else:
            rows.append([st.x[0], st.x[1], st.F[0, 0], st.F[1, 1]])
    return np.array(rows)


def flow_equivalence_test(initial: N2LeafState, lattice: Lattice, t_end: float = 5.0, tol: float = 1e-6,
                          convention: str = DEFAULT_W, rel_tol: float = 1e-12) -> VerificationReport:
    """Integrate the leaf flow, the symplectic flow and the embedded spin flow and compare.

    The three descriptions are (a) :func:`n2_flow_rhs`, (b) :func:`symplectic_rhs`
    with ``convention`` and (c) :func:`spin_rs_rhs` with the calibrated sign on
    the 2x2 spin state with ``f12 = f21 = f3``.
    """
    with _Timer() as tm:
        f3 = f3_from_z0(initial, lattice)
        times = np.linspace(0, t_end, 101)
        kw = dict(rel_tol=rel_tol, abs_tol=rel_tol * 1e-2, sample_times=times, lattice=lattice)
        ta = integrate(bind(n2_flow_rhs, lattice), initial, (0, t_end), **kw)
        tb = integrate(bind(symplectic_rhs, lattice, convention=convention), initial, (0, t_end), **kw)
        spin0 = spin_from_leaf(initial, f3)
        tc = integrate(bind(spin_rs_rhs, lattice), spin0, (0, t_end), **kw)
        ya, yb, yc = _leaf_columns(ta), _leaf_columns(tb), _leaf_columns(tc)
        n = min(len(ya), len(yb), len(yc))
        dab = float(np.max(np.abs(ya[:n] - yb[:n])))
        dac = float(np.max(np.abs(ya[:n] - yc[:n])))
        dbc = float(np.max(np.abs(yb[:n] - yc[:n])))
        h0 = initial.f1 + initial.f2
        energy = max(float(np.max(np.abs(y[:, 2] + y[:, 3] - h0))) / abs(h0) for y in (ya, yb, yc))
        z0_drift = _track_z0(tc, lattice, initial.z0)
        # proof's second-order system along (a): x1'' from the leaf flow vs the RS form with f3^2 recovered from z0
        acc = 0.0
        for st in ta.states:
            d = n2_flow_rhs(st, lattice)
            f3sq = f3_squared_from_z0(st.x1, st.x2, st.f1, st.f2, st.z0, st.eta, lattice)
            target = rs_acceleration_n2(st.x1, st.x2, f3sq, st.eta, lattice)
            acc = max(acc, abs(d.f1 - target) / max(1.0, abs(target)), abs(d.f1 + d.f2))
        det_res = max(abs(det_condition_n2(s.x[0], s.x[1], s.F[0, 0], s.F[1, 1], cmath.sqrt(s.F[0, 1] * s.F[1, 0]),
                                           s.eta, initial.z0, lattice)) for s in tc.states)
    checks = [
        Check("a_vs_b", dab, tol, f"symplectic flow, {convention}"),
        Check("a_vs_c", dac, tol, "spin flow, calibrated sign"),
        Check("b_vs_c", dbc, tol),
        Check("energy_drift", energy, 1e-8),
        Check("z0_drift_along_spin_flow", z0_drift, 1e-8),
        Check("rs_second_order_form", acc, 1e-8),
        Check("det_at_initial_z0_along_spin_flow", det_res, 1e-8),
    ]
    short = [t.stats.get("terminated_at") for t in (ta, tb, tc) if t.terminated]
    if short:
        checks.append(Check("completed_span", 1.0, 0.5, f"pole guard tripped at {short}"))
    details = {"z0": initial.z0, "f3": f3, "stats": [ta.stats, tb.stats, tc.stats]}
    return VerificationReport(f"flow-equivalence/{lattice.mode}", checks, convention=convention,
                              runtime_ms=tm.ms, details=details)


def pointwise_flow_agreement(seed: int = 0, samples: int = 100, convention: str = DEFAULT_W,
                             lattice: Lattice | None = None) -> float:
    """Max relative difference of the symplectic and leaf vector fields over random leaf states."""
    lat = lattice or Lattice.rectangular()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x1, x2, f1, f2, f3, eta = random_leaf_inputs(rng)
        st = leaf_from_inputs(x1, x2, f1, f2, f3, eta, lat)
        a = n2_flow_rhs(st, lat).to_vector()
        b = symplectic_rhs(st, lat, convention).to_vector()
        worst = max(worst, float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a)))))
    return worst


def flow_equivalence_suite(seed: int = 0) -> VerificationReport:
    lat = Lattice.rectangular()
    rng = np.random.default_rng(seed)
    x1, x2, f1, f2, f3, _ = random_leaf_inputs(rng)
    leaf = leaf_from_inputs(x1, x2, f1, f2, f3, FLOW_ETA, lat)
    rep = flow_equivalence_test(leaf, lat)
    checks = list(rep.checks)
    checks.insert(0, Check("pointwise_odd_combination", pointwise_flow_agreement(seed), 1e-12))
    two = pointwise_flow_agreement(seed, 20, "two_v_tilde")
    closed = max(closedness_residual(leaf, lat, c) for c in W_CONVENTIONS)
    checks.append(Check("closedness", closed, 1e-8))
    details = dict(rep.details, two_v_tilde_pointwise_mismatch=two)
    return VerificationReport("flow-equivalence", checks, seed, rep.convention, rep.runtime_ms, details)


def general_n_spinless_form_check(state: RSState, lattice: Lattice, t_end: float, tol: float,
                                  rel_tol: float = 1e-12) -> VerificationReport:
    """Hamiltonian flow of the general-N spinless form vs direct integration of the RS equations.

    The form is used as written. Both orientations of the Hamiltonian
    vector field are tried and the better one is reported; the
    sign-corrected form (``v_sign=-1``) is integrated as a diagnostic.
    """
    with _Timer() as tm:
        times = np.linspace(0, t_end, 61)
        kw = dict(rel_tol=rel_tol, abs_tol=rel_tol * 1e-2, sample_times=times, lattice=lattice)
        ref = integrate(bind(rs_rhs, lattice), state, (0, t_end), **kw)
        yr = ref.vectors()

        def deviation(orientation, v_sign):
            try:
                tr = integrate(bind(general_n_form_rhs, lattice, orientation=orientation, v_sign=v_sign),
                               state, (0, t_end), **kw)
            except IntegrationError as exc:
                tr = exc.partial
            y = tr.vectors()
            n = min(len(y), len(yr))
            dev = float(np.max(np.abs(y[:n] - yr[:n])))
            return dev if n == len(yr) else math.inf

        as_written = {o: deviation(o, 1.0) for o in (-1.0, 1.0)}
        corrected = deviation(-1.0, -1.0)
        best = min(as_written, key=as_written.get)
    checks = [Check("form_as_written_vs_rs", as_written[best], tol, f"orientation {best:+g}")]
    details = {
        "as_written": {f"{k:+g}": v for k, v in as_written.items()},
        "sign_corrected_form": corrected,
        "sign_relation": "time orientation -1 (x' = f)" if best < 0 else "time orientation +1 (x' = -f)",
    }
    return VerificationReport(f"form-general-n/N={state.n}/{lattice.mode}", checks, runtime_ms=tm.ms,
                              details=details)


def form_general_n_suite(seed: int = 0) -> VerificationReport:
    """General-N form (N=2 rational, N=3 elliptic) plus the coefficient comparison at ``z0 = eta``."""
    rng = np.random.default_rng(seed)
    reps = [
        general_n_spinless_form_check(RSState([0.45, -0.35], [1.2, 0.7], FLOW_ETA), Lattice.rational(), 3.0, 1e-8),
        general_n_spinless_form_check(RSState([0.6, 0.0, -0.7], [0.9, 1.3, 0.8], FLOW_ETA), Lattice.rectangular(),
                                      2.0, 1e-6),
    ]
    merged = _merge("form-general-n", reps, seed)
    x1, x2, f1, f2, _, eta = random_leaf_inputs(rng)
    cmp = compare_forms_at_spinless_point(x1, x2, f1, f2, eta, Lattice.rectangular())
    merged.checks.append(Check("leaf_form_vs_general_form_global_sign", cmp["global_sign_mismatch"], 1e-12))
    merged.details["coefficient_comparison"] = cmp
    return merged


def rational_limit_check(initial: N2LeafState, lam: float = 2.5, t_end: float = 5.0) -> VerificationReport:
    """Rational backend: flow equivalence plus invariance under ``f12 -> f12/lam, f21 -> f21*lam``."""
    lat = Lattice.rational()
    with _Timer() as tm:
        eq = flow_equivalence_test(initial, lat, t_end, tol=1e-6)
        f3 = f3_from_z0(initial, lat)
        times = np.linspace(0, t_end, 101)
        kw = dict(rel_tol=1e-12, abs_tol=1e-14, sample_times=times, lattice=lat)
        base = integrate(bind(spin_rs_rhs, lat), spin_from_leaf(initial, f3, f3), (0, t_end), **kw)
        same = integrate(bind(spin_rs_rhs, lat), spin_from_leaf(initial, f3, f3 * 1.0), (0, t_end), **kw)
        scaled = integrate(bind(spin_rs_rhs, lat), spin_from_leaf(initial, f3, f3 / lam), (0, t_end), **kw)
        y0, y1, y2 = _leaf_columns(base), _leaf_columns(same), _leaf_columns(scaled)
        prod = max(abs(a.F[0, 1] * a.F[1, 0] - b.F[0, 1] * b.F[1, 0]) for a, b in zip(base.states, scaled.states))
        z_base = _track_z0(base, lat, initial.z0)
        z_scaled = _track_z0(scaled, lat, initial.z0)
        spinless = RSState([initial.x1, initial.x2], [initial.f1, initial.f2], initial.eta)
        leaf_sl = leaf_from_inputs(initial.x1, initial.x2, initial.f1, initial.f2,
                                   cmath.sqrt(initial.f1 * initial.f2), initial.eta, lat)
        ra = integrate(bind(rs_rhs, lat), spinless, (0, t_end), **kw)
        la = integrate(bind(n2_flow_rhs, lat), leaf_sl, (0, t_end), **kw)
        sl_dev = float(np.max(np.abs(ra.vectors() - _leaf_columns(la))))
    checks = [Check(f"equivalence/{c.name}", c.residual, c.tolerance, c.note) for c in eq.checks]
    checks += [
        Check("lambda_1_bitwise", float(np.max(np.abs(y0 - y1))), 1e-300, "exact equality"),
        Check("lambda_scaled_trajectories", float(np.max(np.abs(y0 - y2))), 1e-10, f"lambda={lam}"),
        Check("f12f21_invariant", float(prod), 1e-10),
        Check("z0_invariant", max(z_base, z_scaled), 1e-10),
        Check("spinless_vs_rs", sl_dev, 1e-9),
    ]
    return VerificationReport("rational-limit", checks, convention=eq.convention, runtime_ms=tm.ms,
                              details={"lambda": lam})


def rational_limit_suite(seed: int = 0) -> VerificationReport:
    rng = np.random.default_rng(seed)
    x1, x2, f1, f2, f3, _ = random_leaf_inputs(rng)
    leaf = leaf_from_inputs(x1, x2, f1, f2, f3, FLOW_ETA, Lattice.rational())
    rep = rational_limit_check(leaf)
    return VerificationReport("rational-limit", rep.checks, seed, rep.convention, rep.runtime_ms, rep.details)


SUITES = {
    "elliptic-identities": elliptic_identities,
    "function-theory": function_theory,
    "identity-8": identity_8,
    "isospectral": isospectral_suite,
    "flow-equivalence": flow_equivalence_suite,
    "spinless-limit": z0_chart,
    "form-general-n": form_general_n_suite,
    "rational-limit": rational_limit_suite,
    "sign-calibration": sign_calibration_suite,
    "degeneration": lambda seed=0: degeneration(),
}


def run_suites(names, seed: int = 0) -> list[VerificationReport]:
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suites: {', '.join(unknown)}")
    return [SUITES[n](seed=seed) for n in sorted(names)]
