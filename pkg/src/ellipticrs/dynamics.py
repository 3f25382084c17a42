"""Equations of motion for the spinless and spin RS systems and the N=2 leaf flow.

Every right-hand side takes a state and returns an object of the same type
whose fields hold the time derivatives. :func:`integrate` flattens states to
complex vectors and drives scipy's DOP853 pair step by step.
"""
from __future__ import annotations

import time as _time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853

from .lattice import Lattice, PoleError, sigma, v_potential, zeta_w

#: sign applied to the printed right-hand side of the spin equations
SIGN_CONVENTIONS = {"printed": 1.0, "flipped": -1.0}

#: convention selected by the isospectrality calibration (see verify.sign_calibration)
CALIBRATED_SIGN = "flipped"

#: separation below which integration is stopped
POLE_GUARD = 1e-6


class IntegrationError(RuntimeError):
    """Integrator failure (step-size underflow or non-finite state).

    ``partial`` holds the samples produced before the failure, when any.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


def _cvec(a, n=None):
    a = np.atleast_1d(np.asarray(a, dtype=complex)).copy()
    if n is not None and a.shape != (n,):
        raise ValueError(f"expected {n} entries, got shape {a.shape}")
    return a


def _pair_poles(diffs, shifts, lattice):
    """Smallest distance of ``diffs + shift`` to the lattice over all shifts."""
    if len(diffs) == 0:
        return np.inf
    return min(float(np.min(lattice.distance_to_lattice(diffs + s))) for s in shifts)


# ----------------------------------------------------------------------
# states


@dataclass(frozen=True)
class RSState:
    """Spinless state: positions ``x`` and the quantities ``f`` (velocities)."""

    x: np.ndarray
    f: np.ndarray
    eta: complex

    def __post_init__(self):
        x = _cvec(self.x)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f", _cvec(self.f, len(x)))
        object.__setattr__(self, "eta", complex(self.eta))

    @property
    def n(self) -> int:
        return len(self.x)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.f])

    @classmethod
    def from_vector(cls, y, like: RSState) -> RSState:
        n = like.n
        return cls(y[:n], y[n:], like.eta)

    def min_separation(self, lattice: Lattice) -> float:
        i, j = np.triu_indices(self.n, 1)
        d = self.x[i] - self.x[j]
        return _pair_poles(d, (0, self.eta, -self.eta), lattice)

    def to_json(self) -> dict:
        return {"x": _enc(self.x), "f": _enc(self.f), "eta": _enc(self.eta)}

    @classmethod
    def from_json(cls, obj: dict) -> RSState:
        return cls(_dec(obj["x"]), _dec(obj["f"]), _dec(obj["eta"]))

    def columns(self):
        return [f"x{i + 1}" for i in range(self.n)] + [f"f{i + 1}" for i in range(self.n)]


@dataclass(frozen=True)
class SpinState:
    """Spin state: positions ``x`` and the interaction matrix ``F`` with ``F[i, j] = f_ij``."""

    x: np.ndarray
    F: np.ndarray
    eta: complex

    def __post_init__(self):
        x = _cvec(self.x)
        F = np.array(self.F, dtype=complex)
        if F.shape != (len(x), len(x)):
            raise ValueError(f"F must be {len(x)}x{len(x)}, got {F.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "eta", complex(self.eta))

    @property
    def n(self) -> int:
        return len(self.x)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.F.ravel()])

    @classmethod
    def from_vector(cls, y, like: SpinState) -> SpinState:
        n = like.n
        return cls(y[:n], y[n:].reshape(n, n), like.eta)

    def min_separation(self, lattice: Lattice) -> float:
        i, j = np.triu_indices(self.n, 1)
        d = self.x[i] - self.x[j]
        return _pair_poles(d, (0, self.eta, -self.eta), lattice)

    def to_json(self) -> dict:
        return {"x": _enc(self.x), "F": [_enc(r) for r in self.F], "eta": _enc(self.eta)}

    @classmethod
    def from_json(cls, obj: dict) -> SpinState:
        return cls(_dec(obj["x"]), np.array([_dec(r) for r in obj["F"]]), _dec(obj["eta"]))

    def columns(self):
        n = self.n
        return [f"x{i + 1}" for i in range(n)] + [
            f"f{i + 1}{j + 1}" for i in range(n) for j in range(n)
        ]


@dataclass(frozen=True)
class N2LeafState:
    """Two-particle spin state in the chart ``(x1, x2, f1, f2)`` at fixed ``z0``."""

    x1: complex
    x2: complex
    f1: complex
    f2: complex
    z0: complex
    eta: complex

    def __post_init__(self):
        for k in ("x1", "x2", "f1", "f2", "z0", "eta"):
            object.__setattr__(self, k, complex(getattr(self, k)))

    @property
    def delta(self) -> complex:
        return self.x1 - self.x2

    def to_vector(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.f1, self.f2], dtype=complex)

    @classmethod
    def from_vector(cls, y, like: N2LeafState) -> N2LeafState:
        return cls(y[0], y[1], y[2], y[3], like.z0, like.eta)

    def min_separation(self, lattice: Lattice) -> float:
        d = np.array([self.delta])
        return _pair_poles(d, (0, self.z0, -self.z0), lattice)

    def to_json(self) -> dict:
        return {k: _enc(getattr(self, k)) for k in ("x1", "x2", "f1", "f2", "z0", "eta")}

    @classmethod
    def from_json(cls, obj: dict) -> N2LeafState:
        return cls(*(_dec(obj[k]) for k in ("x1", "x2", "f1", "f2", "z0", "eta")))

    def columns(self):
        return ["x1", "x2", "f1", "f2"]


def _enc(v):
    a = np.asarray(v, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [[float(c.real), float(c.imag)] for c in a]


def _dec(v):
    if len(v) == 2 and not isinstance(v[0], (list, tuple)):
        return complex(v[0], v[1])
    return np.array([complex(a, b) for a, b in v])


# ----------------------------------------------------------------------
# Hamiltonian data


def momenta_to_f(p, x, eta, lattice: Lattice, return_diagnostics: bool = False):
    """``f_i = exp(p_i) * prod_{s != i} sqrt(s(x_is+eta) s(x_is-eta) / s(x_is)^2)``.

    Each square root is the principal branch. With ``return_diagnostics`` the
    pairs ``(i, s)`` whose radicand sits on the negative real axis (the cut)
    are returned as well.
    """
    p = _cvec(p)
    x = _cvec(x, len(p))
    f = np.exp(p)
    on_cut = []
    for i in range(len(x)):
        for s in range(len(x)):
            if s == i:
                continue
            d = x[i] - x[s]
            lattice.check_off_lattice(d, "particle separation")
            ratio = complex(sigma(d + eta, lattice) * sigma(d - eta, lattice) / sigma(d, lattice) ** 2)
            if ratio.real < 0 and abs(ratio.imag) <= 1e-14 * abs(ratio):
                on_cut.append((i, s))
            f[i] *= np.sqrt(ratio)
    if return_diagnostics:
        return f, {"branch_cut_pairs": on_cut}
    return f


def hamiltonian(state) -> complex:
    """``sum f_i`` for :class:`RSState`, ``trace F`` for :class:`SpinState`, ``f1 + f2`` on the leaf."""
    if isinstance(state, RSState):
        return complex(np.sum(state.f))
    if isinstance(state, SpinState):
        return complex(np.trace(state.F))
    if isinstance(state, N2LeafState):
        return state.f1 + state.f2
    raise TypeError(f"no Hamiltonian for {type(state).__name__}")


def _v_matrix(x, eta, lattice):
    """``Vm[i, k] = V(x_i - x_k)`` off the diagonal, zero on it."""
    n = len(x)
    vm = np.zeros((n, n), dtype=complex)
    if n > 1:
        i, k = np.where(~np.eye(n, dtype=bool))
        vm[i, k] = v_potential(x[i] - x[k], eta, lattice)
    return vm


def rs_rhs(state: RSState, lattice: Lattice) -> RSState:
    """Spinless equations in first-order form.

    ``x_i' = f_i`` and ``f_i' = sum_{s != i} f_i f_s (V(x_s - x_i) - V(x_i - x_s))``.
    """
    vm = _v_matrix(state.x, state.eta, lattice)
    acc = state.f * ((vm.T - vm) @ state.f)
    return RSState(state.f, acc, state.eta)


def spin_rs_rhs(state: SpinState, lattice: Lattice, sign: str = CALIBRATED_SIGN) -> SpinState:
    """Spin equations ``x_i' = f_ii`` and ``f_ij' = s * (sum_k ... - sum_k ...)``.

    With ``sign="printed"`` (s = +1)::

        f_ij' = sum_{k != j} f_ik f_kj V(x_j - x_k) - sum_{k != i} f_ik f_kj V(x_k - x_i)

    and ``sign="flipped"`` negates the bracket. Written as a commutator this is
    ``s * [F, F o Vm^T]`` with ``Vm[i, k] = V(x_i - x_k)``.
    """
    s = SIGN_CONVENTIONS[sign]
    F = state.F
    vm = _v_matrix(state.x, state.eta, lattice)
    G = F * vm.T
    dF = s * (F @ G - G @ F)
    return SpinState(np.diag(F).copy(), dF, state.eta)


def rank_factor_embed(a, b) -> np.ndarray:
    """``F[i, j] = b_i . a_j`` from per-particle vectors; ``rank F <= l``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise ValueError(f"a and b shapes differ: {a.shape} vs {b.shape}")
    return b @ a.T


def n2_flow_rhs(state: N2LeafState, lattice: Lattice) -> N2LeafState:
    """Flow of ``H = f1 + f2`` on the leaf of fixed ``z0``.

    ``f1' = -f1 f2 (zeta(z0 + d) - zeta(z0 - d) - 2 zeta(d))``, ``f2' = -f1'``,
    ``x_i' = f_i`` with ``d = x1 - x2``.
    """
    d, z0 = state.delta, state.z0
    bracket = complex(zeta_w(z0 + d, lattice) - zeta_w(z0 - d, lattice) - 2 * zeta_w(d, lattice))
    df1 = -state.f1 * state.f2 * bracket
    return N2LeafState(state.f1, state.f2, df1, -df1, z0, state.eta)


def spin_from_leaf(state: N2LeafState, f3: complex, f12: complex | None = None) -> SpinState:
    """Embed a leaf state into a 2x2 spin state with ``f12 f21 = f3^2``.

    ``f12`` defaults to ``f3``; the split between ``f12`` and ``f21`` is a gauge.
    """
    f3sq = complex(f3) ** 2
    f12 = complex(f3) if f12 is None else complex(f12)
    F = np.array([[state.f1, f12], [f3sq / f12, state.f2]], dtype=complex)
    return SpinState([state.x1, state.x2], F, state.eta)


# ----------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution. ``states[k]`` is the state at ``times[k]``."""

    times: np.ndarray
    states: list
    stats: dict = field(default_factory=dict)

    @property
    def terminated(self) -> bool:
        return self.stats.get("terminated_at") is not None

    def vectors(self) -> np.ndarray:
        return np.array([s.to_vector() for s in self.states])

    @property
    def final(self):
        return self.states[-1]


def integrate(
    rhs,
    initial,
    t_span,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    sample_times=None,
    lattice: Lattice | None = None,
    guard: float = POLE_GUARD,
    max_step: float = np.inf,
    stop_when=None,
) -> Trajectory:
    """Integrate ``state' = rhs(state)`` with an adaptive 8(5,3) Runge-Kutta pair.

    Parameters
    ----------
    rhs : callable
        Maps a state to a state-shaped object of derivatives.
    initial : RSState, SpinState or N2LeafState
    t_span : (t0, t1)
        ``t1 < t0`` integrates backwards.
    rel_tol, abs_tol : float
        Local error tolerances; ``rel_tol`` must lie in ``(0, 1e-2]``.
    sample_times : array_like, optional
        Output times inside ``t_span``; defaults to 201 uniform samples.
    lattice : Lattice, optional
        Enables the pole-proximity guard. When some separation drops below
        ``guard`` integration stops and ``stats["terminated_at"]`` is set.

    Raises
    ------
    IntegrationError
        On step-size underflow or a non-finite right-hand side.
    """
    if not 0 < rel_tol <= 1e-2 or abs_tol <= 0:
        raise ValueError("tolerances must satisfy 0 < rel_tol <= 1e-2 and abs_tol > 0")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if sample_times is None:
        sample_times = np.linspace(t0, t1, 201)
    sample_times = np.asarray(sample_times, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    if np.any(np.diff(sample_times) * direction <= 0):
        raise ValueError("sample times must be strictly monotone in the integration direction")

    y0 = initial.to_vector()
    calls = [0]

    def fun(t, y):
        calls[0] += 1
        dy = rhs(type(initial).from_vector(y, initial)).to_vector()
        if not np.all(np.isfinite(dy)):
            raise IntegrationError(f"non-finite derivative at t={t}")
        return dy

    if not np.all(np.isfinite(fun(t0, y0))):
        raise IntegrationError("rhs not finite on the initial state")

    start = _time.perf_counter()
    out_t, out_y = [], []
    pending = list(sample_times)
    while pending and pending[0] == t0:
        out_t.append(pending.pop(0))
        out_y.append(y0.copy())

    steps = rejected = 0
    terminated_at = reason = None

    def partial():
        return Trajectory(np.array(out_t), [type(initial).from_vector(y, initial) for y in out_y],
                          {"steps": steps, "failed_at": float(solver.t)})

    if t1 != t0 and pending:
        solver = DOP853(fun, t0, y0, t1, rtol=rel_tol, atol=abs_tol, max_step=max_step)
        while solver.status == "running" and pending:
            before = calls[0]
            try:
                msg = solver.step()
            except IntegrationError as exc:
                raise IntegrationError(str(exc), partial()) from None
            attempts = max(1, (calls[0] - before) // solver.n_stages)
            rejected += attempts - 1
            if solver.status == "failed":
                raise IntegrationError(f"integration failed at t={solver.t}: {msg}", partial())
            steps += 1
            interp = solver.dense_output()
            while pending and (pending[0] - solver.t) * direction <= 0:
                out_t.append(pending.pop(0))
                out_y.append(interp(out_t[-1]))
            current = type(initial).from_vector(solver.y, initial)
            if lattice is not None and current.min_separation(lattice) < guard:
                terminated_at, reason = float(solver.t), "pole proximity"
                break
            if stop_when is not None and stop_when(current):
                terminated_at, reason = float(solver.t), "stop condition"
                break

    stats = {
        "steps": steps,
        "rejected_steps": rejected,
        "nfev": calls[0],
        "rel_tol": rel_tol,
        "abs_tol": abs_tol,
        "method": "DOP853",
        "terminated_at": terminated_at,
        "termination_reason": reason,
        "runtime_s": _time.perf_counter() - start,
    }
    states = [type(initial).from_vector(y, initial) for y in out_y]
    return Trajectory(np.array(out_t), states, stats)


def bind(rhs, lattice: Lattice, **kwargs):
    """Close over ``lattice`` (and extra keyword arguments) for :func:`integrate`."""

    def bound(state):
        return rhs(state, lattice, **kwargs)

    return bound


__all__ = [
    "CALIBRATED_SIGN",
    "IntegrationError",
    "N2LeafState",
    "PoleError",
    "RSState",
    "SpinState",
    "Trajectory",
    "bind",
    "hamiltonian",
    "integrate",
    "momenta_to_f",
    "n2_flow_rhs",
    "rank_factor_embed",
    "rs_rhs",
    "spin_from_leaf",
    "spin_rs_rhs",
]
