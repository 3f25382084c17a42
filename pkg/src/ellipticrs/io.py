"""Trajectory export and run configuration."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import N2LeafState, RSState, SpinState, Trajectory
from .lattice import Lattice

STATE_TYPES = {"RSState": RSState, "SpinState": SpinState, "N2LeafState": N2LeafState}


def trajectory_to_json(traj: Trajectory) -> dict:
    kind = type(traj.states[0]).__name__ if traj.states else None
    return {
        "state_type": kind,
        "times": [float(t) for t in traj.times],
        "states": [s.to_json() for s in traj.states],
        "stats": traj.stats,
    }


def trajectory_from_json(obj: dict) -> Trajectory:
    cls = STATE_TYPES[obj["state_type"]]
    return Trajectory(np.array(obj["times"], dtype=float), [cls.from_json(s) for s in obj["states"]],
                      dict(obj.get("stats", {})))


def write_trajectory_json(traj: Trajectory, path) -> None:
    with open(path, "w") as fh:
        json.dump(trajectory_to_json(traj), fh)


def read_trajectory_json(path) -> Trajectory:
    with open(path) as fh:
        return trajectory_from_json(json.load(fh))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """One row per sample: ``t`` then real and imaginary part of every coordinate (17 digits)."""
    cols = traj.states[0].columns()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"{c}_{part}" for c in cols for part in ("re", "im")])
        for t, st in zip(traj.times, traj.states):
            row = [f"{t:.17g}"]
            for v in st.to_vector():
                row += [f"{v.real:.17g}", f"{v.imag:.17g}"]
            w.writerow(row)


def read_trajectory_csv(path):
    """Return ``(times, vectors)`` from a CSV written by :func:`write_trajectory_csv`."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1::2] + 1j * data[:, 2::2]


# ----------------------------------------------------------------------
# configuration


class ConfigError(ValueError):
    pass


def parse_complex(v, what="value") -> complex:
    if isinstance(v, (int, float, complex)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{what}: expected a number or [re, im], got {v!r}")


def _cplx_list(v, what):
    if not isinstance(v, (list, tuple)):
        raise ConfigError(f"{what}: expected a list")
    return [parse_complex(a, f"{what}[{i}]") for i, a in enumerate(v)]


@dataclass
class RunConfig:
    backend: str = "elliptic"
    omega1: complex = 1.0
    omega3: complex = 1j
    eta: complex = 0.3j
    system: str = "rs"
    initial: dict = field(default_factory=dict)
    t_span: tuple = (0.0, 5.0)
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    sample_count: int = 201
    seed: int = 0
    sign_convention: str = "auto"
    w_convention: str = "odd_combination"

    @classmethod
    def from_dict(cls, obj: dict) -> RunConfig:
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known - {"lattice"}
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        cfg = cls()
        cfg.backend = obj.get("backend", cfg.backend)
        if cfg.backend not in ("elliptic", "trigonometric", "rational"):
            raise ConfigError(f"unknown backend {cfg.backend!r}")
        lat = obj.get("lattice", {})
        if "omega1" in lat or "omega1" in obj:
            cfg.omega1 = parse_complex(lat.get("omega1", obj.get("omega1")), "omega1")
        if "omega3" in lat or "omega3" in obj:
            cfg.omega3 = parse_complex(lat.get("omega3", obj.get("omega3")), "omega3")
        cfg.eta = parse_complex(obj.get("eta", cfg.eta), "eta")
        cfg.system = obj.get("system", cfg.system)
        if cfg.system not in ("rs", "spin-rs", "n2-leaf"):
            raise ConfigError(f"unknown system {cfg.system!r}")
        cfg.initial = obj.get("initial", {})
        ts = obj.get("t_span", list(cfg.t_span))
        if not (isinstance(ts, (list, tuple)) and len(ts) == 2):
            raise ConfigError("t_span must be [t0, t1]")
        cfg.t_span = (float(ts[0]), float(ts[1]))
        cfg.rel_tol = float(obj.get("rel_tol", cfg.rel_tol))
        cfg.abs_tol = float(obj.get("abs_tol", cfg.abs_tol))
        for name in ("rel_tol", "abs_tol"):
            if not 0 < getattr(cfg, name) <= 1e-2:
                raise ConfigError(f"{name} must lie in (0, 1e-2]")
        cfg.sample_count = int(obj.get("sample_count", cfg.sample_count))
        if cfg.sample_count < 2:
            raise ConfigError("sample_count must be at least 2")
        cfg.seed = int(obj.get("seed", cfg.seed))
        cfg.sign_convention = obj.get("sign_convention", cfg.sign_convention)
        if cfg.sign_convention not in ("auto", "printed", "flipped"):
            raise ConfigError(f"unknown sign_convention {cfg.sign_convention!r}")
        cfg.w_convention = obj.get("w_convention", cfg.w_convention)
        if cfg.w_convention not in ("odd_combination", "two_v_tilde"):
            raise ConfigError(f"unknown w_convention {cfg.w_convention!r}")
        cfg.lattice()
        return cfg

    def lattice(self) -> Lattice:
        try:
            if self.backend == "rational":
                return Lattice.rational()
            if self.backend == "trigonometric":
                return Lattice.trigonometric(self.omega1)
            return Lattice("elliptic", self.omega1, self.omega3)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lattice"] = self.lattice().to_json()
        del d["omega1"], d["omega3"]
        d["eta"] = [self.eta.real, self.eta.imag]
        d["t_span"] = list(self.t_span)
        return d

    def initial_state(self):
        ini = self.initial
        try:
            if self.system == "rs":
                return RSState(_cplx_list(ini["x"], "x"), _cplx_list(ini["f"], "f"), self.eta)
            if self.system == "spin-rs":
                F = [_cplx_list(r, "F row") for r in ini["F"]]
                return SpinState(_cplx_list(ini["x"], "x"), F, self.eta)
        except KeyError as exc:
            raise ConfigError(f"initial state missing {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        raise ConfigError("n2-leaf initial data is resolved through the z0 chart")

    def leaf_inputs(self) -> dict:
        ini = self.initial
        out = {}
        for k in ("x1", "x2", "f1", "f2"):
            if k not in ini:
                raise ConfigError(f"n2 data missing {k!r}")
            out[k] = parse_complex(ini[k], k)
        for k in ("f3", "z0"):
            if k in ini:
                out[k] = parse_complex(ini[k], k)
        if ("f3" in out) == ("z0" in out):
            raise ConfigError("give exactly one of f3 or z0")
        return out
