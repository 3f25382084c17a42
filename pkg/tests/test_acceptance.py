"""Acceptance criteria, each run at its stated tolerance and runtime budget.

Every criterion prints one PASS/FAIL line; the lines are repeated in the
"acceptance criteria" section of the pytest terminal summary.
"""
import time

import pytest

from ellipticrs.verify import run_suites

SEED = 0

# (number, title, suites, runtime limit in seconds, extra per-check tolerances)
CRITERIA = [
    (1, "elliptic identity suite, 1000 samples per backend, rel < 1e-10", ["elliptic-identities"], 10, {}),
    (2, "function theory: parity, FD derivatives < 1e-8, quasi-periodicity < 1e-10, Legendre < 1e-12",
     ["function-theory"], 10, {}),
    (3, "identity after the z0 equation, 500 states per backend, < 1e-9", ["identity-8"], 30, {}),
    (4, "z0 chart: spinless z0 = eta, f3 <-> z0 round trip < 1e-9, rational closed form < 1e-10",
     ["spinless-limit"], 10, {}),
    (5, "sign calibration: one convention drifts < 1e-8, the other > 1e-3", ["sign-calibration"], 60, {}),
    (6, "flow equivalence: pointwise < 1e-12, trajectories < 1e-6 (a-b < 1e-9), H and z0 drift < 1e-8",
     ["flow-equivalence"], 60, {"a_vs_b": 1e-9}),
    (7, "spinless degeneration of the general-N form (coefficients and Hamiltonian flow)",
     ["form-general-n"], 60, {}),
    (8, "rational gauge rescaling leaves (x, f11, f22, z0) invariant < 1e-10", ["rational-limit"], 30, {}),
    (9, "elliptic -> trigonometric on a fixed grid, error < 1e-8 at omega3 = 20i", ["degeneration"], 10, {}),
]


@pytest.mark.parametrize("num,title,suites,limit,extra", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(num, title, suites, limit, extra, acceptance_log):
    t0 = time.perf_counter()
    reports = run_suites(suites, seed=SEED)
    elapsed = time.perf_counter() - t0
    failing = []
    worst = 0.0
    for rep in reports:
        for c in rep.checks:
            tol = min([c.tolerance] + [v for k, v in extra.items() if c.name.endswith(k)])
            ratio = c.residual / tol
            worst = max(worst, ratio)
            if not c.residual <= tol:
                failing.append(f"{c.name}={c.residual:.3g} (tol {tol:.1g})")
    ok = not failing and elapsed < limit
    line = (f"criterion {num} [{'PASS' if ok else 'FAIL'}] {title} | worst residual/tol {worst:.2g} | "
            f"{elapsed:.1f}s of {limit}s")
    if failing:
        line += " | failing: " + "; ".join(failing)
    print(line)
    acceptance_log.append(line)
    assert not failing, "; ".join(failing)
    assert elapsed < limit, f"runtime {elapsed:.1f}s exceeds {limit}s"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
