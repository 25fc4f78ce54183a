"""Acceptance criteria 1 to 11, each at its stated tolerance.

Every criterion prints one PASS or FAIL line, also under captured output.
"""

import pytest

from pmedipole.verification import RUNTIME_LIMITS, Suite

CRITERIA = {
    1: "dipole constants and unit first moment",
    2: "profile satisfies its ODE to second order",
    3: "barrier time factors match an RK4 solve",
    4: "barrier residual signs and finite-difference check",
    5: "solver reproduces the dipole and conserves the moment",
    6: "Barenblatt mass conservation before boundary contact",
    7: "far- and near-field errors decay for box data",
    8: "front tracks the dipole support edge",
    9: "numerical solution sits between the barriers",
    10: "retention: t^{1/(m-1)} u nondecreasing",
    11: "near-field amplitude and its moment exponent",
}


@pytest.fixture(scope="module")
def suite():
    return Suite()


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(suite, k, capsys):
    checks = suite.criterion(k)
    ok = all(c.passed for c in checks)
    limit = RUNTIME_LIMITS.get(k)
    elapsed = suite.timings[k]
    in_time = limit is None or elapsed <= limit
    detail = "; ".join(f"{c.name}={c.value:.4g} (tol {c.tolerance:.3g})" for c in checks)
    with capsys.disabled():
        status = "PASS" if ok and in_time else "FAIL"
        print(f"\n[{status}] criterion {k:2d}: {CRITERIA[k]} | {detail} | {elapsed:.2f}s")
    failed = [c.name for c in checks if not c.passed]
    assert not failed, f"criterion {k} failed: {failed}"
    assert in_time, f"criterion {k} took {elapsed:.2f}s, budget {limit}s"
