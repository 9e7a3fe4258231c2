"""Acceptance battery: one PASS/FAIL line per numbered criterion.

The bounds live in :mod:`afcharges.verify`; each test prints the criterion
verdict followed by its individual checks, then fails if any check failed.
``afcharges verify all`` runs the same battery from the command line.
"""

import warnings

import pytest

from afcharges.verify import CRITERIA

TITLES = {
    1: "Schwarzschild ground truth (mass, C_I, C_CS)",
    2: "C_I = C_CS over AF-RT catalog specs",
    3: "rigid-motion equivariance of C_I",
    4: "CMC centroids converge to C_CS",
    5: "flux identity for the center update",
    6: "C_I independent of the surface family",
    7: "property suites",
}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_acceptance_criterion(number, capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        checks = CRITERIA[number]()
    failed = [c for c in checks if not c.passed]
    verdict = "PASS" if not failed else "FAIL"
    with capsys.disabled():
        print(f"\n{verdict}  criterion {number}: {TITLES[number]} "
              f"({len(checks) - len(failed)}/{len(checks)} checks)")
        for c in checks:
            print("    " + c.line())
    assert not failed, "; ".join(c.line() for c in failed)
