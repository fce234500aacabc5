"""Acceptance gate: one check per criterion, each printing a PASS/FAIL line.

The checks live in :mod:`crspec.acceptance` so ``crspec verify`` runs the
same code. Tolerances are fixed inside each check.
"""

import pytest

from crspec.acceptance import CHECKS, run_one

SLOW = {"10"}


def _params():
    for key, title, _ in CHECKS:
        marks = [pytest.mark.slow] if key in SLOW else []
        yield pytest.param(key, id=f"criterion-{key}-" + title.replace(" ", "-"), marks=marks)


@pytest.mark.parametrize("key", list(_params()))
def test_criterion(key, capsys):
    res = run_one(key)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
