"""Acceptance gate: seven verification criteria, one PASS/FAIL line each.

Each criterion runs a seeded suite from :mod:`kolmo.verify` at its full case
count and asserts both correctness and its runtime budget.  Tolerances are
pinned inside the suites (see each suite's docstring); the case counts,
seeds, and budgets here are the contract.
"""
import time

import pytest

from kolmo import verify

SEED = verify.DEFAULT_SEED


def _run(name, suite, cases, budget_s, extra_check=None):
    start = time.monotonic()
    report = suite(cases=cases, seed=SEED)
    elapsed = time.monotonic() - start
    ok = report.ok and elapsed <= budget_s
    if extra_check is not None:
        ok = ok and extra_check(report)
    verdict = "PASS" if ok else "FAIL"
    print(
        f"{verdict} {name}: {report.passed}/{report.total} passed, "
        f"{report.failed} failed, {report.skipped} skipped, "
        f"{elapsed:.1f}s (budget {budget_s:.0f}s)"
    )
    for line in report.failures:
        print(f"    {line}")
    assert report.ok, f"{name}: {report.failures}"
    assert elapsed <= budget_s, f"{name}: {elapsed:.1f}s over budget {budget_s}s"
    if extra_check is not None:
        assert extra_check(report), f"{name}: extra criterion failed"
    return report


def test_criterion_1_roundtrip_recovery():
    """Principal representation recovers seeded random measures to 1e-6."""
    _run("criterion-1 roundtrip", verify.roundtrip_suite, 200, 30.0)


def test_criterion_2_matched_spline_inequality():
    """Matched splines never exceed the source's spare norms (<= + 1e-9)."""
    _run(
        "criterion-2 lemma-inequality",
        verify.lemma1_suite,
        500,
        120.0,
        extra_check=lambda r: r.notes["convergence_rate"] >= 0.95,
    )


def test_criterion_3_oracle_agreement():
    """classify agrees with the NNLS cone oracle outside a 1e-4 margin."""
    _run("criterion-3 oracle-agreement", verify.oracle_suite, 500, 60.0)


def test_criterion_4_factorial_correspondence():
    """AM norms equal diag((r-k_i)!) times MM norms to relative 1e-12."""
    _run("criterion-4 correspondence", verify.correspondence_suite, 200, 5.0)


def test_criterion_5_decision_trichotomy():
    """Threshold ladder statuses plus witnesses on random attainable tuples."""
    _run("criterion-5 decision", verify.theorem_main_suite, 100, 30.0)


def test_criterion_6_canonical_representation():
    """Pinned-root representations: exact pin, moments reproduced to 1e-8."""
    _run("criterion-6 canonical", verify.canonical_suite, 100, 30.0)


def test_criterion_7_uniqueness():
    """Interior spline solves from three initializations agree to 1e-6."""
    _run("criterion-7 uniqueness", verify.uniqueness_suite, 100, 30.0)


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(pytest.main([__file__, "-v", "-s"]))
