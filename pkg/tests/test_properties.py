import pytest

from atlkctl.formula import CoopUntil, Fragment, classify, props_of, subformulas
from atlkctl.oracle import StrategyBudgetExceeded
from atlkctl.properties import (
    SUITES,
    complete_system,
    fixpoint,
    run_on_model,
    run_suite,
    suite_formulas,
    suite_system,
)
from atlkctl.system import DomainError, is_complete_information, validate


def test_generated_instances_are_valid():
    for seed in range(5):
        assert not validate(suite_system(seed))
        complete = complete_system(seed)
        assert not validate(complete) and is_complete_information(complete)


def test_suite_formulas_contain_an_until():
    for f in suite_formulas(3, 10):
        assert classify(f) is Fragment.SUBSET
        assert any(isinstance(g, CoopUntil) for g in subformulas(f))
        assert props_of(f) <= {"p0", "p1"}


@pytest.mark.parametrize("suite", SUITES)
def test_small_suites_pass(suite):
    report = run_suite(suite, seed=100, count=2, horizon=2)
    assert report.passed, [c.describe() for c in report.failures]
    assert report.instances == 2


@pytest.mark.parametrize("suite", ["keyobs", "emptycoalition", "fixpoint", "prop3"])
def test_injected_fault_is_caught(suite):
    report = run_suite(suite, seed=100, count=2, horizon=2, faulty=True)
    assert not report.passed
    assert all(c.suite == suite and c.left != c.right for c in report.failures)


def test_counterexample_is_reproducible():
    report = run_suite("keyobs", seed=5, count=1, horizon=2, faulty=True)
    c = report.failures[0]
    assert c.model["agents"] == list(suite_system(5).agents)
    assert set(c.to_dict()) >= {"suite", "model", "run", "formula", "left", "right"}


def test_run_on_model(toy1):
    for suite in SUITES:
        if suite != "prop3":
            assert run_on_model(suite, toy1, 2).passed
    with pytest.raises(DomainError):
        run_on_model("prop3", toy1, 2)
    assert run_on_model("prop3", complete_system(2), 2).passed


def test_parallel_matches_serial():
    serial = run_suite("emptycoalition", seed=7, count=3, horizon=2)
    parallel = run_suite("emptycoalition", seed=7, count=3, horizon=2, jobs=2)
    assert serial.to_dict() == parallel.to_dict()


def test_budget_overflow(toy1):
    report = fixpoint(toy1, 2, budget=2, skip_over_budget=True)
    assert report.skipped > 0 and report.passed
    with pytest.raises(StrategyBudgetExceeded):
        fixpoint(toy1, 2, budget=2, skip_over_budget=False)


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope", 0, 1, 2)
