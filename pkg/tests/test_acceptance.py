"""Acceptance criteria at desk scale. Each test records one PASS/FAIL line,
which the terminal summary prints (see conftest.py)."""

import random
import time
from pathlib import Path

from atlkctl.cli import formula_lines
from atlkctl.formula import Fragment, classify, props_of
from atlkctl.generate import random_subset_formula
from atlkctl.grammar import parse, render
from atlkctl.properties import run_suite
from atlkctl.translator import translate

CORPUS = Path(__file__).parent / "corpus" / "formulas.txt"
RESULTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str, started: float, limit: float) -> None:
    elapsed = time.perf_counter() - started
    ok = ok and elapsed < limit
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}; {elapsed:.1f}s of {limit:.0f}s")
    print(RESULTS[-1])
    assert ok, RESULTS[-1]


def freshness_problems(f) -> list[str]:
    res = translate(f)
    fresh = [e.atom for e in res.dictionary]
    problems = []
    if classify(res.formula) is not Fragment.CTLD:
        problems.append("output is not CtlD")
    if len(fresh) != len(set(fresh)):
        problems.append("fresh atoms repeat")
    if set(fresh) & props_of(f):
        problems.append("fresh atom collides with input")
    if not props_of(res.formula) <= props_of(f) | set(fresh):
        problems.append("output mentions an undeclared atom")
    return problems


def test_criterion_1_syntactic_purity():
    started = time.perf_counter()
    rng = random.Random(2024)
    failures = 0
    for _ in range(200):
        agents = ["1", "2", "3"][: rng.randint(1, 3)]
        failures += bool(freshness_problems(random_subset_formula(rng, agents, ["p", "q", "r"], 3)))
    record(1, "syntactic purity", failures == 0, f"200 formulas, {failures} failures", started, 30)


def test_criterion_2_key_observation():
    started = time.perf_counter()
    r = run_suite("keyobs", seed=0, count=25, horizon=3)
    ok = r.passed and r.unknown == 0
    record(2, "key observation", ok, f"{r.checked} checks, {len(r.failures)} disagreements, {r.unknown} undecided", started, 180)


def test_criterion_3_empty_coalition():
    started = time.perf_counter()
    r = run_suite("emptycoalition", seed=0, count=25, horizon=3)
    record(3, "empty coalition", r.passed, f"{r.checked} checks, {len(r.failures)} disagreements, {r.unknown} undecided", started, 120)


def test_criterion_4_fixpoint_cross_check():
    started = time.perf_counter()
    r = run_suite("fixpoint", seed=0, count=25, horizon=3, budget=100_000, skip_over_budget=True)
    total = r.checked + r.skipped
    ratio = r.skipped / total if total else 0.0
    ok = r.passed and ratio <= 0.2
    record(4, "fixpoint cross-check", ok, f"{r.checked} checks, {len(r.failures)} disagreements, skipped {ratio:.0%}", started, 300)


def test_criterion_5_forward_preservation():
    started = time.perf_counter()
    r = run_suite("prop1", seed=0, count=10, horizon=4)
    ratio = r.undecided_premises / r.premises if r.premises else 0.0
    ok = r.passed and r.premises > 0 and ratio < 0.3
    detail = f"{r.premises} premises, {len(r.failures)} violations, {ratio:.0%} undecided"
    record(5, "forward preservation", ok, detail, started, 600)


def test_criterion_6_complete_information_structure():
    started = time.perf_counter()
    r = run_suite("prop3", seed=0, count=10, horizon=3)
    record(6, "complete-information structure", r.passed, f"{r.checked} checks, {len(r.failures)} disagreements", started, 300)


def test_criterion_7_extraction():
    started = time.perf_counter()
    r = run_suite("extraction", seed=0, count=25, horizon=3)
    record(7, "model extraction", r.passed, f"{r.instances} structures, {len(r.failures)} problems", started, 60)


def test_criterion_8_roundtrip_and_determinism():
    started = time.perf_counter()
    lines = formula_lines(CORPUS.read_text())
    broken = 0
    outputs = []
    for text in lines:
        f = parse(text)
        broken += parse(render(f)) != f or render(parse(render(f))) != render(f)
        outputs.append(render(translate(f, "complete").formula))
    again = [render(translate(parse(t), "complete").formula) for t in lines]
    same = "\n".join(outputs).encode() == "\n".join(again).encode()
    record(8, "round trip and determinism", broken == 0 and same, f"{len(lines)} formulas, {broken} round-trip failures", started, 30)
