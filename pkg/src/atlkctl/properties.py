"""Differential property suites run against generated or supplied systems.

Every suite compares two independently computed verdicts and records a
:class:`Counterexample` whenever both are decided and differ. The suites are
the basis of ``atlkctl verify`` and of the acceptance tests.
"""

from __future__ import annotations

import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from atlkctl.extract import CtlStructure, extract_is_from_ctl_model, extraction_problems, structure_from_system
from atlkctl.formula import (
    FALSE,
    TRUE,
    Atom,
    Coalition,
    CoopNext,
    CoopUntil,
    DKnows,
    DualCoopUntil,
    ExistsNext,
    ExistsUntil,
    ForallUntil,
    Formula,
    big_and,
    big_or,
    disj,
    conj,
    dual_next,
    forall_next,
    iff,
    neg,
    poss,
    replace,
    subformulas,
    Implies,
)
from atlkctl.generate import (
    default_act_sets,
    generate_complete_information,
    generate_random,
    random_ctl_structure,
    random_subset_formula,
)
from atlkctl.grammar import render
from atlkctl.modelio import model_to_dict
from atlkctl.oracle import DEFAULT_BUDGET, Evaluator, StrategyBudgetExceeded, Verdict
from atlkctl.system import DomainError, InterpretedSystem, action_atoms, build_is_act, is_complete_information
from atlkctl.translator import until_conjuncts

SUITES = ("keyobs", "emptycoalition", "fixpoint", "prop1", "prop3", "extraction")


@dataclass(frozen=True)
class Counterexample:
    suite: str
    model: dict
    run: str
    formula: str
    left: str
    right: str
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "run": self.run,
            "formula": self.formula,
            "left": self.left,
            "right": self.right,
            "note": self.note,
            "model": self.model,
        }

    def describe(self) -> str:
        text = f"{self.suite}: {self.formula} at {self.run}: {self.left} vs {self.right}"
        return f"{text} ({self.note})" if self.note else text


@dataclass
class SuiteReport:
    suite: str
    instances: int = 0
    checked: int = 0
    unknown: int = 0
    skipped: int = 0
    premises: int = 0
    undecided_premises: int = 0
    failures: list[Counterexample] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "SuiteReport") -> "SuiteReport":
        self.instances += other.instances
        self.checked += other.checked
        self.unknown += other.unknown
        self.skipped += other.skipped
        self.premises += other.premises
        self.undecided_premises += other.undecided_premises
        self.failures.extend(other.failures)
        return self

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "instances": self.instances,
            "checked": self.checked,
            "unknown": self.unknown,
            "skipped": self.skipped,
            "premises": self.premises,
            "undecided_premises": self.undecided_premises,
            "failures": [c.to_dict() for c in self.failures],
        }


class FaultyEvaluator(Evaluator):
    """Evaluator with cooperation modalities negated; used to exercise the
    failure path of the suites."""

    def _compute(self, node, f, memo):
        v = super()._compute(node, f, memo)
        if isinstance(f, (CoopNext, CoopUntil, DualCoopUntil)):
            v = ~v
            for n in self.tree.class_members(node, f.coalition):
                memo[n] = v
        return v


def _evaluator(system, horizon, faulty: bool, **kw) -> Evaluator:
    return (FaultyEvaluator if faulty else Evaluator)(system, horizon, **kw)


def coalitions(agents: Sequence[str]) -> list[Coalition]:
    return [tuple(c) for k in range(len(agents) + 1) for c in itertools.combinations(agents, k)]


def literals(system: InterpretedSystem) -> list[Formula]:
    out: list[Formula] = []
    for p in system.props:
        out += [Atom(p), neg(Atom(p))]
    return out


def _nodes(ev: Evaluator, depth: int) -> Iterable[int]:
    for d in range(depth + 1):
        yield from ev.tree.level(d)


def _compare(report, suite, system, ev, node, formula, left, right, note=""):
    report.checked += 1
    if not (left.decided and right.decided):
        report.unknown += 1
        return
    if left is not right:
        report.failures.append(
            Counterexample(suite, model_to_dict(system), _run_text(ev, node), render(formula), str(left), str(right), note)
        )


def _run_text(ev: Evaluator, node: int) -> str:
    r = ev.tree.run(node)
    parts = [",".join(r.states[0])]
    for a, s in zip(r.actions, r.states[1:]):
        parts.append(f"-({','.join(a)})-> {','.join(s)}")
    return " ".join(parts)


# -- suites ----------------------------------------------------------------------

def next_by_action_atoms(system: InterpretedSystem, g: Coalition, body: Formula) -> Formula:
    """The disjunction, over the coalition's action vectors, of knowing that
    every successor where those actions were taken satisfies ``body``."""
    names = action_atoms(system)
    return big_or(
        DKnows(g, forall_next(Implies(big_and(Atom(names[(a, b)]) for a, b in zip(g, vec)), body)))
        for vec in system.coalition_actions(g)
    )


def keyobs(system: InterpretedSystem, horizon: int = 3, depth: int = 2, faulty: bool = False) -> SuiteReport:
    """``<<G>> X a`` on the system against the action-atom form on the
    action-recording system, for literal and knowledge-literal bodies."""
    report = SuiteReport("keyobs", instances=1)
    lifted = build_is_act(system)
    ev = _evaluator(system, horizon, faulty)
    ev_act = Evaluator(lifted, horizon)
    groups = coalitions(system.agents)
    bodies = literals(system) + [DKnows(d, lit) for d in groups for lit in literals(system)]
    for g in groups:
        for body in bodies:
            left_f = CoopNext(g, body)
            right_f = next_by_action_atoms(system, g, body)
            for n in _nodes(ev, depth):
                _compare(report, "keyobs", system, ev, n, left_f, ev.holds(n, left_f), ev_act.holds(n, right_f))
    return report


def empty_coalition_pairs(phi: Formula, psi: Formula) -> list[tuple[Formula, Formula]]:
    return [
        (poss((), ExistsNext(phi)), dual_next((), phi)),
        (poss((), ExistsUntil(phi, psi)), DualCoopUntil((), phi, psi)),
        (DKnows((), ForallUntil(phi, psi)), CoopUntil((), phi, psi)),
    ]


def emptycoalition(system: InterpretedSystem, horizon: int = 3, depth: int = 2, faulty: bool = False) -> SuiteReport:
    report = SuiteReport("emptycoalition", instances=1)
    ev = _evaluator(system, horizon, faulty)
    lits = literals(system) + [TRUE, FALSE]
    for phi, psi in itertools.product(lits, repeat=2):
        for left_f, right_f in empty_coalition_pairs(phi, psi):
            for n in _nodes(ev, depth):
                _compare(report, "emptycoalition", system, ev, n, iff(left_f, right_f), ev.holds(n, left_f), ev.holds(n, right_f))
    return report


def fixpoint(
    system: InterpretedSystem,
    horizon: int = 3,
    depth: int = 2,
    budget: int = DEFAULT_BUDGET,
    faulty: bool = False,
    skip_over_budget: bool = True,
) -> SuiteReport:
    """The fixpoint value of ``<<G>>(K_G a U K_G b)`` against explicit
    enumeration of the coalition's uniform strategies. Checks needing more
    than ``budget`` strategies are skipped, or re-raised when
    ``skip_over_budget`` is false."""
    report = SuiteReport("fixpoint", instances=1)
    ev = _evaluator(system, horizon, faulty, budget=budget)
    lits = literals(system) + [TRUE]
    for g in coalitions(system.agents):
        for phi, psi in itertools.product(lits, repeat=2):
            f = CoopUntil(g, DKnows(g, phi), DKnows(g, psi))
            for n in _nodes(ev, depth):
                try:
                    by_strategies = ev.until_by_enumeration(n, f)
                except StrategyBudgetExceeded:
                    if not skip_over_budget:
                        raise
                    report.checked += 1
                    report.skipped += 1
                    continue
                _compare(report, "fixpoint", system, ev, n, f, ev.holds(n, f), by_strategies)
    return report


def _first_until(f: Formula) -> CoopUntil | None:
    return next((g for g in subformulas(f) if isinstance(g, CoopUntil)), None)


def _lfp_witness(ev: Evaluator, target: CoopUntil, p_val: Callable[[int], Verdict]) -> Callable[[int], Verdict]:
    """Runs reached from TRUE ``p``-runs by repeatedly playing, at every
    coalition class, the first action vector that keeps the fixpoint TRUE."""
    tree, g = ev.tree, target.coalition
    offsets = tree.offsets(g)
    marked: set[int] = set()
    todo = [n for n in _nodes(ev, ev.horizon) if p_val(n) is Verdict.TRUE]
    while todo:
        n = todo.pop()
        if n in marked:
            continue
        marked.add(n)
        if tree.depth[n] >= ev.horizon or ev.holds(n, target.right) is Verdict.TRUE:
            continue
        members = tree.class_members(n, g)
        for offs in offsets.values():
            if all(ev.holds(tree.children(m).start + k, target) is Verdict.TRUE for m in members for k in offs):
                todo.extend(tree.children(n).start + k for k in offs)
                break
    return lambda n: Verdict.of(n in marked)


def prop1(
    system: InterpretedSystem,
    formulas: Sequence[Formula],
    horizon: int = 4,
    faulty: bool = False,
) -> SuiteReport:
    """Whenever a formula holds, the until-elimination constraints can be met
    by some valuation of the fresh atoms (never FALSE at that run)."""
    report = SuiteReport("prop1", instances=1)
    base = _evaluator(system, horizon, faulty)
    for f in formulas:
        target = _first_until(f)
        if target is None:
            continue
        report.premises += 1
        premise = base.sat_at_initial(f)
        if premise is not Verdict.TRUE:
            if premise is Verdict.UNKNOWN:
                report.undecided_premises += 1
            continue
        p, q = "_p", "_q"
        chi = replace(f, target, Atom(p))
        output = big_and((chi,) + until_conjuncts(target, p, q))

        def p_val(n, target=target):
            return base.holds(n, target)

        candidates = {
            "strategy": _lfp_witness(base, target, p_val),
            "empty": lambda n: Verdict.FALSE,
            "same-as-p": p_val,
        }
        roots = [n for n in base.tree.level(0) if base.holds(n, f) is Verdict.TRUE]
        pending = set(roots)
        for q_val in candidates.values():
            ev = _evaluator(system, horizon, faulty, tree=base.tree, extra={p: p_val, q: q_val})
            pending = {n for n in pending if ev.holds(n, output) is Verdict.FALSE}
            if not pending:
                break
        report.checked += 1
        if pending:
            report.failures.append(
                Counterexample(
                    "prop1", model_to_dict(system), _run_text(base, min(pending)), render(f), "True", "False",
                    "no fresh-atom valuation keeps the until-elimination constraints from failing",
                )
            )
    return report


def prop3(system: InterpretedSystem, horizon: int = 3, depth: int = 2, faulty: bool = False) -> SuiteReport:
    """With ``p`` read as ``[[G]](a U b)``, the fixpoint conjunct
    ``p <-> b | (a & [[G]] X p)`` is never FALSE at a decided run."""
    report = SuiteReport("prop3", instances=1)
    base = Evaluator(system, horizon)
    lits = literals(system) + [TRUE, FALSE]
    for g in coalitions(system.agents)[1:]:
        for phi, psi in itertools.product(lits, repeat=2):
            target = DualCoopUntil(g, phi, psi)
            p = Atom("_p")
            unfolded = disj(psi, conj(phi, dual_next(g, p)))
            ev = _evaluator(system, horizon, faulty, tree=base.tree, extra={p.name: lambda n, t=target: base.holds(n, t)})
            for n in _nodes(ev, depth):
                _compare(report, "prop3", system, ev, n, iff(p, unfolded), ev.holds(n, p), ev.holds(n, unfolded))
    return report


def extraction(m: CtlStructure, act_sets) -> SuiteReport:
    report = SuiteReport("extraction", instances=1, checked=1)
    system = extract_is_from_ctl_model(m, act_sets)
    for problem in extraction_problems(m, act_sets, system):
        report.failures.append(Counterexample("extraction", {}, "-", "-", "valid", "invalid", problem))
    return report


# -- instance generation and drivers ------------------------------------------

def suite_system(seed: int) -> InterpretedSystem:
    rng = random.Random(seed)
    return generate_random(
        2,
        [rng.randint(1, 2), rng.randint(1, 2)],
        [rng.randint(1, 2), rng.randint(1, 2)],
        2,
        seed,
        env_states=rng.randint(1, 2),
        env_actions=rng.randint(1, 2),
        initial=rng.randint(1, 2),
    )


def suite_formulas(seed: int, count: int, agents: Sequence[str] = ("1", "2"), props: Sequence[str] = ("p0", "p1")) -> list[Formula]:
    """Subset formulas of modal depth at most 2, each with an until."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        f = random_subset_formula(rng, agents, props, 2)
        if _first_until(f) is not None:
            out.append(f)
    return out


def complete_system(seed: int) -> InterpretedSystem:
    rng = random.Random(seed)
    return generate_complete_information(2, rng.randint(2, 3), 2, 2, seed)


def run_instance(
    suite: str,
    seed: int,
    horizon: int,
    faulty: bool = False,
    budget: int = DEFAULT_BUDGET,
    skip_over_budget: bool = True,
) -> SuiteReport:
    match suite:
        case "keyobs":
            return keyobs(suite_system(seed), horizon, faulty=faulty)
        case "emptycoalition":
            return emptycoalition(suite_system(seed), horizon, faulty=faulty)
        case "fixpoint":
            return fixpoint(suite_system(seed), horizon, budget=budget, faulty=faulty, skip_over_budget=skip_over_budget)
        case "prop1":
            return prop1(suite_system(seed), suite_formulas(seed, 10), horizon, faulty=faulty)
        case "prop3":
            return prop3(complete_system(seed), horizon, faulty=faulty)
        case "extraction":
            acts = default_act_sets(2)
            return extraction(random_ctl_structure(2, 2, acts, 2, seed), acts)
    raise ValueError(f"unknown property suite {suite!r}")


def run_on_model(
    suite: str,
    system: InterpretedSystem,
    horizon: int,
    faulty: bool = False,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    skip_over_budget: bool = True,
) -> SuiteReport:
    match suite:
        case "keyobs":
            return keyobs(system, horizon, faulty=faulty)
        case "emptycoalition":
            return emptycoalition(system, horizon, faulty=faulty)
        case "fixpoint":
            return fixpoint(system, horizon, budget=budget, faulty=faulty, skip_over_budget=skip_over_budget)
        case "prop1":
            agents, props = system.agents, system.props or ("p0",)
            return prop1(system, suite_formulas(seed, 10, agents, props), horizon, faulty=faulty)
        case "prop3":
            if not is_complete_information(system):
                raise DomainError("prop3 needs a complete-information model")
            return prop3(system, horizon, faulty=faulty)
        case "extraction":
            lifted = build_is_act(system)
            names = action_atoms(system)
            acts = {m: tuple(names[(m, b)] for b in system.actions[m]) for m in system.members}
            return extraction(structure_from_system(lifted), acts)
    raise ValueError(f"unknown property suite {suite!r}")


def _instance(args) -> SuiteReport:
    return run_instance(*args)


def run_suite(
    suite: str,
    seed: int,
    count: int,
    horizon: int,
    faulty: bool = False,
    jobs: int = 1,
    budget: int = DEFAULT_BUDGET,
    skip_over_budget: bool = True,
) -> SuiteReport:
    """Run ``count`` generated instances with seeds ``seed, seed+1, ...``."""
    if suite not in SUITES:
        raise ValueError(f"unknown property suite {suite!r}")
    tasks = [(suite, seed + k, horizon, faulty, budget, skip_over_budget) for k in range(count)]
    total = SuiteReport(suite)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_instance, tasks))
    else:
        reports = [_instance(t) for t in tasks]
    for r in reports:
        total.merge(r)
    return total
