import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atlkctl.formula import (
    TRUE,
    Atom,
    CoopNext,
    CoopUntil,
    DKnows,
    ExistsNext,
    ExistsUntil,
    Falsum,
    Fragment,
    Implies,
    big_and,
    classify,
    conj,
    disj,
    iff,
    props_of,
    subformulas,
)
from atlkctl.generate import generate_complete_information, generate_random, random_subset_formula
from atlkctl.grammar import parse, render
from atlkctl.oracle import Evaluator, Verdict
from atlkctl.translator import (
    Mode,
    TranslationContext,
    TranslationError,
    build_A,
    eliminate_next,
    eliminate_until,
    eliminate_until_complete,
    everywhere,
    translate,
    until_conjuncts,
)


def conjuncts(f):
    match f:
        case Implies(Implies(a, Implies(b, Falsum())), Falsum()):
            return conjuncts(a) + conjuncts(b)
    return [f]


TARGET = parse("<<1>> (K{1} u U K{1} v)")


def test_until_elimination_shape():
    ctx = TranslationContext(("1",))
    out = eliminate_until(TARGET, TARGET, ctx)
    assert conjuncts(out) == [
        Atom("_p1"),
        parse("K{} A G (_p1 | _q2 -> K{1} v | K{1} u & <<1>> X _q2)"),
        parse("K{} A G (_p1 <-> K{1} v | K{1} u & <<1>> X _p1)"),
        parse("K{} A G (_p1 -> K{1} v | K{1} u & A X A ((_q2 -> K{1} u) U (_q2 -> K{1} v)))"),
    ]


def test_until_elimination_replaces_every_occurrence():
    chi = conj(TARGET, DKnows(("2",), TARGET))
    ctx = TranslationContext(("1", "2"))
    out = eliminate_until(chi, TARGET, ctx)
    parts = conjuncts(out)
    assert parts[:2] == [Atom("_p1"), DKnows(("2",), Atom("_p1"))]
    assert len(parts) == 5
    assert TARGET not in set(subformulas(out))


def test_until_elimination_names_are_fresh():
    ctx = TranslationContext(("1",), taken={"_p1", "u", "v"})
    out = eliminate_until(TARGET, TARGET, ctx)
    fresh = props_of(out) - {"u", "v"}
    assert len(fresh) == 2 and not fresh & {"_p1", "u", "v"}


def test_until_elimination_rejects_other_shapes():
    with pytest.raises(TranslationError):
        eliminate_until(parse("<<1>> (u U v)"), parse("<<1>> (u U v)"), TranslationContext(("1",)))


def test_next_elimination_shape():
    ctx = TranslationContext(("1", "2"))
    target = parse("<<1>> X p")
    out = eliminate_next(target, target, ctx)
    a1, ae = ctx.act_sets["1"][1], ctx.act_sets["e"][1]
    replacement = parse(f"K{{1}} A X ({a1} -> p)")
    assert conjuncts(out)[0] == replacement
    assert conjuncts(out)[1] == everywhere(disj(replacement, parse(f"P{{1}} A X ({ae} -> !p)")))
    assert ctx.act_sets == {"1": ["_nop_1", a1], "2": ["_nop_2"], "e": ["_nop_e", ae]}
    assert conjuncts(out)[2] == everywhere(build_A(ctx.act_sets, ("1", "2", "e")))


def test_two_next_targets_allocate_four_atoms():
    ctx = TranslationContext(("1",))
    chi = parse("<<1>> X p & <<1>> X q")
    out = eliminate_next(chi, parse("<<1>> X p"), ctx)
    out = eliminate_next(out, parse("<<1>> X q"), ctx)
    fresh = [a for m in ("1", "e") for a in ctx.act_sets[m][1:]]
    assert len(set(fresh)) == 4
    availability = [c for c in conjuncts(out) if c == ctx.last_availability]
    assert len(availability) == 1
    assert len(conjuncts(out)) == 2 + 2 + 1


def test_next_elimination_for_empty_coalition():
    ctx = TranslationContext(())
    out = eliminate_next(parse("<<>> X p"), parse("<<>> X p"), ctx)
    assert conjuncts(out)[0] == parse("K{} A X (true -> p)")
    assert len(ctx.act_sets["e"]) == 2


def test_build_A():
    ones = {"1": ["nop_1"], "2": ["nop_2"], "e": ["nop_e"]}
    assert build_A(ones) == ExistsNext(big_and([Atom("nop_1"), Atom("nop_2"), Atom("nop_e")]))
    sizes = {"1": ["a", "b"], "2": ["c"], "e": ["d", "f"]}
    out = build_A(sizes)
    assert conjuncts(out) == [ExistsNext(big_and(map(Atom, (x, "c", y)))) for x in "ab" for y in "df"]
    assert classify(out) is Fragment.CTLD
    with pytest.raises(TranslationError):
        build_A({"1": [], "e": ["d"]})


def test_translate_ctl_input():
    f = parse("K{} A (p U q)")
    res = translate(f)
    assert res.formula == conj(f, everywhere(ExistsNext(Atom("_nop_e"))))
    assert all(e.role == "nop" for e in res.dictionary)


def test_translate_subset_until():
    res = translate(TARGET)
    assert classify(res.formula) is Fragment.CTLD
    roles = [e.role for e in res.dictionary]
    assert roles.count("p") == 1 and roles.count("q") == 1
    assert roles.count("action:1") == 2 and roles.count("env-action") == 2
    assert [s.rule for s in res.trace] == ["until", "next", "next"]
    assert res.formula == big_and([res.core, *res.constraints])
    assert res.constraints[-1] == everywhere(build_A(res.act_sets, ("1", "e")))


def test_translate_is_deterministic():
    f = parse("<<1,2>> (K{1,2} (p & <<2>> X q) U K{1,2} !r) | <<1>> X p")
    assert render(translate(f).formula) == render(translate(f).formula)
    assert translate(f).sidecar() == translate(f).sidecar()


@pytest.mark.parametrize("text", ["[[1]] (u U v)", "<<1>> (u U v)", "<<1>> X E X p"])
def test_translate_rejects_outside_subset(text):
    with pytest.raises(TranslationError, match="unsupported construct"):
        translate(parse(text))


def test_translate_rejects_reserved_atoms():
    with pytest.raises(TranslationError, match="reserved"):
        translate(parse("_p1 & <<1>> X q"))


def test_complete_until_shape():
    target = parse("[[1,2]] (u U v)")
    ctx = TranslationContext(("1", "2"))
    out = eliminate_until_complete(target, target, ctx)
    assert conjuncts(out) == [
        Atom("_p1"),
        parse("A G (_p1 | _q2 -> v | u & [[1,2]] X _q2)"),
        parse("A G (_p1 <-> v | u & [[1,2]] X _p1)"),
        parse("A G (_p1 -> v | u & A X A ((_q2 -> u) U (_q2 -> v)))"),
    ]
    assert parse("[[1,2]] X _q2") == parse("!<<1,2>> X !_q2")
    with pytest.raises(TranslationError):
        eliminate_until_complete(target, target, ctx, mode=Mode.INCOMPLETE)


def test_complete_mode_translates_full_language():
    res = translate(parse("[[1]] (u U v) & <<1>> (K{1} u U K{1} v)"), Mode.COMPLETE)
    assert classify(res.formula) is Fragment.CTLD
    names = [e.atom for e in res.dictionary]
    assert len(names) == len(set(names))


def test_trivial_target_makes_first_conjunct_true():
    system = generate_complete_information(2, 2, 2, 1, seed=4)
    target = parse("[[1]] F true")
    out = eliminate_until_complete(target, target, TranslationContext(("1", "2")))
    first = conjuncts(out)[1]
    ev = Evaluator(system, 3, extra={"_p1": lambda n: Verdict.FALSE, "_q2": lambda n: Verdict.TRUE})
    match first:
        case Implies(ExistsUntil(_, Implies(body, Falsum())), Falsum()):
            pass
    for d in range(3):
        for n in ev.tree.level(d):
            assert ev.holds(n, body) is Verdict.TRUE
    for n in ev.tree.level(0):
        assert ev.holds(n, first) is not Verdict.FALSE


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_output_purity_and_freshness(seed):
    f = random_subset_formula(random.Random(seed), ["1", "2", "3"], ["p", "q"], 3)
    res = translate(f)
    assert classify(res.formula) is Fragment.CTLD
    fresh = [e.atom for e in res.dictionary]
    assert len(fresh) == len(set(fresh))
    assert not set(fresh) & props_of(f)
    assert parse(render(res.formula)) == res.formula


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([(), ("1",), ("1", "2")]), st.sampled_from(["p0", "!p0", "p1"]))
def test_fixpoint_conjunct_matches_lfp(seed, g, arg):
    system = generate_random(2, 2, 2, 2, seed, env_states=2)
    target = CoopUntil(g, DKnows(g, TRUE), DKnows(g, parse(arg)))
    base = Evaluator(system, 3)
    body = iff(Atom("_p"), disj(target.right, conj(target.left, CoopNext(g, Atom("_p")))))
    assert until_conjuncts(target, "_p", "_q")[1] == everywhere(body)
    ev = Evaluator(system, 3, tree=base.tree, extra={"_p": lambda n: base.holds(n, target)})
    for d in range(3):
        for n in ev.tree.level(d):
            assert ev.holds(n, body) is not Verdict.FALSE
