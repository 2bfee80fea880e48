import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atlkctl.generate import generate_random
from atlkctl.modelio import ModelFormatError, model_to_dict, parse_model, serialize_model
from atlkctl.system import (
    STAR,
    DomainError,
    Run,
    action_atoms,
    build_is_act,
    equivalence_class,
    indistinguishable,
    is_complete_information,
    lift_run,
    make_system,
    project,
    runs_of_length,
    runs_up_to,
    successor,
    validate,
)

from conftest import DATA


def test_toy1_is_valid(toy1):
    assert validate(toy1) == []


def test_missing_transition_is_a_totality_violation(toy1):
    table = dict(toy1.transition)
    table.pop(next(iter(table)))
    broken = make_system(toy1.agents, toy1.local_states, toy1.actions, toy1.initial, table, toy1.valuation)
    assert [v.kind for v in validate(broken)] == ["TotalityViolation"]


def test_locality_violation_detected():
    local = {"1": ["x0", "x1"], "2": ["y0", "y1"], "e": ["e0"]}
    actions = {"1": ["a"], "2": ["c"], "e": ["d"]}
    transition = {(s, ("a", "c", "d")): s for s in itertools.product(*local.values())}
    # agent 1 at x0 moves to x1 only when agent 2 is at y1
    transition[(("x0", "y1", "e0"), ("a", "c", "d"))] = ("x1", "y1", "e0")
    system = make_system(["1", "2"], local, actions, [("x0", "y0", "e0")], transition, {})
    kinds = [v.kind for v in validate(system)]
    assert kinds == ["LocalityViolation"]
    assert "agent 1" in str(validate(system)[0])


def test_reserved_and_empty():
    system = make_system(["e"], {"e": ["s"]}, {"e": ["a"]}, [("s", "s")], {}, {})
    assert any(v.kind == "ReservedAgent" for v in validate(system))


def test_run_counts(toy1, toy1_two_env_actions):
    assert [len(r) for r in runs_up_to(toy1, 0)] == [0]
    # one initial state and two joint actions (agent 1 has two, everyone else one)
    assert len(runs_up_to(toy1, 1)) == 1 + 2
    assert len(runs_up_to(toy1_two_env_actions, 1)) == 1 + 4


def test_successor(toy1):
    assert successor(toy1, ("x0", "y0", "e0"), ("a", "c", "d")) == ("x1", "y0", "e0")
    assert successor(toy1, ("x0", "y0", "e0"), ("b", "c", "d")) == ("x0", "y0", "e0")
    with pytest.raises(DomainError):
        successor(toy1, ("x9", "y0", "e0"), ("a", "c", "d"))


def test_projection(toy1, r0):
    r = r0.extend(("a", "c", "d"), ("x1", "y0", "e0"))
    assert project(toy1, r, ()).states == ((), ())
    assert project(toy1, r, ()).actions == ((),)
    assert project(toy1, r, ("1", "2")).states == (("x0", "y0"), ("x1", "y0"))
    assert project(toy1, r0, ("1",)).states == (("x0",),)
    assert len(project(toy1, r0, ("1",))) == 0


def test_indistinguishability(toy1, toy1_two_env_actions, r0):
    r = runs_of_length(toy1, 2)[0]
    assert indistinguishable(toy1, r, r, ("1",))
    assert equivalence_class(toy1, r, ()) == runs_of_length(toy1, 2)
    sys2 = toy1_two_env_actions
    env_only = [
        (x, y) for x, y in itertools.combinations(runs_of_length(sys2, 1), 2) if x.actions[0][:2] == y.actions[0][:2]
    ]
    assert env_only
    for x, y in env_only:
        assert indistinguishable(sys2, x, y, ("1",)) == (project(sys2, x, ("1",)) == project(sys2, y, ("1",)))
        assert indistinguishable(sys2, x, y, ("1",))


def test_runs_of_different_length_are_distinguishable(toy1, r0):
    assert not indistinguishable(toy1, r0, runs_of_length(toy1, 1)[0], ())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_indistinguishability_is_an_equivalence_and_coarsens(seed):
    system = generate_random(2, 2, 2, 1, seed, env_states=2, initial=2)
    for n in range(3):
        runs = runs_of_length(system, n)
        for g in [(), ("1",), ("2",), ("1", "2")]:
            for x in runs:
                assert indistinguishable(system, x, x, g)
            for x, y in itertools.product(runs, repeat=2):
                if indistinguishable(system, x, y, g):
                    assert indistinguishable(system, y, x, g)
                    for sub in itertools.combinations(g, len(g) - 1) if g else []:
                        assert indistinguishable(system, x, y, sub)
        sample = runs[:6]
        for x, y, z in itertools.product(sample, repeat=3):
            if indistinguishable(system, x, y, ("1",)) and indistinguishable(system, y, z, ("1",)):
                assert indistinguishable(system, x, z, ("1",))


def test_is_act_initial_states_record_star(toy1):
    lifted = build_is_act(toy1)
    for s in lifted.initial:
        assert all(tok.endswith("@" + STAR) for tok in s)
    assert validate(lifted) == []


def test_is_act_local_state_counts(toy1):
    lifted = build_is_act(toy1)
    for m in toy1.members:
        assert len(lifted.local_states[m]) == len(toy1.local_states[m]) * (len(toy1.actions[m]) + 1)


def test_is_act_action_atoms(toy1):
    lifted = build_is_act(toy1)
    start = lifted.initial[0]
    after = successor(lifted, start, ("a", "c", "d"))
    assert lifted.holds_atom(after, "a")
    assert not lifted.holds_atom(after, "b")
    assert lifted.holds_atom(after, "p")
    assert not lifted.holds_atom(start, "a")


def test_action_atoms_are_renamed_on_collision():
    system = make_system(
        ["1", "2"],
        {"1": ["s"], "2": ["s"], "e": ["s"]},
        {"1": ["go", "p"], "2": ["go"], "e": ["x"]},
        [("s", "s", "s")],
        {(("s", "s", "s"), a): ("s", "s", "s") for a in itertools.product(["go", "p"], ["go"], ["x"])},
        {"p": []},
    )
    names = action_atoms(system)
    assert names[("1", "go")] == "act_1_go"
    assert names[("2", "go")] == "act_2_go"
    assert names[("1", "p")] == "act_1_p"
    assert names[("e", "x")] == "x"


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_is_act_preserves_valuation_along_runs(seed):
    system = generate_random(2, 2, 2, 2, seed, env_states=2, env_actions=2)
    lifted = build_is_act(system)
    lifted_runs = set(runs_up_to(lifted, 3))
    for r in runs_up_to(system, 3):
        twin = lift_run(system, r)
        assert twin in lifted_runs
        for j in range(len(r) + 1):
            for p in system.props:
                assert system.holds_atom(r.states[j], p) == lifted.holds_atom(twin.states[j], p)


def test_model_round_trip(toy1):
    text = (DATA / "toy1.json").read_text()
    assert serialize_model(parse_model(text)) == text
    assert model_to_dict(parse_model(text))["agents"] == ["1", "2"]


def test_local_table_documents():
    doc = {
        "agents": ["1"],
        "local_states": {"1": ["x0", "x1"], "e": ["e0"]},
        "actions": {"1": ["a", "b"], "e": ["d"]},
        "initial": [{"1": "x0", "e": "e0"}],
        "transitions": [
            {"agent": m, "own_state": own, "env_state": "e0", "action_vector": {"1": a, "e": "d"}, "next_own_state": nxt}
            for m, own, a, nxt in [
                ("1", "x0", "a", "x1"), ("1", "x0", "b", "x0"), ("1", "x1", "a", "x1"), ("1", "x1", "b", "x1"),
                ("e", "e0", "a", "e0"), ("e", "e0", "b", "e0"),
            ]
        ],
        "valuation": {"p": [{"1": "x1", "e": "e0"}]},
    }
    import json

    system = parse_model(json.dumps(doc))
    assert validate(system) == []
    assert successor(system, ("x0", "e0"), ("a", "d")) == ("x1", "e0")


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("valuation"),
        lambda d: d.update(extra=1),
        lambda d: d["initial"].append({"1": "zz", "2": "y0", "e": "e0"}),
        lambda d: d["transitions"].pop(),
        lambda d: d.update(agents=["1", "e"]),
    ],
)
def test_malformed_documents(mutate):
    import json

    doc = json.loads((DATA / "toy1.json").read_text())
    mutate(doc)
    text = json.dumps(doc)
    try:
        system = parse_model(text)
    except ModelFormatError:
        return
    assert validate(system)


def test_generator_is_valid_and_deterministic():
    a = generate_random(2, 2, 2, 2, seed=7)
    assert validate(a) == []
    assert serialize_model(a) == serialize_model(generate_random(2, 2, 2, 2, seed=7))
    assert serialize_model(a) != serialize_model(generate_random(2, 2, 2, 2, seed=8))
    with pytest.raises(ValueError):
        generate_random(2, 0, 2, 2, seed=1)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 2), st.integers(0, 10_000))
def test_generated_systems_validate(agents, states, actions, seed):
    assert validate(generate_random(agents, states, actions, 1, seed, env_states=2, env_actions=2)) == []


def test_complete_information_detection(toy1):
    from atlkctl.generate import generate_complete_information

    assert is_complete_information(generate_complete_information(2, 3, 2, 1, seed=3))
    assert not is_complete_information(toy1)


def test_prefix_and_extend(r0):
    r = r0.extend(("a", "c", "d"), ("x1", "y0", "e0"))
    assert r.prefix(0) == r0
    assert isinstance(r, Run) and len(r) == 1
