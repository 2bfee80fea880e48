"""Seeded random instances: interpreted systems, complete-information
systems, branching structures with action atoms, and formulas."""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from atlkctl.extract import CtlStructure
from atlkctl.formula import (
    FALSE,
    TRUE,
    Atom,
    ENV,
    CoopNext,
    CoopUntil,
    DKnows,
    ExistsNext,
    ExistsUntil,
    ForallUntil,
    Formula,
    Implies,
    coalition,
    conj,
    disj,
    neg,
)
from atlkctl.system import InterpretedSystem


def _counts(value: int | Sequence[int], n: int, what: str) -> list[int]:
    counts = [value] * n if isinstance(value, int) else list(value)
    if len(counts) != n:
        raise ValueError(f"expected {n} {what} counts, got {len(counts)}")
    if any(c < 1 for c in counts):
        raise ValueError(f"{what} counts must be at least 1")
    return counts


def agent_names(n: int) -> tuple[str, ...]:
    return tuple(str(k) for k in range(1, n + 1))


def generate_random(
    agents: int,
    states: int | Sequence[int],
    actions: int | Sequence[int],
    props: int,
    seed: int,
    *,
    env_states: int = 1,
    env_actions: int = 1,
    initial: int = 1,
) -> InterpretedSystem:
    """A random system whose transitions come from per-member local update
    functions ``(own state, environment state, joint action) -> own state``,
    so locality holds by construction."""
    if agents < 1 or props < 0 or env_states < 1 or env_actions < 1 or initial < 1:
        raise ValueError("generator bounds must be at least 1")
    rng = random.Random(seed)
    names = agent_names(agents)
    members = names + (ENV,)
    n_states = _counts(states, agents, "state") + [env_states]
    n_actions = _counts(actions, agents, "action") + [env_actions]
    local = {m: tuple(f"s{m}_{k}" for k in range(c)) for m, c in zip(members, n_states)}
    acts = {m: tuple(f"a{m}_{k}" for k in range(c)) for m, c in zip(members, n_actions)}
    joint = list(itertools.product(*(acts[m] for m in members)))

    update = {}
    for m in members:
        for own in local[m]:
            for env in local[ENV]:
                if m == ENV and own != env:
                    continue
                for a in joint:
                    update[(m, own, env, a)] = rng.choice(local[m])

    glob = list(itertools.product(*(local[m] for m in members)))
    transition = {}
    for s in glob:
        for a in joint:
            transition[(s, a)] = tuple(update[(m, own, s[-1], a)] for m, own in zip(members, s))
    init = tuple(sorted(rng.sample(glob, min(initial, len(glob))), key=glob.index))
    valuation = {f"p{k}": frozenset(s for s in glob if rng.random() < 0.5) for k in range(props)}
    return InterpretedSystem(names, local, acts, init, transition, valuation)


def generate_complete_information(agents: int, states: int, actions: int, props: int, seed: int) -> InterpretedSystem:
    """All agents share a state set and move together by one shared update
    function; the environment has one state and one action. Initial states are
    diagonal, so every reachable state is too."""
    rng = random.Random(seed)
    names = agent_names(agents)
    common = tuple(f"c{k}" for k in range(states))
    local = {a: common for a in names}
    local[ENV] = ("e0",)
    acts = {a: tuple(f"a{a}_{k}" for k in range(actions)) for a in names}
    acts[ENV] = ("d",)
    members = names + (ENV,)
    joint = list(itertools.product(*(acts[m] for m in members)))
    shared = {(c, a): rng.choice(common) for c in common for a in joint}
    glob = list(itertools.product(*(local[m] for m in members)))
    transition = {}
    for s in glob:
        for a in joint:
            transition[(s, a)] = tuple(shared[(c, a)] for c in s[:-1]) + ("e0",)
    diagonal = [tuple([c] * agents) + ("e0",) for c in common]
    init = tuple(sorted(rng.sample(diagonal, rng.randint(1, min(2, len(diagonal)))), key=diagonal.index))
    valuation = {f"p{k}": frozenset(s for s in glob if rng.random() < 0.5) for k in range(props)}
    return InterpretedSystem(names, local, acts, init, transition, valuation)


def default_act_sets(agents: int, per_member: int = 2) -> dict[str, tuple[str, ...]]:
    members = agent_names(agents) + (ENV,)
    return {m: (f"nop_{m}",) + tuple(f"b_{m}_{k}" for k in range(1, per_member)) for m in members}


def random_ctl_structure(
    agents: int,
    states: int,
    act_sets: dict[str, Sequence[str]],
    props: int,
    seed: int,
    *,
    extra_edges: int = 2,
) -> CtlStructure:
    """A serial structure in which every action vector labels some successor
    of every state, i.e. the action-availability constraint holds everywhere."""
    rng = random.Random(seed)
    names = agent_names(agents)
    members = names + (ENV,)
    local = {m: tuple(f"l{m}_{k}" for k in range(states)) for m in members}
    glob = list(itertools.product(*(local[m] for m in members)))
    vectors = list(itertools.product(*(tuple(act_sets[m]) for m in members)))
    succ: dict = {s: set() for s in glob}
    marks: dict[str, set] = {b: set() for m in members for b in act_sets[m]}
    for s in glob:
        for a in vectors:
            t = rng.choice(glob)
            succ[s].add(t)
            for b in a:
                marks[b].add(t)
        for _ in range(rng.randint(0, extra_edges)):
            succ[s].add(rng.choice(glob))
    for b in marks:
        marks[b].update(s for s in glob if rng.random() < 0.25)
    valuation = {f"p{k}": frozenset(s for s in glob if rng.random() < 0.5) for k in range(props)}
    valuation.update({b: frozenset(v) for b, v in marks.items()})
    order = {s: k for k, s in enumerate(glob)}
    init = (rng.choice(glob),)
    return CtlStructure(
        names, local, init, {s: tuple(sorted(ts, key=order.__getitem__)) for s, ts in succ.items()}, valuation
    )


# -- formulas ------------------------------------------------------------------

def _random_coalition(rng: random.Random, agents: Sequence[str]) -> tuple[str, ...]:
    return coalition(a for a in agents if rng.random() < 0.5)


def _literal(rng: random.Random, props: Sequence[str]) -> Formula:
    roll = rng.random()
    if roll < 0.05:
        return FALSE
    if roll < 0.1:
        return TRUE
    atom = Atom(rng.choice(props))
    return neg(atom) if rng.random() < 0.3 else atom


def random_subset_formula(rng: random.Random, agents: Sequence[str], props: Sequence[str], depth: int) -> Formula:
    """A formula of the translatable fragment with modal depth at most ``depth``."""
    if depth <= 0 or rng.random() < 0.2:
        return _literal(rng, props)
    kinds = ["not", "imp", "and", "or", "know", "next"] + (["until", "until"] if depth >= 2 else [])

    def sub(d: int = depth - 1) -> Formula:
        return random_subset_formula(rng, agents, props, d)

    match rng.choice(kinds):
        case "not":
            return neg(sub())
        case "imp":
            return Implies(sub(), sub())
        case "and":
            return conj(sub(), sub())
        case "or":
            return disj(sub(), sub())
        case "know":
            return DKnows(_random_coalition(rng, agents), sub())
        case "next":
            return CoopNext(_random_coalition(rng, agents), sub())
        case _:
            g = _random_coalition(rng, agents)
            return CoopUntil(g, DKnows(g, sub(depth - 2)), DKnows(g, sub(depth - 2)))


def random_ctl_formula(rng: random.Random, agents: Sequence[str], props: Sequence[str], depth: int) -> Formula:
    """A branching-time formula with distributed knowledge."""
    if depth <= 0 or rng.random() < 0.25:
        return _literal(rng, props)

    def sub() -> Formula:
        return random_ctl_formula(rng, agents, props, depth - 1)

    match rng.choice(["imp", "know", "ex", "eu", "au"]):
        case "imp":
            return Implies(sub(), sub())
        case "know":
            return DKnows(_random_coalition(rng, agents), sub())
        case "ex":
            return ExistsNext(sub())
        case "eu":
            return ExistsUntil(sub(), sub())
        case _:
            return ForallUntil(sub(), sub())
