"""Finite interpreted systems: agents plus an environment, local states,
actions, a total transition table and a valuation; runs and their coalition
projections; the action-recording construction."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from atlkctl.formula import ENV, Coalition
from atlkctl.grammar import ATOM_RE

GlobalState = tuple[str, ...]
JointAction = tuple[str, ...]

STAR = "*"


class DomainError(ValueError):
    """Unknown token or an operation outside the system's domain."""


@dataclass(frozen=True)
class InterpretedSystem:
    agents: tuple[str, ...]
    local_states: Mapping[str, tuple[str, ...]]
    actions: Mapping[str, tuple[str, ...]]
    initial: tuple[GlobalState, ...]
    transition: Mapping[tuple[GlobalState, JointAction], GlobalState]
    valuation: Mapping[str, frozenset[GlobalState]]

    @property
    def members(self) -> tuple[str, ...]:
        return self.agents + (ENV,)

    def index(self, member: str) -> int:
        try:
            return self.members.index(member)
        except ValueError:
            raise DomainError(f"unknown agent {member!r}") from None

    def indices(self, g: Coalition) -> tuple[int, ...]:
        return tuple(self.index(a) for a in g)

    def global_states(self) -> Iterator[GlobalState]:
        return itertools.product(*(self.local_states[m] for m in self.members))

    def joint_actions(self) -> Iterator[JointAction]:
        return itertools.product(*(self.actions[m] for m in self.members))

    def coalition_actions(self, g: Coalition) -> Iterator[tuple[str, ...]]:
        return itertools.product(*(self.actions[a] for a in g))

    @property
    def props(self) -> tuple[str, ...]:
        return tuple(sorted(self.valuation))

    def holds_atom(self, state: GlobalState, p: str) -> bool:
        return state in self.valuation.get(p, ())


@dataclass(frozen=True)
class Run:
    """``states[0] actions[0] states[1] ... states[n]``; its length is ``n``."""

    states: tuple[GlobalState, ...]
    actions: tuple[JointAction, ...] = ()

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def last(self) -> GlobalState:
        return self.states[-1]

    def extend(self, action: JointAction, state: GlobalState) -> "Run":
        return Run(self.states + (state,), self.actions + (action,))

    def prefix(self, j: int) -> "Run":
        return Run(self.states[: j + 1], self.actions[:j])


@dataclass(frozen=True)
class LocalRun:
    states: tuple[tuple[str, ...], ...]
    actions: tuple[tuple[str, ...], ...] = ()

    def __len__(self) -> int:
        return len(self.actions)


# -- validation ----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def TotalityViolation(state, action) -> Violation:
    return Violation("TotalityViolation", f"no transition for state {state} under {action}")


def LocalityViolation(member, s1, s2, action, n1, n2) -> Violation:
    return Violation(
        "LocalityViolation",
        f"agent {member}: states {s1} and {s2} agree on {member} and e but {action} "
        f"moves {member} to {n1} and {n2}",
    )


def validate(system: InterpretedSystem) -> list[Violation]:
    out: list[Violation] = []
    if ENV in system.agents:
        out.append(Violation("ReservedAgent", "'e' names the environment and cannot be an agent"))
    if len(set(system.agents)) != len(system.agents):
        out.append(Violation("DuplicateAgent", f"agents {system.agents} contain duplicates"))
    for m in system.members:
        if not system.local_states.get(m):
            out.append(Violation("EmptyLocalStates", f"member {m} has no local states"))
        if not system.actions.get(m):
            out.append(Violation("EmptyActions", f"member {m} has no actions"))
    if out:
        return out
    if not system.initial:
        out.append(Violation("EmptyInitial", "the set of initial states is empty"))
    states = set(system.global_states())
    for s in system.initial:
        if s not in states:
            out.append(Violation("UnknownState", f"initial state {s} is not a global state"))
    for (s, a), nxt in system.transition.items():
        if s not in states or nxt not in states:
            out.append(Violation("UnknownState", f"transition {s} --{a}--> {nxt} uses an unknown state"))
    for p, ss in system.valuation.items():
        for s in ss:
            if s not in states:
                out.append(Violation("UnknownState", f"valuation of {p} mentions unknown state {s}"))
    joint = list(system.joint_actions())
    env = len(system.agents)
    for a in joint:
        seen: dict[tuple[int, str, str], tuple[GlobalState, str]] = {}
        for s in system.global_states():
            nxt = system.transition.get((s, a))
            if nxt is None:
                out.append(TotalityViolation(s, a))
                continue
            for i in range(len(system.members)):
                key = (i, s[i], s[env])
                if key in seen:
                    s0, n0 = seen[key]
                    if n0 != nxt[i]:
                        out.append(LocalityViolation(system.members[i], s0, s, a, n0, nxt[i]))
                else:
                    seen[key] = (s, nxt[i])
    return out


# -- runs ----------------------------------------------------------------------

def successor(system: InterpretedSystem, state: GlobalState, action: JointAction) -> GlobalState:
    try:
        return system.transition[(tuple(state), tuple(action))]
    except KeyError:
        raise DomainError(f"no transition from {state} under {action}") from None


def runs_of_length(system: InterpretedSystem, n: int) -> list[Run]:
    level = [Run((s,)) for s in system.initial]
    joint = list(system.joint_actions())
    for _ in range(n):
        level = [r.extend(a, successor(system, r.last, a)) for r in level for a in joint]
    return level


def runs_up_to(system: InterpretedSystem, n: int) -> list[Run]:
    out: list[Run] = []
    level = [Run((s,)) for s in system.initial]
    joint = list(system.joint_actions())
    for j in range(n + 1):
        out.extend(level)
        if j < n:
            level = [r.extend(a, successor(system, r.last, a)) for r in level for a in joint]
    return out


def project(system: InterpretedSystem, r: Run, g: Coalition) -> LocalRun:
    idx = system.indices(g)
    return LocalRun(
        tuple(tuple(s[i] for i in idx) for s in r.states),
        tuple(tuple(a[i] for i in idx) for a in r.actions),
    )


def indistinguishable(system: InterpretedSystem, r1: Run, r2: Run, g: Coalition) -> bool:
    return len(r1) == len(r2) and project(system, r1, g) == project(system, r2, g)


def equivalence_class(system: InterpretedSystem, r: Run, g: Coalition) -> list[Run]:
    mine = project(system, r, g)
    return [x for x in runs_of_length(system, len(r)) if project(system, x, g) == mine]


# -- the action-recording system ------------------------------------------------

def action_atoms(system: InterpretedSystem) -> dict[tuple[str, str], str]:
    """Proposition naming each (member, action) pair in the action-recording system.

    An action keeps its own name when that name is a legal atom, unused by the
    valuation and owned by a single member; otherwise it becomes ``act_<member>_<action>``.
    """
    owners: dict[str, int] = {}
    for m in system.members:
        for b in system.actions[m]:
            owners[b] = owners.get(b, 0) + 1
    taken = set(system.valuation)
    names: dict[tuple[str, str], str] = {}
    for m in system.members:
        for b in system.actions[m]:
            if owners[b] == 1 and b not in taken and ATOM_RE.match(b) and not b.startswith("_"):
                name = b
            else:
                name = f"act_{m}_{b}"
                k = 0
                while name in taken or name in names.values():
                    k += 1
                    if k > 1000:
                        raise DomainError(f"cannot find a fresh atom for action {b} of {m}")
                    name = f"act_{m}_{b}_{k}"
            names[(m, b)] = name
    if set(names.values()) & taken:
        raise DomainError("action atoms collide with the valuation")
    return names


def _star(system: InterpretedSystem) -> str:
    used = {b for m in system.members for b in system.actions[m]}
    star = STAR
    while star in used:
        star += STAR
    return star


def record_token(local: str, action: str) -> str:
    return f"{local}@{action}"


def build_is_act(system: InterpretedSystem) -> InterpretedSystem:
    """States additionally remember the joint action that produced them;
    each action becomes an atom true where its member last played it."""
    star = _star(system)
    atoms = action_atoms(system)
    members = system.members
    local = {
        m: tuple(record_token(l, a) for l in system.local_states[m] for a in system.actions[m] + (star,))
        for m in members
    }
    split = {m: {record_token(l, a): (l, a) for l in system.local_states[m] for a in system.actions[m] + (star,)} for m in members}

    def base(s: GlobalState) -> tuple[GlobalState, tuple[str, ...]]:
        parts = [split[m][tok] for m, tok in zip(members, s)]
        return tuple(p[0] for p in parts), tuple(p[1] for p in parts)

    initial = tuple(tuple(record_token(l, star) for l in s) for s in system.initial)
    joint = list(system.joint_actions())
    transition = {}
    valuation: dict[str, set[GlobalState]] = {p: set() for p in system.valuation}
    for name in atoms.values():
        valuation[name] = set()
    for s in itertools.product(*(local[m] for m in members)):
        orig, recorded = base(s)
        for p in system.valuation:
            if system.holds_atom(orig, p):
                valuation[p].add(s)
        for m, b in zip(members, recorded):
            if b != star:
                valuation[atoms[(m, b)]].add(s)
        for a in joint:
            nxt = successor(system, orig, a)
            transition[(s, a)] = tuple(record_token(l, b) for l, b in zip(nxt, a))
    return InterpretedSystem(
        agents=system.agents,
        local_states=local,
        actions=dict(system.actions),
        initial=initial,
        transition=transition,
        valuation={p: frozenset(v) for p, v in valuation.items()},
    )


def lift_run(system: InterpretedSystem, r: Run) -> Run:
    """The run of the action-recording system that corresponds to ``r``."""
    star = _star(system)
    states = [tuple(record_token(l, star) for l in r.states[0])]
    for a, s in zip(r.actions, r.states[1:]):
        states.append(tuple(record_token(l, b) for l, b in zip(s, a)))
    return Run(tuple(states), r.actions)


def make_system(
    agents: Sequence[str],
    local_states: Mapping[str, Sequence[str]],
    actions: Mapping[str, Sequence[str]],
    initial,
    transition,
    valuation,
) -> InterpretedSystem:
    """Build a system from plain Python containers (tuples or lists)."""
    return InterpretedSystem(
        agents=tuple(agents),
        local_states={m: tuple(v) for m, v in local_states.items()},
        actions={m: tuple(v) for m, v in actions.items()},
        initial=tuple(tuple(s) for s in initial),
        transition={(tuple(s), tuple(a)): tuple(n) for (s, a), n in transition.items()},
        valuation={p: frozenset(tuple(s) for s in ss) for p, ss in valuation.items()},
    )


def is_complete_information(system: InterpretedSystem) -> bool:
    """Common local-state set, trivial environment, only diagonal states reachable."""
    sets = {tuple(system.local_states[a]) for a in system.agents}
    if len(sets) > 1 or len(system.local_states[ENV]) != 1 or len(system.actions[ENV]) != 1:
        return False
    seen = set(system.initial)
    todo = list(seen)
    joint = list(system.joint_actions())
    while todo:
        s = todo.pop()
        if len(set(s[:-1])) > 1:
            return False
        for a in joint:
            n = successor(system, s, a)
            if n not in seen:
                seen.add(n)
                todo.append(n)
    return True
