"""Reading an interpreted system off a branching-time structure whose states
carry action atoms.

A :class:`CtlStructure` has agents' local states and a serial successor
relation but no actions. Given per-member sets of action atoms, every
``(state, action vector)`` pair is sent to the least successor where all the
vector's atoms hold.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Sequence

from atlkctl.formula import ENV
from atlkctl.system import GlobalState, InterpretedSystem, validate


class ExtractionError(ValueError):
    def __init__(self, state: GlobalState, vector: tuple[str, ...]):
        self.state = state
        self.vector = vector
        super().__init__(f"no successor of reachable state {state} satisfies all of {vector}")


@dataclass(frozen=True)
class CtlStructure:
    agents: tuple[str, ...]
    local_states: Mapping[str, tuple[str, ...]]
    initial: tuple[GlobalState, ...]
    successors: Mapping[GlobalState, tuple[GlobalState, ...]]
    valuation: Mapping[str, frozenset[GlobalState]]

    @property
    def members(self) -> tuple[str, ...]:
        return self.agents + (ENV,)

    def global_states(self) -> list[GlobalState]:
        return list(itertools.product(*(self.local_states[m] for m in self.members)))

    def reachable(self) -> set[GlobalState]:
        seen = set(self.initial)
        todo = deque(self.initial)
        while todo:
            s = todo.popleft()
            for n in self.successors.get(s, ()):
                if n not in seen:
                    seen.add(n)
                    todo.append(n)
        return seen

    def is_serial(self) -> bool:
        return all(self.successors.get(s) for s in self.global_states())


def candidates(m: CtlStructure, state: GlobalState, vector: Sequence[str]) -> list[GlobalState]:
    """Successors of ``state`` where every atom of ``vector`` holds, in document order."""
    order = {s: k for k, s in enumerate(m.global_states())}
    found = {
        t for t in m.successors.get(state, ()) if all(t in m.valuation.get(b, frozenset()) for b in vector)
    }
    return sorted(found, key=order.__getitem__)


def lifted_token(state: GlobalState) -> str:
    return json.dumps(list(state), separators=(",", ":"))


def original_state(state: GlobalState) -> GlobalState:
    """Inverse of the environment lift; identity on states that were not lifted."""
    last = state[-1]
    if last.startswith("["):
        try:
            return tuple(json.loads(last))
        except json.JSONDecodeError:
            pass
    return state


def extract_is_from_ctl_model(m: CtlStructure, act_sets: Mapping[str, Sequence[str]]) -> InterpretedSystem:
    """Interpreted system with actions ``act_sets`` whose transitions follow ``m``.

    When the chosen transitions break locality, the environment's local
    state is widened to the whole original global state, which makes every
    member's update a function of its own and the environment's state.
    """
    members = m.members
    for k in members:
        if not act_sets.get(k):
            raise ValueError(f"empty action set for {k}")
    if not m.is_serial():
        raise ValueError("successor relation is not serial")
    states = m.global_states()
    order = {s: k for k, s in enumerate(states)}
    reach = m.reachable()
    vectors = list(itertools.product(*(tuple(act_sets[k]) for k in members)))
    chosen: dict[tuple[GlobalState, tuple[str, ...]], GlobalState] = {}
    for s in states:
        for a in vectors:
            c = candidates(m, s, a)
            if c:
                chosen[(s, a)] = c[0]
            elif s in reach:
                raise ExtractionError(s, a)
            else:
                chosen[(s, a)] = min(m.successors[s], key=order.__getitem__)
    actions = {k: tuple(act_sets[k]) for k in members}
    direct = InterpretedSystem(m.agents, dict(m.local_states), actions, tuple(m.initial), chosen, dict(m.valuation))
    if not validate(direct):
        return direct
    return _lift_environment(m, actions, chosen)


def _lift_environment(m: CtlStructure, actions, chosen) -> InterpretedSystem:
    states = m.global_states()
    env_tokens = tuple(lifted_token(s) for s in states)
    by_token = dict(zip(env_tokens, states))
    local = {a: tuple(m.local_states[a]) for a in m.agents}
    local[ENV] = env_tokens

    def lift(s: GlobalState) -> GlobalState:
        return s[:-1] + (lifted_token(s),)

    transition = {}
    vectors = list(itertools.product(*(actions[k] for k in m.members)))
    for agents_part in itertools.product(*(local[a] for a in m.agents)):
        for tok in env_tokens:
            src = by_token[tok]
            for a in vectors:
                transition[(agents_part + (tok,), a)] = lift(chosen[(src, a)])
    valuation = {p: frozenset(lift(s) for s in ss) for p, ss in m.valuation.items()}
    return InterpretedSystem(m.agents, local, actions, tuple(lift(s) for s in m.initial), transition, valuation)


def extraction_problems(m: CtlStructure, act_sets: Mapping[str, Sequence[str]], system: InterpretedSystem) -> list[str]:
    """Transitions of ``system`` that leave the required successor sets of ``m``."""
    out = [str(v) for v in validate(system)]
    vectors = list(itertools.product(*(tuple(act_sets[k]) for k in m.members)))
    lifted = system.local_states[ENV] != tuple(m.local_states[ENV])
    for s in m.global_states():
        src = s[:-1] + (lifted_token(s),) if lifted else s
        for a in vectors:
            if not candidates(m, s, a):
                continue
            t = original_state(system.transition[(src, a)]) if lifted else system.transition[(src, a)]
            if t not in m.successors[s]:
                out.append(f"{s} --{a}--> {t} is not a successor")
            elif not all(t in m.valuation.get(b, frozenset()) for b in a):
                out.append(f"{s} --{a}--> {t} misses an action atom")
    return out


def structure_from_system(system: InterpretedSystem) -> CtlStructure:
    """Forget the action labels of a system's transitions."""
    succ: dict[GlobalState, set[GlobalState]] = {}
    for (s, _), t in system.transition.items():
        succ.setdefault(s, set()).add(t)
    order = {s: k for k, s in enumerate(system.global_states())}
    return CtlStructure(
        system.agents,
        dict(system.local_states),
        tuple(system.initial),
        {s: tuple(sorted(ts, key=order.__getitem__)) for s, ts in succ.items()},
        dict(system.valuation),
    )
