"""JSON model documents.

Keys, in canonical order: ``agents``, ``local_states``, ``actions``,
``initial``, ``transitions``, ``valuation``. States and action vectors are
objects keyed by member (the environment is ``"e"``). ``transitions`` is
either the explicit table ``{from, action, to}`` or per-agent local tables
``{agent, own_state, env_state, action_vector, next_own_state}``.
"""

from __future__ import annotations

import json
from itertools import product
from typing import Any

from atlkctl.formula import ENV
from atlkctl.system import InterpretedSystem

KEYS = ("agents", "local_states", "actions", "initial", "transitions", "valuation")
EXPLICIT_KEYS = ("from", "action", "to")
LOCAL_KEYS = ("agent", "own_state", "env_state", "action_vector", "next_own_state")


class ModelFormatError(ValueError):
    pass


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ModelFormatError(message)


def _vector(obj: Any, members: tuple[str, ...], domain: dict[str, tuple[str, ...]], what: str) -> tuple[str, ...]:
    _require(isinstance(obj, dict), f"{what} must be an object keyed by member, got {obj!r}")
    _require(set(obj) == set(members), f"{what} {obj!r} must have exactly the keys {list(members)}")
    for m in members:
        _require(obj[m] in domain[m], f"{what} {obj!r}: unknown token {obj[m]!r} for {m}")
    return tuple(obj[m] for m in members)


def model_from_dict(doc: dict) -> InterpretedSystem:
    _require(isinstance(doc, dict), "model document must be an object")
    unknown = set(doc) - set(KEYS)
    _require(not unknown, f"unknown keys {sorted(unknown)}")
    missing = [k for k in KEYS if k not in doc]
    _require(not missing, f"missing keys {missing}")

    agents = doc["agents"]
    _require(isinstance(agents, list) and all(isinstance(a, str) and a for a in agents), "agents must be a list of names")
    _require(ENV not in agents, "the environment 'e' is implicit and must not be listed among agents")
    _require(len(set(agents)) == len(agents), "duplicate agent names")
    members = tuple(agents) + (ENV,)

    def per_member(key: str) -> dict[str, tuple[str, ...]]:
        table = doc[key]
        _require(isinstance(table, dict) and set(table) == set(members), f"{key} must map exactly {list(members)}")
        out = {}
        for m in members:
            vals = table[m]
            _require(isinstance(vals, list) and vals and all(isinstance(v, str) for v in vals), f"{key}[{m}] must be a nonempty list of strings")
            _require(len(set(vals)) == len(vals), f"{key}[{m}] has duplicates")
            out[m] = tuple(vals)
        return out

    local = per_member("local_states")
    actions = per_member("actions")
    _require(isinstance(doc["initial"], list) and doc["initial"], "initial must be a nonempty list")
    initial = tuple(_vector(s, members, local, "initial state") for s in doc["initial"])

    rows = doc["transitions"]
    _require(isinstance(rows, list), "transitions must be a list")
    transition: dict = {}
    if rows and isinstance(rows[0], dict) and "agent" in rows[0]:
        transition = _from_local_tables(rows, members, local, actions)
    else:
        for row in rows:
            _require(isinstance(row, dict) and set(row) == set(EXPLICIT_KEYS), f"transition row {row!r} must have keys {list(EXPLICIT_KEYS)}")
            src = _vector(row["from"], members, local, "transition source")
            act = _vector(row["action"], members, actions, "action vector")
            dst = _vector(row["to"], members, local, "transition target")
            _require((src, act) not in transition, f"duplicate transition for {row['from']} under {row['action']}")
            transition[(src, act)] = dst

    val = doc["valuation"]
    _require(isinstance(val, dict), "valuation must map propositions to state lists")
    valuation = {}
    for p, states in val.items():
        _require(isinstance(states, list), f"valuation[{p}] must be a list")
        valuation[p] = frozenset(_vector(s, members, local, f"valuation[{p}] state") for s in states)

    return InterpretedSystem(tuple(agents), local, actions, initial, transition, valuation)


def _from_local_tables(rows, members, local, actions) -> dict:
    env = members[-1]
    table: dict[tuple[str, str, str, tuple[str, ...]], str] = {}
    for row in rows:
        _require(isinstance(row, dict) and set(row) == set(LOCAL_KEYS), f"local transition row {row!r} must have keys {list(LOCAL_KEYS)}")
        m = row["agent"]
        _require(m in members, f"unknown member {m!r}")
        _require(row["own_state"] in local[m], f"unknown local state {row['own_state']!r} of {m}")
        _require(row["env_state"] in local[env], f"unknown environment state {row['env_state']!r}")
        _require(row["next_own_state"] in local[m], f"unknown local state {row['next_own_state']!r} of {m}")
        if m == env:
            _require(row["own_state"] == row["env_state"], "environment rows need own_state == env_state")
        act = _vector(row["action_vector"], members, actions, "action vector")
        key = (m, row["own_state"], row["env_state"], act)
        _require(key not in table, f"duplicate local transition {row!r}")
        table[key] = row["next_own_state"]

    transition = {}
    for s in product(*(local[m] for m in members)):
        for a in product(*(actions[m] for m in members)):
            nxt = []
            for m, own in zip(members, s):
                key = (m, own, s[-1], a)
                _require(key in table, f"local tables are not total: missing {m} at {own}/{s[-1]} under {a}")
                nxt.append(table[key])
            transition[(s, a)] = tuple(nxt)
    return transition


def parse_model(text: str) -> InterpretedSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from None
    return model_from_dict(doc)


def model_to_dict(system: InterpretedSystem) -> dict:
    members = system.members

    def keyed(vec):
        return {m: v for m, v in zip(members, vec)}

    order = {s: k for k, s in enumerate(system.global_states())}
    joint = list(system.joint_actions())
    rows = []
    for s in system.global_states():
        for a in joint:
            if (s, a) in system.transition:
                rows.append({"from": keyed(s), "action": keyed(a), "to": keyed(system.transition[(s, a)])})
    return {
        "agents": list(system.agents),
        "local_states": {m: list(system.local_states[m]) for m in members},
        "actions": {m: list(system.actions[m]) for m in members},
        "initial": [keyed(s) for s in system.initial],
        "transitions": rows,
        "valuation": {
            p: [keyed(s) for s in sorted(system.valuation[p], key=order.__getitem__)]
            for p in sorted(system.valuation)
        },
    }


def serialize_model(system: InterpretedSystem) -> str:
    return json.dumps(model_to_dict(system), indent=1) + "\n"
