"""Formula syntax shared by epistemic ATL with perfect recall and CTL with
distributed knowledge.

Only ten constructors exist. Everything else (negation, conjunction, the
dual modalities, eventually/always/weak-until) is built from them by the
helper functions below, and :mod:`atlkctl.grammar` recognises the same shapes
when printing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from typing import Iterable, Iterator

ENV = "e"

Coalition = tuple[str, ...]


def _agent_key(agent: str):
    return (0, int(agent), "") if agent.isdigit() else (1, 0, agent)


def coalition(agents: Iterable[str] = ()) -> Coalition:
    """Canonical coalition: sorted, duplicate free, environment rejected."""
    members = set(agents)
    if ENV in members:
        raise ValueError("the environment cannot be a coalition member")
    for a in members:
        if not a:
            raise ValueError("empty agent id")
    return tuple(sorted(members, key=_agent_key))


class Formula:
    """Base class of the formula tree. Nodes are immutable and hashable."""

    __slots__ = ()

    def children(self) -> tuple["Formula", ...]:
        return tuple(v for v in (getattr(self, f.name) for f in fields(self)) if isinstance(v, Formula))

    def __str__(self) -> str:
        from atlkctl.grammar import render

        return render(self)


def _cached_hash(self) -> int:
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, f.name) for f in fields(self)))
        object.__setattr__(self, "_hash", h)
    return h


def _node(cls):
    cls = dataclass(frozen=True)(cls)
    cls.__hash__ = _cached_hash
    return cls


@_node
class Falsum(Formula):
    pass


@_node
class Atom(Formula):
    name: str


@_node
class Implies(Formula):
    left: Formula
    right: Formula


@_node
class DKnows(Formula):
    coalition: Coalition
    body: Formula


@_node
class CoopNext(Formula):
    coalition: Coalition
    body: Formula


@_node
class CoopUntil(Formula):
    coalition: Coalition
    left: Formula
    right: Formula


@_node
class DualCoopUntil(Formula):
    coalition: Coalition
    left: Formula
    right: Formula


@_node
class ExistsNext(Formula):
    body: Formula


@_node
class ExistsUntil(Formula):
    left: Formula
    right: Formula


@_node
class ForallUntil(Formula):
    left: Formula
    right: Formula


FALSE = Falsum()
COOPERATIVE = (CoopNext, CoopUntil, DualCoopUntil)
BRANCHING = (ExistsNext, ExistsUntil, ForallUntil)


# -- derived connectives -----------------------------------------------------

def neg(f: Formula) -> Formula:
    return Implies(f, FALSE)


TRUE = neg(FALSE)


def conj(a: Formula, b: Formula) -> Formula:
    return neg(Implies(a, neg(b)))


def disj(a: Formula, b: Formula) -> Formula:
    return Implies(neg(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return conj(Implies(a, b), Implies(b, a))


def _balanced(items: list[Formula], join) -> Formula:
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    return join(_balanced(items[:mid], join), _balanced(items[mid:], join))


def big_and(items: Iterable[Formula]) -> Formula:
    """Conjunction in the given order, nested as a balanced tree so that long
    conjunctions stay shallow; the empty conjunction is ``true``."""
    items = list(items)
    return _balanced(items, conj) if items else TRUE


def big_or(items: Iterable[Formula]) -> Formula:
    items = list(items)
    return _balanced(items, disj) if items else FALSE


def poss(g: Coalition, f: Formula) -> Formula:
    return neg(DKnows(g, neg(f)))


def dual_next(g: Coalition, f: Formula) -> Formula:
    return neg(CoopNext(g, neg(f)))


def coop_eventually(g: Coalition, f: Formula) -> Formula:
    return CoopUntil(g, TRUE, f)


def dual_eventually(g: Coalition, f: Formula) -> Formula:
    return DualCoopUntil(g, TRUE, f)


def coop_always(g: Coalition, f: Formula) -> Formula:
    return neg(DualCoopUntil(g, TRUE, neg(f)))


def dual_always(g: Coalition, f: Formula) -> Formula:
    return neg(CoopUntil(g, TRUE, neg(f)))


def _weak_release(a: Formula, b: Formula) -> tuple[Formula, Formula]:
    return neg(b), conj(neg(b), neg(a))


def coop_weak_until(g: Coalition, a: Formula, b: Formula) -> Formula:
    return neg(DualCoopUntil(g, *_weak_release(a, b)))


def dual_weak_until(g: Coalition, a: Formula, b: Formula) -> Formula:
    return neg(CoopUntil(g, *_weak_release(a, b)))


def forall_next(f: Formula) -> Formula:
    return neg(ExistsNext(neg(f)))


def exists_eventually(f: Formula) -> Formula:
    return ExistsUntil(TRUE, f)


def forall_eventually(f: Formula) -> Formula:
    return ForallUntil(TRUE, f)


def exists_always(f: Formula) -> Formula:
    return neg(ForallUntil(TRUE, neg(f)))


def forall_always(f: Formula) -> Formula:
    return neg(ExistsUntil(TRUE, neg(f)))


def exists_weak_until(a: Formula, b: Formula) -> Formula:
    return neg(ForallUntil(*_weak_release(a, b)))


def forall_weak_until(a: Formula, b: Formula) -> Formula:
    return neg(ExistsUntil(*_weak_release(a, b)))


# -- traversal ---------------------------------------------------------------

def subformulas(f: Formula) -> Iterator[Formula]:
    """Post-order, left to right."""
    for c in f.children():
        yield from subformulas(c)
    yield f


def props_of(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def coalitions_of(f: Formula) -> set[Coalition]:
    return {g.coalition for g in subformulas(f) if hasattr(g, "coalition")}


def agents_of(f: Formula) -> Coalition:
    return coalition(a for g in coalitions_of(f) for a in g)


def modal_depth(f: Formula) -> int:
    inner = max((modal_depth(c) for c in f.children()), default=0)
    return inner if isinstance(f, (Falsum, Atom, Implies)) else inner + 1


def rebuild(f: Formula, kids: list[Formula]) -> Formula:
    match f:
        case Implies():
            return Implies(*kids)
        case DKnows(g, _):
            return DKnows(g, kids[0])
        case CoopNext(g, _):
            return CoopNext(g, kids[0])
        case CoopUntil(g, _, _):
            return CoopUntil(g, *kids)
        case DualCoopUntil(g, _, _):
            return DualCoopUntil(g, *kids)
        case ExistsNext():
            return ExistsNext(kids[0])
        case ExistsUntil():
            return ExistsUntil(*kids)
        case ForallUntil():
            return ForallUntil(*kids)
    return f


def replace(f: Formula, old: Formula, new: Formula) -> Formula:
    """Replace every occurrence of the subformula ``old`` by ``new``."""
    if f == old:
        return new
    kids = f.children()
    if not kids:
        return f
    out = [replace(c, old, new) for c in kids]
    if all(a is b for a, b in zip(out, kids)):
        return f
    return rebuild(f, out)


def substitute(beta: Formula, p: str, alpha: Formula) -> Formula:
    """Replace every occurrence of the atom ``p`` in ``beta`` by ``alpha``."""
    return replace(beta, Atom(p), alpha)


# -- classification ------------------------------------------------------------

class Fragment(str, enum.Enum):
    CTLD = "CtlD"
    SUBSET = "AtlkpSubset"
    FULL = "AtlkpFull"
    MIXED = "Mixed"

    def __str__(self) -> str:
        return self.value


def is_subset_until(f: Formula) -> bool:
    """``<<G>>(K_G a U K_G b)`` with the modality's own coalition on both sides."""
    return (
        isinstance(f, CoopUntil)
        and isinstance(f.left, DKnows)
        and isinstance(f.right, DKnows)
        and f.left.coalition == f.coalition
        and f.right.coalition == f.coalition
    )


def classify(f: Formula) -> Fragment:
    nodes = list(subformulas(f))
    coop = any(isinstance(g, COOPERATIVE) for g in nodes)
    branching = any(isinstance(g, BRANCHING) for g in nodes)
    if not coop:
        return Fragment.CTLD
    if branching:
        return Fragment.MIXED
    if all(is_subset_until(g) for g in nodes if isinstance(g, CoopUntil)) and not any(
        isinstance(g, DualCoopUntil) for g in nodes
    ):
        return Fragment.SUBSET
    return Fragment.FULL


def first_offender(f: Formula, allowed: tuple[Fragment, ...]) -> Formula | None:
    """Innermost subformula that pushes ``f`` outside the ``allowed`` fragments."""
    if classify(f) in allowed:
        return None
    for c in f.children():
        bad = first_offender(c, allowed)
        if bad is not None:
            return bad
    return f


def describe_offence(f: Formula) -> str:
    match f:
        case DualCoopUntil():
            return "unsupported construct: dual cooperation modality [[G]] with an until objective"
        case CoopUntil():
            return "unsupported construct: <<G>> until whose arguments are not both K_G-guarded by the same coalition"
        case ExistsNext() | ExistsUntil() | ForallUntil():
            return "unsupported construct: path quantifier mixed with cooperation modalities"
    return "unsupported construct: mixes path quantifiers and cooperation modalities"
