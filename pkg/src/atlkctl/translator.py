"""Rewriting cooperation modalities away.

The pipeline first replaces every ``<<G>>(K_G a U K_G b)`` by a fresh atom
constrained by three fixpoint conjuncts, then replaces every ``<<G>> X a`` by
a knowledge statement about fresh action atoms, and finally requires that
every vector of action atoms labels some successor. The output contains only
branching-time operators and distributed knowledge.

In complete mode ``[[G]](a U b)`` (and unguarded ``<<G>>(a U b)``) are also
accepted; they are eliminated with the same three-conjunct pattern, without
knowledge guards.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from atlkctl.formula import (
    ENV,
    Atom,
    Coalition,
    CoopNext,
    CoopUntil,
    DKnows,
    DualCoopUntil,
    ExistsNext,
    Falsum,
    ForallUntil,
    Formula,
    Fragment,
    Implies,
    agents_of,
    big_and,
    coalition,
    conj,
    describe_offence,
    disj,
    dual_next,
    first_offender,
    forall_always,
    forall_next,
    iff,
    is_subset_until,
    neg,
    poss,
    props_of,
    replace,
    subformulas,
)
from atlkctl.grammar import render

RESERVED_PREFIX = "_"


class Mode(str, enum.Enum):
    INCOMPLETE = "incomplete"
    COMPLETE = "complete"

    def __str__(self) -> str:
        return self.value


GUARANTEE = {
    Mode.INCOMPLETE: "satisfiability-preserving forward; model-extraction certified backward",
    Mode.COMPLETE: "satisfiability-preserving forward on complete-information systems; model-extraction certified backward",
}

ALLOWED = {
    Mode.INCOMPLETE: (Fragment.CTLD, Fragment.SUBSET),
    Mode.COMPLETE: (Fragment.CTLD, Fragment.SUBSET, Fragment.FULL),
}


class TranslationError(ValueError):
    def __init__(self, message: str, offender: Formula | None = None):
        self.offender = offender
        super().__init__(message if offender is None else f"{message}: {render(offender)}")


@dataclass(frozen=True)
class AtomEntry:
    atom: str
    role: str
    origin: str

    def to_dict(self) -> dict:
        return {"atom": self.atom, "role": self.role, "origin": self.origin}


@dataclass(frozen=True)
class TraceStep:
    rule: str
    target: Formula
    fresh: tuple[str, ...]
    conjuncts: tuple[Formula, ...]

    def describe(self) -> str:
        lines = [f"[{self.rule}] {render(self.target)}  fresh: {', '.join(self.fresh) or '-'}"]
        lines.extend(f"  + {render(c)}" for c in self.conjuncts)
        return "\n".join(lines)


@dataclass
class TranslationContext:
    """Fresh-name allocation and the growing per-member action atom sets."""

    agents: Coalition
    taken: set[str] = field(default_factory=set)
    counter: int = 0
    act_sets: dict[str, list[str]] = field(default_factory=dict)
    atom_log: list[AtomEntry] = field(default_factory=list)
    trace: list[TraceStep] = field(default_factory=list)
    shared: dict[Formula, tuple[str, ...]] = field(default_factory=dict)
    last_availability: Formula | None = None

    def __post_init__(self) -> None:
        if not self.act_sets:
            for m in self.members:
                nop = self._claim(f"{RESERVED_PREFIX}nop_{m}")
                self.act_sets[m] = [nop]
                self.atom_log.append(AtomEntry(nop, "nop", m))

    @property
    def members(self) -> tuple[str, ...]:
        return tuple(self.agents) + (ENV,)

    def _claim(self, name: str) -> str:
        base, k = name, 0
        while name in self.taken:
            k += 1
            name = f"{base}_{k}"
        self.taken.add(name)
        return name

    def fresh(self, stem: str) -> str:
        self.counter += 1
        return self._claim(f"{RESERVED_PREFIX}{stem}{self.counter}")

    def add_action(self, member: str, g: Coalition, origin: Formula) -> str:
        tag = "".join(g) or "none"
        self.counter += 1
        name = self._claim(f"{RESERVED_PREFIX}act_{tag}_{member}_{self.counter}")
        self.act_sets[member].append(name)
        role = "env-action" if member == ENV else f"action:{member}"
        self.atom_log.append(AtomEntry(name, role, render(origin)))
        return name

    def snapshot(self) -> dict[str, tuple[str, ...]]:
        return {m: tuple(v) for m, v in self.act_sets.items()}


@dataclass(frozen=True)
class TranslationResult:
    formula: Formula
    core: Formula
    constraints: tuple[Formula, ...]
    dictionary: tuple[AtomEntry, ...]
    act_sets: Mapping[str, tuple[str, ...]]
    agents: Coalition
    mode: Mode
    trace: tuple[TraceStep, ...]

    def sidecar(self) -> dict:
        return {
            "mode": str(self.mode),
            "guarantee": GUARANTEE[self.mode],
            "agents": list(self.agents),
            "act_sets": {m: list(v) for m, v in self.act_sets.items()},
            "atoms": [e.to_dict() for e in self.dictionary],
        }


# -- formula builders ----------------------------------------------------------

def everywhere(f: Formula) -> Formula:
    """``K{} A G f``: f holds at every run reachable from any initial state."""
    return DKnows((), forall_always(f))


def build_A(act_sets: Mapping[str, Sequence[str]], members: Sequence[str] | None = None) -> Formula:
    """Every vector of action atoms is realised by some successor."""
    members = tuple(act_sets) if members is None else tuple(members)
    for m in members:
        if not act_sets.get(m):
            raise TranslationError(f"empty action set for {m}")
    vectors = itertools.product(*(act_sets[m] for m in members))
    return big_and(ExistsNext(big_and(Atom(b) for b in vec)) for vec in vectors)


def until_conjuncts(target: CoopUntil, p: str, q: str) -> tuple[Formula, Formula, Formula]:
    """The three constraints tying ``p`` to ``<<G>>(K_G a U K_G b)``."""
    g, kphi, kpsi = target.coalition, target.left, target.right
    return _fixpoint_conjuncts(lambda x: CoopNext(g, x), kphi, kpsi, p, q, everywhere)


def complete_until_conjuncts(target: CoopUntil | DualCoopUntil, p: str, q: str) -> tuple[Formula, Formula, Formula]:
    """The same pattern for complete information, with unguarded arguments."""
    g = target.coalition
    step = (lambda x: CoopNext(g, x)) if isinstance(target, CoopUntil) else (lambda x: dual_next(g, x))
    return _fixpoint_conjuncts(step, target.left, target.right, p, q, forall_always)


def _fixpoint_conjuncts(step, phi, psi, p, q, scope):
    pa, qa = Atom(p), Atom(q)

    def unfold(x: Formula) -> Formula:
        return disj(psi, conj(phi, x))

    return (
        scope(Implies(disj(pa, qa), unfold(step(qa)))),
        scope(iff(pa, unfold(step(pa)))),
        scope(Implies(pa, unfold(forall_next(ForallUntil(Implies(qa, phi), Implies(qa, psi)))))),
    )


def next_replacement(target: CoopNext, atoms: Sequence[str]) -> Formula:
    return DKnows(target.coalition, forall_next(Implies(big_and(Atom(a) for a in atoms), target.body)))


def next_foil(target: CoopNext, replacement: Formula, env_atom: str) -> Formula:
    foil = poss(target.coalition, forall_next(Implies(Atom(env_atom), neg(target.body))))
    return everywhere(disj(replacement, foil))


# -- single steps ----------------------------------------------------------------

def _check_fresh_input(f: Formula) -> None:
    bad = sorted(p for p in props_of(f) if p.startswith(RESERVED_PREFIX))
    if bad:
        raise TranslationError(f"atoms starting with '{RESERVED_PREFIX}' are reserved for generated names: {', '.join(bad)}")


def _until_step(target: Formula, ctx: TranslationContext, mode: Mode) -> tuple[str, tuple[Formula, ...]]:
    if target in ctx.shared:
        return ctx.shared[target][0], ()
    if isinstance(target, CoopUntil) and is_subset_until(target):
        rule, build = "until", until_conjuncts
    elif mode is Mode.COMPLETE and isinstance(target, (CoopUntil, DualCoopUntil)):
        rule, build = "until-complete", complete_until_conjuncts
    else:
        raise TranslationError("target is not an eliminable until", target)
    p, q = ctx.fresh("p"), ctx.fresh("q")
    origin = render(target)
    ctx.atom_log += [AtomEntry(p, "p", origin), AtomEntry(q, "q", origin)]
    ctx.shared[target] = (p, q)
    conjuncts = build(target, p, q)
    ctx.trace.append(TraceStep(rule, target, (p, q), conjuncts))
    return p, conjuncts


def _next_step(target: CoopNext, ctx: TranslationContext) -> tuple[Formula, tuple[Formula, ...]]:
    if not isinstance(target, CoopNext):
        raise TranslationError("target is not a cooperative next", target)
    if any(isinstance(g, (CoopNext, CoopUntil, DualCoopUntil)) for g in subformulas(target.body)):
        raise TranslationError("the body of an eliminated next must be free of cooperation modalities", target)
    missing = [a for a in target.coalition if a not in ctx.agents]
    if missing:
        raise TranslationError(f"agents {missing} are not part of the translation context", target)
    atoms = [ctx.add_action(a, target.coalition, target) for a in target.coalition]
    env_atom = ctx.add_action(ENV, target.coalition, target)
    replacement = next_replacement(target, atoms)
    foil = next_foil(target, replacement, env_atom)
    ctx.trace.append(TraceStep("next", target, tuple(atoms) + (env_atom,), (foil,)))
    return replacement, (foil,)


def _strip_availability(chi: Formula, ctx: TranslationContext) -> Formula:
    if ctx.last_availability is None:
        return chi
    match chi:
        case Implies(Implies(rest, Implies(last, Falsum())), Falsum()) if last == ctx.last_availability:
            return rest
    return chi


def eliminate_until(chi: Formula, target: CoopUntil, ctx: TranslationContext) -> Formula:
    """Replace ``target`` in ``chi`` by a fresh atom and conjoin its three constraints."""
    if not is_subset_until(target):
        raise TranslationError("target is not of the form <<G>>(K_G a U K_G b)", target)
    p, conjuncts = _until_step(target, ctx, Mode.INCOMPLETE)
    return big_and((replace(chi, target, Atom(p)),) + conjuncts)


def eliminate_until_complete(chi: Formula, target: DualCoopUntil, ctx: TranslationContext, mode: Mode = Mode.COMPLETE) -> Formula:
    if mode is not Mode.COMPLETE:
        raise TranslationError("[[G]] until elimination needs complete mode", target)
    p, conjuncts = _until_step(target, ctx, Mode.COMPLETE)
    return big_and((replace(chi, target, Atom(p)),) + conjuncts)


def eliminate_next(chi: Formula, target: CoopNext, ctx: TranslationContext) -> Formula:
    """Replace ``target`` by its action-atom form, conjoin the foil constraint and
    an availability constraint over the enlarged action sets (dropping the
    previous one if ``chi`` ends with it)."""
    replacement, extra = _next_step(target, ctx)
    chi = _strip_availability(chi, ctx)
    availability = everywhere(build_A(ctx.act_sets, ctx.members))
    ctx.last_availability = availability
    return conj(big_and((replace(chi, target, replacement),) + extra), availability)


# -- the pipeline ----------------------------------------------------------------

def _first(parts: Iterable[Formula], pred) -> Formula | None:
    for part in parts:
        for g in subformulas(part):
            if pred(g):
                return g
    return None


def translate(f: Formula, mode: Mode | str = Mode.INCOMPLETE, agents: Iterable[str] = ()) -> TranslationResult:
    mode = Mode(mode)
    offender = first_offender(f, ALLOWED[mode])
    if offender is not None:
        raise TranslationError(describe_offence(offender), offender)
    _check_fresh_input(f)
    sigma = coalition(tuple(agents_of(f)) + tuple(agents))
    ctx = TranslationContext(sigma, taken=set(props_of(f)))

    core = f
    constraints: list[Formula] = []

    def rewrite(old: Formula, new: Formula) -> None:
        nonlocal core
        core = replace(core, old, new)
        constraints[:] = [replace(c, old, new) for c in constraints]

    def is_until(g: Formula) -> bool:
        return isinstance(g, (CoopUntil, DualCoopUntil))

    while (target := _first([core, *constraints], is_until)) is not None:
        p, conjuncts = _until_step(target, ctx, mode)
        rewrite(target, Atom(p))
        constraints.extend(conjuncts)

    while (target := _first([core, *constraints], lambda g: isinstance(g, CoopNext))) is not None:
        replacement, extra = _next_step(target, ctx)
        rewrite(target, replacement)
        constraints.extend(extra)

    availability = everywhere(build_A(ctx.act_sets, ctx.members))
    constraints.append(availability)
    formula = big_and([core, *constraints])
    return TranslationResult(
        formula=formula,
        core=core,
        constraints=tuple(constraints),
        dictionary=tuple(ctx.atom_log),
        act_sets=ctx.snapshot(),
        agents=sigma,
        mode=mode,
        trace=tuple(ctx.trace),
    )
