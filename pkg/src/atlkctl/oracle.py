"""Bounded-horizon evaluation of ATL with distributed knowledge and perfect
recall, and of CTL with distributed knowledge, over finite runs.

Formulas are evaluated at finite runs of an :class:`InterpretedSystem`. Runs
are kept in a :class:`RunTree` (one node per run, expanded level by level) so
that knowledge classes and strategy searches work on integer ids.

Until-objectives are examined only up to run length ``horizon``; where no
decision is possible by then the answer is ``Verdict.UNKNOWN``. Next-step
operators and knowledge never produce UNKNOWN by themselves.
"""

from __future__ import annotations

import enum
import itertools
from math import prod
from typing import Callable, Iterator, Mapping

from atlkctl.formula import (
    Atom,
    Coalition,
    CoopNext,
    CoopUntil,
    DKnows,
    DualCoopUntil,
    ExistsNext,
    ExistsUntil,
    Falsum,
    ForallUntil,
    Formula,
    Implies,
    is_subset_until,
)
from atlkctl.system import GlobalState, InterpretedSystem, LocalRun, Run, project, runs_up_to, successor

DEFAULT_BUDGET = 100_000


class Verdict(enum.Enum):
    TRUE = "True"
    FALSE = "False"
    UNKNOWN = "Unknown"

    @classmethod
    def of(cls, value: bool) -> "Verdict":
        return cls.TRUE if value else cls.FALSE

    def __invert__(self) -> "Verdict":
        if self is Verdict.UNKNOWN:
            return self
        return Verdict.FALSE if self is Verdict.TRUE else Verdict.TRUE

    def __and__(self, other: "Verdict") -> "Verdict":
        if self is Verdict.FALSE or other is Verdict.FALSE:
            return Verdict.FALSE
        if self is Verdict.TRUE and other is Verdict.TRUE:
            return Verdict.TRUE
        return Verdict.UNKNOWN

    def __or__(self, other: "Verdict") -> "Verdict":
        if self is Verdict.TRUE or other is Verdict.TRUE:
            return Verdict.TRUE
        if self is Verdict.FALSE and other is Verdict.FALSE:
            return Verdict.FALSE
        return Verdict.UNKNOWN

    @property
    def decided(self) -> bool:
        return self is not Verdict.UNKNOWN

    def __str__(self) -> str:
        return self.value


T, F, U = Verdict.TRUE, Verdict.FALSE, Verdict.UNKNOWN


class OracleError(ValueError):
    pass


class StrategyBudgetExceeded(OracleError):
    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"{count} strategies exceed the budget of {budget}")


class RunTree:
    """All finite runs of a system, numbered breadth first.

    The children of a node are contiguous ids, one per joint action in the
    order of ``system.joint_actions()``.
    """

    def __init__(self, system: InterpretedSystem):
        self.system = system
        self.joint = list(system.joint_actions())
        self.width = len(self.joint)
        self.state: list[GlobalState] = []
        self.action: list[int] = []
        self.parent: list[int] = []
        self.depth: list[int] = []
        self.first_child: list[int] = []
        for s in system.initial:
            self._add(s, -1, -1, 0)
        self.levels: list[range] = [range(0, len(self.state))]
        self._proj: dict[Coalition, list[int]] = {}
        self._keys: dict[Coalition, dict] = {}
        self._classes: dict[tuple[Coalition, int], dict[int, list[int]]] = {}
        self._offsets: dict[Coalition, dict[tuple[str, ...], list[int]]] = {}

    def _add(self, state, action, parent, depth) -> None:
        self.state.append(state)
        self.action.append(action)
        self.parent.append(parent)
        self.depth.append(depth)
        self.first_child.append(-1)

    def level(self, n: int) -> range:
        while len(self.levels) <= n:
            last = self.levels[-1]
            start = len(self.state)
            trans = self.system.transition
            for node in last:
                self.first_child[node] = len(self.state)
                s = self.state[node]
                d = self.depth[node] + 1
                for k, a in enumerate(self.joint):
                    self._add(trans[(s, a)], k, node, d)
            self.levels.append(range(start, len(self.state)))
        return self.levels[n]

    def children(self, node: int) -> range:
        fc = self.first_child[node]
        if fc < 0:
            self.level(self.depth[node] + 1)
            fc = self.first_child[node]
        return range(fc, fc + self.width)

    def proj(self, node: int, g: Coalition) -> int:
        """Integer id of the coalition's local run at ``node``."""
        arr = self._proj.get(g)
        if arr is None:
            arr = self._proj[g] = []
            self._keys[g] = {}
        if node >= len(arr):
            keys = self._keys[g]
            idx = self.system.indices(g)
            for n in range(len(arr), len(self.state)):
                s = self.state[n]
                local = tuple(s[i] for i in idx)
                p = self.parent[n]
                if p < 0:
                    key = (-1, (), local)
                else:
                    a = self.joint[self.action[n]]
                    key = (arr[p], tuple(a[i] for i in idx), local)
                arr.append(keys.setdefault(key, len(keys)))
        return arr[node]

    def class_members(self, node: int, g: Coalition) -> list[int]:
        d = self.depth[node]
        table = self._classes.get((g, d))
        if table is None:
            table = {}
            for n in self.level(d):
                table.setdefault(self.proj(n, g), []).append(n)
            self._classes[(g, d)] = table
        return table[self.proj(node, g)]

    def offsets(self, g: Coalition) -> dict[tuple[str, ...], list[int]]:
        """Child offsets grouped by the coalition's part of the joint action."""
        table = self._offsets.get(g)
        if table is None:
            idx = self.system.indices(g)
            table = {a: [] for a in self.system.coalition_actions(g)}
            for k, a in enumerate(self.joint):
                table[tuple(a[i] for i in idx)].append(k)
            self._offsets[g] = table
        return table

    def run(self, node: int) -> Run:
        states, actions = [], []
        while node >= 0:
            states.append(self.state[node])
            if self.parent[node] >= 0:
                actions.append(self.joint[self.action[node]])
            node = self.parent[node]
        return Run(tuple(reversed(states)), tuple(reversed(actions)))

    def node_of(self, r: Run) -> int:
        try:
            node = self.system.initial.index(r.states[0])
        except ValueError:
            raise OracleError(f"{r.states[0]} is not an initial state") from None
        for a, s in zip(r.actions, r.states[1:]):
            try:
                node = self.children(node)[self.joint.index(a)]
            except ValueError:
                raise OracleError(f"{a} is not a joint action") from None
            if self.state[node] != s:
                raise OracleError(f"not a run: {a} leads to {self.state[node]}, not {s}")
        return node


ExtraValuation = Mapping[str, Callable[[int], Verdict]]


class Evaluator:
    """Memoised evaluator over one run tree and one horizon.

    ``extra`` assigns (three-valued) run-dependent values to additional
    atoms, which is how fresh propositions are interpreted on the unravelled
    system.
    """

    def __init__(
        self,
        system: InterpretedSystem,
        horizon: int,
        *,
        extra: ExtraValuation | None = None,
        tree: RunTree | None = None,
        budget: int = DEFAULT_BUDGET,
        fixpoint: bool = True,
    ):
        if horizon < 0:
            raise OracleError("horizon must be nonnegative")
        self.system = system
        self.horizon = horizon
        self.tree = tree if tree is not None else RunTree(system)
        self.extra = dict(extra or {})
        self.budget = budget
        self.fixpoint = fixpoint
        self._memo: dict[Formula, dict[int, Verdict]] = {}

    # -- entry points ------------------------------------------------------

    def holds(self, node: int, f: Formula) -> Verdict:
        memo = self._memo.get(f)
        if memo is None:
            memo = self._memo[f] = {}
        v = memo.get(node)
        if v is None:
            v = self._compute(node, f, memo)
            memo[node] = v
        return v

    def holds_run(self, r: Run, f: Formula) -> Verdict:
        if len(r) > self.horizon:
            raise OracleError(f"horizon {self.horizon} is shorter than the run ({len(r)})")
        return self.holds(self.tree.node_of(r), f)

    def initial_verdicts(self, f: Formula) -> list[Verdict]:
        return [self.holds(n, f) for n in self.tree.level(0)]

    def sat_at_initial(self, f: Formula) -> Verdict:
        return aggregate(self.initial_verdicts(f))

    # -- clauses -----------------------------------------------------------

    def _compute(self, node: int, f: Formula, memo: dict[int, Verdict]) -> Verdict:
        match f:
            case Falsum():
                return F
            case Atom(p):
                if p in self.extra:
                    return self.extra[p](node)
                return T if self.system.holds_atom(self.tree.state[node], p) else F
            case Implies(left, right):
                a = self.holds(node, left)
                if a is F:
                    return T
                return ~a | self.holds(node, right)
            case DKnows(g, body):
                members = self.tree.class_members(node, g)
                v = T
                for m in members:
                    v = v & self.holds(m, body)
                    if v is F:
                        break
                for m in members:
                    memo[m] = v
                return v
            case CoopNext(g, body):
                return self._coop_next(node, g, body, memo)
            case ExistsNext(body):
                v = F
                for c in self.tree.children(node):
                    v = v | self.holds(c, body)
                    if v is T:
                        break
                return v
            case ExistsUntil(left, right):
                return self._path_until(node, f, left, right, existential=True)
            case ForallUntil(left, right):
                return self._path_until(node, f, left, right, existential=False)
            case CoopUntil():
                if self.fixpoint and is_subset_until(f):
                    return self._lfp(node, f, memo)
                return self._strategic(node, f, memo)
            case DualCoopUntil():
                return self._strategic(node, f, memo)
        raise OracleError(f"cannot evaluate {f!r}")

    def _coop_next(self, node, g, body, memo) -> Verdict:
        """Some vector of coalition actions works from every run of the class."""
        tree = self.tree
        members = tree.class_members(node, g)
        best = F
        for offs in tree.offsets(g).values():
            v = T
            for m in members:
                fc = tree.children(m).start
                for k in offs:
                    v = v & self.holds(fc + k, body)
                    if v is F:
                        break
                if v is F:
                    break
            best = best | v
            if best is T:
                break
        for m in members:
            memo[m] = best
        return best

    def _path_until(self, node, f, left, right, existential: bool) -> Verdict:
        r = self.holds(node, right)
        if r is T:
            return T
        l = self.holds(node, left)
        if self.tree.depth[node] >= self.horizon:
            return r | (l & U)
        if l is F:
            return r
        acc = F if existential else T
        for c in self.tree.children(node):
            v = self.holds(c, f)
            acc = (acc | v) if existential else (acc & v)
            if acc is (T if existential else F):
                break
        return r | (l & acc)

    def _lfp(self, node, f: CoopUntil, memo) -> Verdict:
        """Backward fixpoint of X = K psi | (K phi & <<G>>X X), cut at the horizon."""
        tree = self.tree
        members = tree.class_members(node, f.coalition)
        r = self.holds(node, f.right)
        if r is T:
            res = T
        else:
            l = self.holds(node, f.left)
            if tree.depth[node] >= self.horizon:
                res = r | (l & U)
            elif l is F:
                res = r
            else:
                best = F
                for offs in tree.offsets(f.coalition).values():
                    v = T
                    for m in members:
                        fc = tree.children(m).start
                        for k in offs:
                            v = v & self.holds(fc + k, f)
                            if v is F:
                                break
                        if v is F:
                            break
                    best = best | v
                    if best is T:
                        break
                res = r | (l & best)
        for m in members:
            memo[m] = res
        return res

    # -- strategy quantification --------------------------------------------

    def _objective(self, f: CoopUntil | DualCoopUntil):
        """Per-node parts ``(goal, stay)`` of ``goal | (stay & all-next)``.

        For ``<<G>>(a U b)`` these are ``(b, a)``. For ``[[G]](a U b)`` the
        search looks for a strategy under which every outcome refutes the
        until, i.e. ``(!b & !a) | (!b & all-next)``.
        """
        if isinstance(f, CoopUntil):
            return (lambda n: self.holds(n, f.right)), (lambda n: self.holds(n, f.left))
        return (
            lambda n: ~self.holds(n, f.right) & ~self.holds(n, f.left),
            lambda n: ~self.holds(n, f.right),
        )

    def _strategic(self, node, f, memo) -> Verdict:
        g = f.coalition
        roots = self.tree.class_members(node, g)
        goal, stay = self._objective(f)
        if self.tree.depth[node] >= self.horizon:
            w = T
            for n in roots:
                w = w & (goal(n) | (stay(n) & U))
        elif self._search(roots, g, goal, stay, strict=True):
            w = T
        elif self._search(roots, g, goal, stay, strict=False):
            w = U
        else:
            w = F
        res = w if isinstance(f, CoopUntil) else ~w
        for m in roots:
            memo[m] = res
        return res

    def _search(self, roots, g: Coalition, goal, stay, strict: bool) -> bool:
        """Is there a uniform strategy for ``g`` under which every outcome
        from ``roots`` makes the objective TRUE (strict) or not FALSE?"""
        tree = self.tree
        horizon = self.horizon
        agents = [(a, (a,)) for a in g]
        acts = {a: self.system.actions[a] for a in g}
        offsets = tree.offsets(g)
        status: dict[int, int] = {}
        OK, FAIL, MORE = 0, 1, 2

        def classify(n: int) -> int:
            st = status.get(n)
            if st is None:
                gv = goal(n)
                if strict:
                    if gv is T:
                        st = OK
                    elif stay(n) is not T or tree.depth[n] >= horizon:
                        st = FAIL
                    else:
                        st = MORE
                else:
                    if gv is not F:
                        st = OK
                    elif stay(n) is F:
                        st = FAIL
                    elif tree.depth[n] >= horizon:
                        st = OK
                    else:
                        st = MORE
                status[n] = st
            return st

        def solve(stack: list[int], assign: dict) -> bool:
            while stack:
                n = stack.pop()
                st = classify(n)
                if st == OK:
                    continue
                if st == FAIL:
                    return False
                keys = [(a, tree.proj(n, single)) for a, single in agents]
                for key in keys:
                    if key not in assign:
                        for act in acts[key[0]]:
                            assign[key] = act
                            if solve(stack + [n], assign):
                                return True
                        del assign[key]
                        return False
                fc = tree.children(n).start
                stack.extend(fc + k for k in offsets[tuple(assign[k] for k in keys)])
            return True

        return solve(list(reversed(roots)), {})

    # -- explicit enumeration (independent cross-check) ---------------------

    def strategy_space(self, node: int, g: Coalition):
        """Per-agent decision trees below the class of ``node``.

        Returns ``(roots, edges)`` where ``roots[a]`` lists the agent's local
        runs at the class and ``edges[a][(local, action)]`` the agent's local
        runs one step later (decision levels below the horizon only).
        """
        tree = self.tree
        roots_nodes = tree.class_members(node, g)
        roots = {a: sorted({tree.proj(n, (a,)) for n in roots_nodes}) for a in g}
        edges: dict[str, dict[tuple[int, str], set[int]]] = {a: {} for a in g}
        idx = {a: self.system.index(a) for a in g}
        frontier = list(roots_nodes)
        depth = tree.depth[node]
        while depth + 1 < self.horizon:
            nxt = []
            for n in frontier:
                for c in tree.children(n):
                    nxt.append(c)
                    act = tree.joint[tree.action[c]]
                    for a in g:
                        key = (tree.proj(n, (a,)), act[idx[a]])
                        edges[a].setdefault(key, set()).add(tree.proj(c, (a,)))
            frontier = nxt
            depth += 1
        return roots, edges

    def count_strategies(self, node: int, g: Coalition) -> int:
        if self.tree.depth[node] >= self.horizon:
            return 1
        roots, edges = self.strategy_space(node, g)
        total = 1
        for a in g:
            memo: dict[int, int] = {}
            acts = self.system.actions[a]

            def count(local: int) -> int:
                if local not in memo:
                    memo[local] = sum(prod(count(c) for c in edges[a].get((local, b), ())) for b in acts)
                return memo[local]

            total *= prod(count(l) for l in roots[a])
        return total

    def _agent_strategies(self, a: str, roots: list[int], edges) -> Iterator[dict[int, str]]:
        acts = self.system.actions[a]
        assign: dict[int, str] = {}

        def gen(frontier: list[int]):
            if not frontier:
                yield dict(assign)
                return
            head, rest = frontier[0], frontier[1:]
            for b in acts:
                assign[head] = b
                yield from gen(rest + sorted(edges.get((head, b), ())))
            del assign[head]

        yield from gen(list(roots))

    def until_by_enumeration(self, node: int, f: CoopUntil | DualCoopUntil) -> Verdict:
        """Evaluate a cooperative until by listing every relevant uniform strategy."""
        tree = self.tree
        g = f.coalition
        roots_nodes = tree.class_members(node, g)
        dual = isinstance(f, DualCoopUntil)

        def leaf(n):
            return self.holds(n, f.right) | (self.holds(n, f.left) & U)

        if tree.depth[node] >= self.horizon:
            vals = [leaf(n) for n in roots_nodes]
            return _fold(vals, any_=dual)
        count = self.count_strategies(node, g)
        if count > self.budget:
            raise StrategyBudgetExceeded(count, self.budget)
        roots, edges = self.strategy_space(node, g)
        per_agent = [list(self._agent_strategies(a, roots[a], edges[a])) for a in g]
        offsets = tree.offsets(g)
        result = T if dual else F
        for combo in itertools.product(*per_agent):
            memo: dict[int, Verdict] = {}

            def value(n: int) -> Verdict:
                v = memo.get(n)
                if v is not None:
                    return v
                if tree.depth[n] >= self.horizon:
                    v = leaf(n)
                else:
                    r = self.holds(n, f.right)
                    l = self.holds(n, f.left)
                    if r is T or l is F:
                        v = r
                    else:
                        vec = tuple(s[tree.proj(n, (a,))] for a, s in zip(g, combo))
                        fc = tree.children(n).start
                        v = _fold((value(fc + k) for k in offsets[vec]), any_=dual)
                        v = r | (l & v)
                memo[n] = v
                return v

            per_strategy = _fold((value(n) for n in roots_nodes), any_=dual)
            if dual:
                result = result & per_strategy
                if result is F:
                    break
            else:
                result = result | per_strategy
                if result is T:
                    break
        return result


def _fold(values, any_: bool) -> Verdict:
    acc = F if any_ else T
    for v in values:
        acc = (acc | v) if any_ else (acc & v)
        if acc is (T if any_ else F):
            break
    return acc


def aggregate(verdicts) -> Verdict:
    """TRUE if some verdict is TRUE, FALSE if all are FALSE, else UNKNOWN."""
    verdicts = list(verdicts)
    if any(v is T for v in verdicts):
        return T
    if all(v is F for v in verdicts):
        return F
    return U


# -- run-level API ---------------------------------------------------------------

def holds(system: InterpretedSystem, r: Run, f: Formula, horizon: int) -> Verdict:
    return Evaluator(system, horizon).holds_run(r, f)


def sat_at_initial(system: InterpretedSystem, f: Formula, horizon: int) -> Verdict:
    return Evaluator(system, horizon).sat_at_initial(f)


Strategy = dict[str, dict[LocalRun, str]]


def enumerate_strategies(
    system: InterpretedSystem, g: Coalition, horizon: int, budget: int = DEFAULT_BUDGET
) -> Iterator[Strategy]:
    """Every uniform strategy of ``g`` on the local runs shorter than ``horizon``."""
    domains = {}
    for a in g:
        domains[a] = sorted(
            {project(system, r, (a,)) for r in runs_up_to(system, horizon - 1)} if horizon > 0 else set(),
            key=lambda lr: (len(lr), repr(lr)),
        )
    count = prod(len(system.actions[a]) ** len(domains[a]) for a in g)
    if count > budget:
        raise StrategyBudgetExceeded(count, budget)
    per_agent = []
    for a in g:
        per_agent.append(
            [dict(zip(domains[a], choice)) for choice in itertools.product(system.actions[a], repeat=len(domains[a]))]
        )
    for combo in itertools.product(*per_agent):
        yield dict(zip(g, combo))


def outcomes(system: InterpretedSystem, runs, s: Strategy, horizon: int) -> set[Run]:
    """Length-``horizon`` extensions of ``runs`` in which the coalition follows ``s``."""
    runs = list(runs)
    if len({len(r) for r in runs}) > 1:
        raise OracleError("runs passed to outcomes must share a length")
    joint = list(system.joint_actions())
    idx = {a: system.index(a) for a in s}
    level = runs
    for _ in range(horizon - (len(runs[0]) if runs else 0)):
        nxt = []
        for r in level:
            want = {a: s[a][project(system, r, (a,))] for a in s}
            for act in joint:
                if all(act[idx[a]] == b for a, b in want.items()):
                    nxt.append(r.extend(act, successor(system, r.last, act)))
        level = nxt
    return set(level)


def lfp_until(system: InterpretedSystem, g: Coalition, phi: Formula, psi: Formula, horizon: int) -> dict[Run, Verdict]:
    """Fixpoint value of ``<<g>>(K_g phi U K_g psi)`` at every run of length <= horizon."""
    ev = Evaluator(system, horizon)
    kphi, kpsi = DKnows(g, phi), DKnows(g, psi)
    target = CoopUntil(g, kphi, kpsi)
    out = {}
    for d in range(horizon + 1):
        for n in ev.tree.level(d):
            if not (ev.holds(n, kphi).decided and ev.holds(n, kpsi).decided):
                raise OracleError(f"argument undecided at {ev.tree.run(n)}")
    for d in range(horizon + 1):
        for n in ev.tree.level(d):
            out[ev.tree.run(n)] = ev.holds(n, target)
    return out
