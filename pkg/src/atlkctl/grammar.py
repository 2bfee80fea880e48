"""Concrete ASCII syntax: a recursive-descent parser and a minimal-parenthesis
printer that inverts it.

    atoms            [a-z_][A-Za-z0-9_]*   (a leading underscore marks generated names)
    constants        true false
    boolean          ! & | -> <->          (binding: ! > & > | > -> > <->)
    knowledge        K{1,2} f   P{} f
    cooperation      <<1,2>> X f | F f | G f | (f U g) | (f W g)
    dual             [[1,2]] X f | F f | G f | (f U g) | (f W g)
    path quantified  E X f, A X f, E (f U g), A (f U g), E F f, A G f, ...
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from atlkctl.formula import (
    ENV,
    FALSE,
    TRUE,
    Atom,
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
    coalition,
    conj,
    coop_always,
    coop_eventually,
    coop_weak_until,
    disj,
    dual_always,
    dual_eventually,
    dual_next,
    dual_weak_until,
    exists_always,
    exists_eventually,
    exists_weak_until,
    forall_always,
    forall_eventually,
    forall_next,
    forall_weak_until,
    iff,
    neg,
    poss,
)

ATOM_RE = re.compile(r"[a-z_][A-Za-z0-9_]*\Z")

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<op><->|<<|>>|\[\[|\]\]|->|[!&|{}(),])
  | (?P<word>[A-Za-z0-9_]+)
    """,
    re.VERBOSE,
)

KEYWORDS = {"K", "P", "E", "A", "X", "F", "G", "U", "W", "true", "false"}


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        detail = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{column}: {message}{detail}")


@dataclass(frozen=True)
class _Tok:
    kind: str  # "op", "word", "eof"
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            if "\n" in chunk:
                line += chunk.count("\n")
                line_start = pos + chunk.rindex("\n") + 1
        else:
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, message: str, expected: tuple[str, ...] = ()):
        t = self.tok
        raise FormulaSyntaxError(message, t.line, t.column, expected)

    def at(self, text: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text == text

    def take(self, text: str) -> _Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.fail(f"unexpected {found!r}", (text,))
        t = self.tok
        self.i += 1
        return t

    def parse(self) -> Formula:
        f = self.iff()
        if self.tok.kind != "eof":
            self.fail(f"unexpected {self.tok.text!r}", ("&", "|", "->", "<->", "end of input"))
        return f

    def iff(self) -> Formula:
        f = self.implies()
        while self.at("<->"):
            self.i += 1
            f = iff(f, self.implies())
        return f

    def implies(self) -> Formula:
        f = self.disjunction()
        if self.at("->"):
            self.i += 1
            return Implies(f, self.implies())
        return f

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.at("|"):
            self.i += 1
            f = disj(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.at("&"):
            self.i += 1
            f = conj(f, self.unary())
        return f

    def agents(self, close: str) -> tuple[str, ...]:
        names = []
        if not self.at(close):
            while True:
                t = self.tok
                if t.kind != "word":
                    self.fail("expected an agent id", ("agent id", close))
                if t.text == ENV:
                    self.fail("the environment 'e' cannot be a coalition member")
                names.append(t.text)
                self.i += 1
                if not self.at(","):
                    break
                self.i += 1
        self.take(close)
        return coalition(names)

    def unary(self) -> Formula:
        t = self.tok
        if t.kind == "op":
            if t.text == "!":
                self.i += 1
                return neg(self.unary())
            if t.text == "<<":
                self.i += 1
                return self.temporal(self.agents(">>"), dual=False)
            if t.text == "[[":
                self.i += 1
                return self.temporal(self.agents("]]"), dual=True)
            if t.text == "(":
                self.i += 1
                f = self.iff()
                if self.at("U") or self.at("W"):
                    self.fail("until/weak-until needs a modality prefix such as <<G>>, [[G]], E or A")
                self.take(")")
                return f
        elif t.kind == "word":
            if t.text in ("K", "P") and self.toks[self.i + 1].text == "{":
                self.i += 2
                g = self.agents("}")
                body = self.unary()
                return DKnows(g, body) if t.text == "K" else poss(g, body)
            if t.text in ("E", "A"):
                self.i += 1
                return self.path(t.text == "E")
            if t.text == "true":
                self.i += 1
                return TRUE
            if t.text == "false":
                self.i += 1
                return FALSE
            if t.text not in KEYWORDS and ATOM_RE.match(t.text):
                self.i += 1
                return Atom(t.text)
            if t.text in ("Y", "S"):
                self.fail("past temporal operators are not supported")
        self.fail(
            f"unexpected {t.text or 'end of input'!r}",
            ("atom", "true", "false", "!", "(", "K{", "P{", "<<", "[[", "E", "A"),
        )

    def binary_body(self) -> tuple[Formula, str, Formula]:
        self.take("(")
        left = self.iff()
        if not (self.at("U") or self.at("W")):
            self.fail(f"unexpected {self.tok.text or 'end of input'!r}", ("U", "W"))
        op = self.tok.text
        self.i += 1
        right = self.iff()
        self.take(")")
        return left, op, right

    def temporal(self, g: tuple[str, ...], dual: bool) -> Formula:
        t = self.tok
        if t.text == "X":
            self.i += 1
            body = self.unary()
            return dual_next(g, body) if dual else CoopNext(g, body)
        if t.text == "F":
            self.i += 1
            body = self.unary()
            return dual_eventually(g, body) if dual else coop_eventually(g, body)
        if t.text == "G":
            self.i += 1
            body = self.unary()
            return dual_always(g, body) if dual else coop_always(g, body)
        if t.text == "(":
            left, op, right = self.binary_body()
            if op == "U":
                return DualCoopUntil(g, left, right) if dual else CoopUntil(g, left, right)
            return dual_weak_until(g, left, right) if dual else coop_weak_until(g, left, right)
        self.fail(f"unexpected {t.text or 'end of input'!r}", ("X", "F", "G", "("))

    def path(self, exists: bool) -> Formula:
        t = self.tok
        if t.text == "X":
            self.i += 1
            body = self.unary()
            return ExistsNext(body) if exists else forall_next(body)
        if t.text == "F":
            self.i += 1
            body = self.unary()
            return exists_eventually(body) if exists else forall_eventually(body)
        if t.text == "G":
            self.i += 1
            body = self.unary()
            return exists_always(body) if exists else forall_always(body)
        if t.text == "(":
            left, op, right = self.binary_body()
            if op == "U":
                return ExistsUntil(left, right) if exists else ForallUntil(left, right)
            return exists_weak_until(left, right) if exists else forall_weak_until(left, right)
        self.fail(f"unexpected {t.text or 'end of input'!r}", ("X", "F", "G", "("))


def parse(text: str) -> Formula:
    return _Parser(text).parse()


# -- printing ------------------------------------------------------------------

_IFF, _IMP, _OR, _AND, _UNARY = 1, 2, 3, 4, 5


def _not_body(f: Formula) -> Formula | None:
    if isinstance(f, Implies) and f.right == FALSE:
        return f.left
    return None


def _and_parts(f: Formula):
    inner = _not_body(f)
    if isinstance(inner, Implies):
        b = _not_body(inner.right)
        if b is not None:
            return inner.left, b
    return None


def _weak_parts(left: Formula, right: Formula):
    """Invert ``(!b, !b & !a)`` back to ``(a, b)``."""
    b = _not_body(left)
    parts = _and_parts(right)
    if b is None or parts is None or parts[0] != left:
        return None
    a = _not_body(parts[1])
    return None if a is None else (a, b)


def _coal(g: tuple[str, ...]) -> str:
    return ",".join(g)


def _unary(prefix: str, body: Formula) -> tuple[str, int]:
    return f"{prefix} {_r(body, _UNARY)}", _UNARY


def _pair(prefix: str, a: Formula, op: str, b: Formula) -> tuple[str, int]:
    return f"{prefix} ({_r(a, 0)} {op} {_r(b, 0)})", _UNARY


def _negated(inner: Formula) -> tuple[str, int]:
    """Shapes whose outermost node is a negation."""
    match inner:
        case DKnows(g, body) if _not_body(body) is not None:
            return _unary(f"P{{{_coal(g)}}}", _not_body(body))
        case CoopNext(g, body) if _not_body(body) is not None:
            return _unary(f"[[{_coal(g)}]] X", _not_body(body))
        case ExistsNext(body) if _not_body(body) is not None:
            return _unary("A X", _not_body(body))
        case DualCoopUntil(g, l, r):
            return _negated_until(f"<<{_coal(g)}>>", l, r) or _negated_plain(inner)
        case CoopUntil(g, l, r):
            return _negated_until(f"[[{_coal(g)}]]", l, r) or _negated_plain(inner)
        case ForallUntil(l, r):
            return _negated_until("E", l, r) or _negated_plain(inner)
        case ExistsUntil(l, r):
            return _negated_until("A", l, r) or _negated_plain(inner)
    return _negated_plain(inner)


def _negated_plain(inner: Formula) -> tuple[str, int]:
    return f"!{_r(inner, _UNARY)}", _UNARY


def _negated_until(prefix: str, l: Formula, r: Formula):
    """``!Q(true U !f)`` prints as ``Q' G f``; the weak-until shape as ``Q' (a W b)``."""
    if l == TRUE and _not_body(r) is not None:
        return _unary(f"{prefix} G", _not_body(r))
    parts = _weak_parts(l, r)
    if parts is not None:
        return _pair(prefix, parts[0], "W", parts[1])
    return None


def _render(f: Formula) -> tuple[str, int]:
    match f:
        case Falsum():
            return "false", _UNARY
        case Atom(name):
            return name, _UNARY
        case DKnows(g, body):
            return _unary(f"K{{{_coal(g)}}}", body)
        case CoopNext(g, body):
            return _unary(f"<<{_coal(g)}>> X", body)
        case CoopUntil(g, l, r):
            if l == TRUE:
                return _unary(f"<<{_coal(g)}>> F", r)
            return _pair(f"<<{_coal(g)}>>", l, "U", r)
        case DualCoopUntil(g, l, r):
            if l == TRUE:
                return _unary(f"[[{_coal(g)}]] F", r)
            return _pair(f"[[{_coal(g)}]]", l, "U", r)
        case ExistsNext(body):
            return _unary("E X", body)
        case ExistsUntil(l, r):
            if l == TRUE:
                return _unary("E F", r)
            return _pair("E", l, "U", r)
        case ForallUntil(l, r):
            if l == TRUE:
                return _unary("A F", r)
            return _pair("A", l, "U", r)
        case Implies(l, r):
            if f == TRUE:
                return "true", _UNARY
            parts = _and_parts(f)
            if parts is not None:
                a, b = parts
                if isinstance(a, Implies) and isinstance(b, Implies) and a.left == b.right and a.right == b.left:
                    return f"{_r(a.left, _IFF)} <-> {_r(a.right, _IFF + 1)}", _IFF
                return f"{_r(a, _AND)} & {_r(b, _AND + 1)}", _AND
            inner = _not_body(f)
            if inner is not None:
                return _negated(inner)
            a = _not_body(l)
            if a is not None and a != FALSE:
                return f"{_r(a, _OR)} | {_r(r, _OR + 1)}", _OR
            return f"{_r(l, _IMP + 1)} -> {_r(r, _IMP)}", _IMP
    raise TypeError(f"not a formula: {f!r}")


def _r(f: Formula, need: int) -> str:
    text, prec = _render(f)
    return f"({text})" if prec < need else text


def render(f: Formula) -> str:
    return _r(f, 0)
