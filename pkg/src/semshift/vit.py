"""The interface term: a canonical set of ground conditions plus side slots.

Text format::

    vit {
      sem: [ l1:echt(l2), l2:schlecht(i1) ]
      scope: [ l4 < l1 ]           # optional
      sorts: { i2: human }         # optional
      extras: { tense: "pres" }    # optional, opaque strings
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

from ._lexer import TokenStream, tokenize
from .errors import UnknownLabelError, VitSyntaxError, VitValidationError
from .sorts import SortHierarchy
from .syntax import read_condition
from .terms import FRESH_RE, Condition, Term, Var, depth, is_ground, iter_constants


class SemSet:
    """Sorted, duplicate-free tuple of ground conditions."""

    __slots__ = ("conditions",)

    def __init__(self, conditions: Iterable[Condition] = ()):
        uniq = {c: None for c in conditions}
        self.conditions: tuple[Condition, ...] = tuple(sorted(uniq, key=lambda c: c.key))

    def __iter__(self) -> Iterator[Condition]:
        return iter(self.conditions)

    def __len__(self) -> int:
        return len(self.conditions)

    def __getitem__(self, i):
        return self.conditions[i]

    def __contains__(self, c) -> bool:
        return c in set(self.conditions)

    def __eq__(self, other) -> bool:
        if isinstance(other, SemSet):
            return self.conditions == other.conditions
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.conditions)

    def __repr__(self) -> str:
        return f"SemSet([{', '.join(str(c) for c in self.conditions)}])"

    def labels(self) -> set[str]:
        return {c.label.functor for c in self.conditions}

    def constants(self) -> set[str]:
        return {t.functor for c in self.conditions for t in iter_constants(c)}


class ScopeConstraint(NamedTuple):
    lower: str
    upper: str

    def __str__(self) -> str:
        return f"{self.lower} < {self.upper}"


@dataclass(frozen=True)
class Vit:
    sem: SemSet
    scope: tuple[ScopeConstraint, ...] = ()
    sorts: Mapping[str, str] = field(default_factory=dict)
    extras: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.sem, SemSet):
            object.__setattr__(self, "sem", SemSet(self.sem))
        object.__setattr__(self, "scope", tuple(sorted({ScopeConstraint(*s) for s in self.scope})))
        object.__setattr__(self, "sorts", dict(sorted(self.sorts.items())))
        object.__setattr__(self, "extras", dict(self.extras))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vit):
            return NotImplemented
        return (
            self.sem == other.sem
            and self.scope == other.scope
            and self.sorts == other.sorts
            and list(self.extras.items()) == list(other.extras.items())
        )

    __hash__ = None


# -- validation ---------------------------------------------------------------


def validate_vit(v: Vit, *, transfer_input: bool = False) -> None:
    """Check well-formedness; ``transfer_input`` adds the checks that only
    apply to the input of a transfer (non-empty, no fresh-namespace constants)."""
    if transfer_input and not len(v.sem):
        raise VitValidationError("sem slot is empty")
    for c in v.sem:
        if not is_ground(c):
            raise VitValidationError(f"variable in ground input: {c}")
        for a in c.body.args:
            if depth(a) > 0:
                raise VitValidationError(f"depth limit exceeded (arguments must be constants): {c}")
        for t in iter_constants(c) if transfer_input else ():
            if FRESH_RE.match(t.functor):
                raise VitValidationError(
                    f"constant {t.functor!r} collides with the reserved fresh-constant namespace: {c}"
                )
    consts = v.sem.constants()
    for s in v.scope:
        for lab in s:
            if lab not in consts:
                raise VitValidationError(f"dangling label {lab!r} in scope constraint {s}")
    if v.scope:
        _check_acyclic(v)
    args = {t.functor for c in v.sem for a in c.body.args for t in iter_constants(a)}
    for marker in v.sorts:
        if marker not in args:
            raise VitValidationError(f"dangling marker {marker!r} in sorts slot")


def validate_sorts(v: Vit, hierarchy: SortHierarchy) -> None:
    for marker, sort in v.sorts.items():
        if sort not in hierarchy:
            raise VitValidationError(f"sort {sort!r} assigned to {marker!r} is not in the hierarchy")


def _check_acyclic(v: Vit) -> None:
    graph: dict[str, set[str]] = {}
    for lo, hi in v.scope:
        if lo == hi:
            continue
        graph.setdefault(lo, set()).add(hi)
    state: dict[str, int] = {}

    def visit(n: str):
        state[n] = 1
        for m in graph.get(n, ()):
            if state.get(m) == 1:
                raise VitValidationError(f"cyclic scope constraints through {m!r}")
            if m not in state:
                visit(m)
        state[n] = 2

    for n in sorted(graph):
        if n not in state:
            visit(n)


# -- subordination --------------------------------------------------------------


def _embedding_edges(sem: SemSet) -> Iterator[tuple[str, str]]:
    # a condition labelled U with an argument W that is itself a condition label: W < U
    labels = sem.labels()
    for c in sem:
        upper = c.label.functor
        for a in c.body.args:
            if isinstance(a, Term) and not a.args and a.functor in labels:
                yield a.functor, upper


def subordinated(v: Vit, lower: str, upper: str) -> bool:
    """Reflexive-transitive closure of scope constraints plus label-argument embedding."""
    known = v.sem.constants()
    for lab in (lower, upper):
        if lab not in known:
            raise UnknownLabelError(f"unknown label {lab!r}")
    if lower == upper:
        return True
    graph: dict[str, set[str]] = {}
    for lo, hi in list(v.scope) + list(_embedding_edges(v.sem)):
        graph.setdefault(lo, set()).add(hi)
    seen = {lower}
    stack = [lower]
    while stack:
        n = stack.pop()
        for m in graph.get(n, ()):
            if m == upper:
                return True
            if m not in seen:
                seen.add(m)
                stack.append(m)
    return False


# -- text format ----------------------------------------------------------------


def parse_vit(text: str, source: str = "<vit>") -> Vit:
    """Parse and validate one ``vit { ... }`` block."""
    ts = TokenStream(tokenize(text, "#", VitSyntaxError, source), VitSyntaxError, source)
    v = _read_vit(ts)
    ts.expect_kind("eof", "end of input")
    validate_vit(v)
    return v


def _read_vit(ts: TokenStream) -> Vit:
    ts.expect("vit")
    ts.expect("{")
    slots: dict[str, object] = {}
    while not ts.at("}"):
        tok = ts.expect_kind("name", "a slot name")
        if tok.text in slots:
            ts.fail(f"duplicate slot {tok.text!r}", tok)
        ts.expect(":")
        if tok.text == "sem":
            slots["sem"] = _read_list(ts, lambda: read_condition(ts))
        elif tok.text == "scope":
            slots["scope"] = _read_list(ts, lambda: _read_scope(ts))
        elif tok.text == "sorts":
            slots["sorts"] = _read_map(ts, lambda: ts.expect_kind("name", "a sort name").text)
        elif tok.text == "extras":
            slots["extras"] = _read_map(ts, lambda: _read_string(ts))
        else:
            ts.fail(f"unknown slot {tok.text!r}", tok)
    ts.expect("}")
    if "sem" not in slots:
        ts.fail("missing sem slot")
    for c in slots["sem"]:
        if isinstance(c.label, Var) or not is_ground(c):
            raise VitValidationError(f"variable in ground input: {c}")
    return Vit(
        SemSet(slots["sem"]),
        tuple(slots.get("scope", ())),
        slots.get("sorts", {}),
        slots.get("extras", {}),
    )


def _read_list(ts: TokenStream, item):
    ts.expect("[")
    out = []
    if not ts.accept("]"):
        out.append(item())
        while ts.accept(","):
            if ts.at("]"):
                break
            out.append(item())
        ts.expect("]")
    return out


def _read_map(ts: TokenStream, value) -> dict[str, str]:
    ts.expect("{")
    out: dict[str, str] = {}

    def entry():
        tok = ts.expect_kind("name", "a key")
        ts.expect(":")
        if tok.text in out:
            ts.fail(f"duplicate key {tok.text!r}", tok)
        out[tok.text] = value()

    if not ts.accept("}"):
        entry()
        while ts.accept(","):
            if ts.at("}"):
                break
            entry()
        ts.expect("}")
    return out


def _read_scope(ts: TokenStream) -> ScopeConstraint:
    lo = ts.expect_kind("name", "a label").text
    ts.expect("<")
    hi = ts.expect_kind("name", "a label").text
    return ScopeConstraint(lo, hi)


def _read_string(ts: TokenStream) -> str:
    tok = ts.expect_kind("string", "a quoted string")
    return json.loads(tok.text)


def serialize_vit(v: Vit) -> str:
    lines = ["vit {"]
    if len(v.sem):
        lines.append("  sem: [")
        conds = [f"    {c}" for c in v.sem]
        lines.append(",\n".join(conds))
        lines.append("  ]")
    else:
        lines.append("  sem: []")
    if v.scope:
        lines.append(f"  scope: [{', '.join(str(s) for s in v.scope)}]")
    if v.sorts:
        lines.append("  sorts: {" + ", ".join(f"{k}: {s}" for k, s in v.sorts.items()) + "}")
    if v.extras:
        body = ", ".join(f"{k}: {json.dumps(s, ensure_ascii=False)}" for k, s in v.extras.items())
        lines.append("  extras: {" + body + "}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_vit_file(path: str | Path) -> Vit:
    path = Path(path)
    return parse_vit(path.read_text(encoding="utf-8"), str(path))
