"""The transfer-rule language.

A rule file looks like::

    module de_en.
    import de_sem.
    type(de, date_verbs, [absprechen, anbieten, festlegen, gefallen]).

    [L:echt(I)] <-> [L:real(I)].
    not_good :: [L:schlecht(E)], [L1:passen(E)] <-> [L:neg(A), A:good(E)].

A rule is ``SLSem, SLConds DIR TLSem, TLConds.`` where the condition lists
are optional and ``DIR`` is one of ``<->``, ``->``, ``<-``.  The optional
``name ::`` prefix gives the rule a stable id; unnamed rules are numbered
``r1, r2, ...`` by position.  ``%`` starts a comment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Union

from ._lexer import Token, TokenStream, describe, tokenize
from .errors import RuleError, RuleSyntaxError
from .syntax import read_args, read_condition_after_label, read_label
from .terms import Arg, Condition, Term, Var, iter_vars, variables

log = logging.getLogger(__name__)


class Direction(Enum):
    BIDIR = "<->"
    FWD = "->"
    BWD = "<-"

    def permits(self, direction: "Direction") -> bool:
        return self is Direction.BIDIR or self is direction


@dataclass(frozen=True)
class Diagnostic:
    level: str  # info | warning | error
    message: str
    source: str = ""
    line: int = 0

    def __str__(self) -> str:
        where = f"{self.source}:{self.line}: " if self.source else ""
        return f"{where}{self.level}: {self.message}"


# -- rule conditions ------------------------------------------------------------


@dataclass(frozen=True)
class ContextMatch:
    """Must match some input condition; nothing is consumed.

    After class expansion ``members`` lists the predicate names the pattern's
    functor stands for; the test succeeds if any member matches.
    """

    pattern: Condition
    members: tuple[str, ...] = ()

    def alternatives(self) -> tuple[Condition, ...]:
        if not self.members:
            return (self.pattern,)
        p = self.pattern
        return tuple(Condition(p.label, Term(m, p.body.args)) for m in self.members)

    def __str__(self) -> str:
        if self.members:
            return f"{self.pattern}{{{'|'.join(self.members)}}}"
        return str(self.pattern)


@dataclass(frozen=True)
class SortTest:
    marker: Arg
    sort: str
    negated: bool = False

    def __str__(self) -> str:
        return f"sort({self.marker})=<{'~' if self.negated else ''}{self.sort}"


@dataclass(frozen=True)
class SubordTest:
    lower: Arg
    upper: Arg

    def __str__(self) -> str:
        return f"{self.lower}<{self.upper}"


@dataclass(frozen=True)
class EqBind:
    left: Var
    right: Var

    def __str__(self) -> str:
        return f"eq({self.left},{self.right})"


@dataclass(frozen=True)
class HookCall:
    name: str
    args: tuple[Arg, ...]

    def __str__(self) -> str:
        return f"{self.name}({','.join(str(a) for a in self.args)})"


RuleCondition = Union[ContextMatch, SortTest, SubordTest, EqBind, HookCall]


def condition_terms(c: RuleCondition) -> tuple:
    """The terms of a rule condition, for variable collection."""
    if isinstance(c, ContextMatch):
        return (c.pattern,)
    if isinstance(c, SortTest):
        return (c.marker,)
    if isinstance(c, SubordTest):
        return (c.lower, c.upper)
    if isinstance(c, EqBind):
        return (c.left, c.right)
    return c.args


def rename_condition(c: RuleCondition, ren) -> RuleCondition:
    """Apply ``ren`` (a function on terms/conditions) to every term of ``c``."""
    if isinstance(c, ContextMatch):
        return replace(c, pattern=ren(c.pattern))
    if isinstance(c, SortTest):
        return replace(c, marker=ren(c.marker))
    if isinstance(c, SubordTest):
        return SubordTest(ren(c.lower), ren(c.upper))
    if isinstance(c, EqBind):
        return EqBind(ren(c.left), ren(c.right))
    return HookCall(c.name, tuple(ren(a) for a in c.args))


# -- rules and modules -------------------------------------------------------------


@dataclass(frozen=True)
class TransferRule:
    id: str
    sl_sem: tuple[Condition, ...]
    sl_conds: tuple[RuleCondition, ...]
    op: Direction
    tl_sem: tuple[Union[Condition, EqBind], ...]
    tl_conds: tuple[RuleCondition, ...]
    source_order: int
    line: int = 0

    @property
    def tl_patterns(self) -> tuple[Condition, ...]:
        return tuple(c for c in self.tl_sem if isinstance(c, Condition))

    @property
    def tl_eqs(self) -> tuple[EqBind, ...]:
        return tuple(c for c in self.tl_sem if isinstance(c, EqBind))

    @property
    def fresh(self) -> tuple[str, ...]:
        """Target-side variables with no source-side occurrence."""
        bound = set(variables(self.sl_sem))
        for c in self.sl_conds:
            bound.update(variables(condition_terms(c)))
        tl: list = []
        for c in self.tl_sem:
            tl.extend(condition_terms(c) if isinstance(c, EqBind) else (c,))
        return tuple(v for v in variables(tl) if v not in bound)

    def __str__(self) -> str:
        def lst(xs):
            return "[" + ", ".join(str(x) for x in xs) + "]"

        left = lst(self.sl_sem) + (", " + lst(self.sl_conds) if self.sl_conds else "")
        right = lst(self.tl_sem) + (", " + lst(self.tl_conds) if self.tl_conds else "")
        return f"{left} {self.op.value} {right}."


@dataclass(frozen=True)
class ClassDef:
    language: str
    name: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class RuleModule:
    name: str
    imports: tuple[str, ...] = ()
    rules: tuple[TransferRule, ...] = ()
    classes: tuple[ClassDef, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)
    source: str = field(default="<rules>", compare=False)

    def class_table(self) -> dict[str, ClassDef]:
        return {c.name: c for c in self.classes}


# -- parser ---------------------------------------------------------------------------

_KEYWORDS = ("module", "import", "type")


class _RuleParser:
    def __init__(self, text: str, source: str, default_module: str):
        self.source = source
        self.ts = TokenStream(tokenize(text, "%", RuleSyntaxError, source), RuleSyntaxError, source)
        self.module = default_module
        self.imports: list[str] = []
        self.rules: list[TransferRule] = []
        self.classes: list[ClassDef] = []
        self.diags: list[Diagnostic] = []
        self.ids: set[str] = set()

    def error(self, message: str, tok: Token):
        raise RuleError(message, tok.line, tok.col, self.source)

    def note(self, level: str, message: str, tok: Token):
        d = Diagnostic(level, message, self.source, tok.line)
        self.diags.append(d)
        getattr(log, "warning" if level == "warning" else "info")("%s", d)

    def parse(self) -> RuleModule:
        ts = self.ts
        if ts.at("module") and ts.peek(1).kind == "name":
            ts.next()
            self.module = ts.next().text
            ts.expect(".")
        while ts.peek().kind != "eof":
            if ts.at("import") and ts.peek(1).kind == "name":
                ts.next()
                self.imports.append(ts.next().text)
                ts.expect(".")
            elif ts.at("type") and ts.at("(", 1):
                self.classdef()
            elif ts.at("module") and ts.peek(1).kind == "name":
                ts.fail("module header must come first")
            else:
                self.rule()
        return RuleModule(
            self.module,
            tuple(self.imports),
            tuple(self.rules),
            tuple(self.classes),
            tuple(self.diags),
            self.source,
        )

    def classdef(self):
        ts = self.ts
        start = ts.next()
        ts.expect("(")
        lang = ts.expect_kind("name", "a language name").text
        ts.expect(",")
        name = ts.expect_kind("name", "a class name").text
        ts.expect(",")
        ts.expect("[")
        members: list[str] = []
        while True:
            tok = ts.expect_kind("name", "a class member")
            if tok.text in members:
                self.error(f"duplicate class member {tok.text!r} in class {name!r}", tok)
            members.append(tok.text)
            if not ts.accept(","):
                break
        ts.expect("]")
        ts.expect(")")
        ts.expect(".")
        if any(c.name == name for c in self.classes):
            self.error(f"class {name!r} defined twice", start)
        self.classes.append(ClassDef(lang, name, tuple(members)))

    def rule(self):
        ts = self.ts
        start = ts.peek()
        name = None
        if start.kind == "name" and ts.at("::", 1):
            name = ts.next().text
            ts.next()
        sl_tok = ts.peek()
        sl = self.condlist()
        sl_conds: list = []
        if ts.accept(","):
            sl_conds = self.condlist()
        op_tok = ts.peek()
        op = None
        for d in Direction:
            if ts.accept(d.value):
                op = d
                break
        if op is None:
            ts.fail(f"expected a direction operator (<->, -> or <-), found {describe(op_tok)}", op_tok)
        tl = self.condlist()
        tl_conds: list = []
        if ts.accept(","):
            tl_conds = self.condlist()
        ts.expect(".")

        order = len(self.rules) + 1
        rid = f"{self.module}:{name or f'r{order}'}"
        if rid in self.ids:
            self.error(f"duplicate rule id {rid!r}", start)
        self.ids.add(rid)

        if not sl:
            self.error("empty SLSem: a rule must consume at least one source condition", sl_tok)
        for c in sl:
            if not isinstance(c, ContextMatch):
                self.error(f"only labelled conditions may appear in SLSem, found {c}", sl_tok)
        sl_sem = tuple(c.pattern for c in sl)
        if len(set(sl_sem)) != len(sl_sem):
            self.error("SLSem contains the same pattern twice", sl_tok)
        tl_sem: list = []
        for c in tl:
            if isinstance(c, ContextMatch):
                tl_sem.append(c.pattern)
            elif isinstance(c, EqBind):
                tl_sem.append(c)
            else:
                self.error(f"only labelled conditions and eq/2 may appear in TLSem, found {c}", op_tok)
        if tl_conds:
            self.note("warning", f"{rid}: TL conditions are parsed but not evaluated", op_tok)

        bound = set(variables(sl_sem))
        for c in sl_conds:
            if isinstance(c, (SortTest, SubordTest)):
                for v in variables(condition_terms(c)):
                    if v not in bound:
                        self.error(f"variable {v} in condition {c} is not bound by SLSem or an earlier condition", sl_tok)
            else:
                bound.update(variables(condition_terms(c)))

        r = TransferRule(rid, sl_sem, tuple(sl_conds), op, tuple(tl_sem), tuple(tl_conds), order, start.line)
        if r.fresh:
            self.note("info", f"{rid}: target-only variables get fresh constants: {', '.join(r.fresh)}", op_tok)
        self.rules.append(r)

    def condlist(self) -> list:
        ts = self.ts
        ts.expect("[")
        out: list = []
        if ts.accept("]"):
            return out
        out.append(self.cond())
        while ts.accept(","):
            out.append(self.cond())
        ts.expect("]")
        return out

    def cond(self) -> RuleCondition:
        ts = self.ts
        tok = ts.peek()
        if tok.kind == "name" and tok.text == "sort" and ts.at("(", 1):
            ts.next()
            ts.expect("(")
            marker = Var(ts.expect_kind("var", "a variable").text)
            ts.expect(")")
            ts.expect("=<")
            neg = ts.accept("~") is not None
            return SortTest(marker, ts.expect_kind("name", "a sort name").text, neg)
        if tok.kind == "name" and tok.text == "eq" and ts.at("(", 1):
            ts.next()
            ts.expect("(")
            a = Var(ts.expect_kind("var", "a variable").text)
            ts.expect(",")
            b = Var(ts.expect_kind("var", "a variable").text)
            ts.expect(")")
            return EqBind(a, b)
        if tok.kind == "name" and ts.at("(", 1):
            ts.next()
            return HookCall(tok.text, read_args(ts))
        if tok.kind in ("name", "var"):
            label = read_label(ts)
            if ts.accept("<"):
                return SubordTest(label, read_label(ts))
            return ContextMatch(read_condition_after_label(ts, label))
        ts.fail(f"expected a condition, found {describe(tok)}", tok)


def parse_rule_file(text: str, source: str = "<rules>", module: str = "main") -> RuleModule:
    """Parse a rule file; ``module`` names it when there is no header."""
    return _RuleParser(text, source, module).parse()


def load_rule_file(path: str | Path) -> RuleModule:
    path = Path(path)
    return parse_rule_file(path.read_text(encoding="utf-8"), str(path), module=_module_name(path))


def _module_name(path: Path) -> str:
    stem = "".join(ch if ch.isalnum() or ch == "_" else "_" for ch in path.stem)
    if not stem or not stem[0].isalpha() or not stem[0].islower():
        stem = "m" + stem
    return stem


# -- classes ----------------------------------------------------------------------------


def expand_classes(module: RuleModule, imported: Iterable[ClassDef] = ()) -> RuleModule:
    """Replace class names in context conditions by member disjunctions.

    Class names may only appear as the functor of a context condition; using
    one in SLSem or TLSem is an error.  Already expanded conditions are left
    alone, so the operation is idempotent.
    """
    table = {c.name: c for c in imported}
    table.update(module.class_table())
    if not table:
        return module

    def check_sem(rule: TransferRule, conds, side: str):
        for c in conds:
            if isinstance(c, Condition) and c.body.functor in table:
                raise RuleError(
                    f"{rule.id}: class {c.body.functor!r} used in {side}; classes are only allowed in conditions",
                    rule.line,
                    0,
                    module.source,
                )

    def expand(c):
        if isinstance(c, ContextMatch) and not c.members and c.pattern.body.functor in table:
            return ContextMatch(c.pattern, table[c.pattern.body.functor].members)
        return c

    rules = []
    for r in module.rules:
        check_sem(r, r.sl_sem, "SLSem")
        check_sem(r, r.tl_sem, "TLSem")
        rules.append(replace(r, sl_conds=tuple(expand(c) for c in r.sl_conds), tl_conds=tuple(expand(c) for c in r.tl_conds)))
    return replace(module, rules=tuple(rules))


def rule_variables(rule: TransferRule) -> set[str]:
    out = set(variables(rule.sl_sem))
    for c in rule.sl_conds + rule.tl_conds:
        out.update(variables(condition_terms(c)))
    for c in rule.tl_sem:
        out.update(v.name for t in (condition_terms(c) if isinstance(c, EqBind) else (c,)) for v in iter_vars(t))
    return out
