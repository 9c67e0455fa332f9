"""Compile rule modules into an oriented, specificity-ordered, trie-indexed program.

Pipeline: expand classes, orient each rule for the requested direction,
sort each left-hand side canonically, rename variables canonically, drop
exact duplicates, rank by specificity and build the trie.

The trie is keyed by the ``(functor, arity)`` of the first left-hand-side
condition.  Below that, rules sharing a left-hand-side prefix share nodes;
each node keeps its branches ordered by the best specificity found below it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import CompileError
from .rules import (
    Diagnostic,
    Direction,
    EqBind,
    RuleCondition,
    RuleModule,
    SortTest,
    TransferRule,
    condition_terms,
    expand_classes,
    rename_condition,
)
from .sorts import SortHierarchy
from .terms import Arg, Condition, Term, Var, variables

log = logging.getLogger(__name__)

Signature = tuple[str, int]


@dataclass(frozen=True, order=False)
class SpecKey:
    lhs_len: int
    instantiation: int
    conds_len: int
    source_order: int

    def sort_key(self) -> tuple[int, int, int, int]:
        """Ascending order of this key is most-specific-first."""
        return (-self.lhs_len, -self.instantiation, -self.conds_len, self.source_order)

    def __str__(self) -> str:
        return f"{self.lhs_len}/{self.instantiation}/{self.conds_len}/{self.source_order}"


@dataclass(frozen=True)
class OrientedRule:
    origin: str
    direction: Direction
    lhs: tuple[Condition, ...]
    conds: tuple[RuleCondition, ...]
    rhs: tuple[Condition, ...]
    eqs: tuple[EqBind, ...]
    specificity: SpecKey
    # canonical name -> name in the rule text; empty before canonicalisation
    var_names: tuple[tuple[str, str], ...] = field(default=(), compare=False)

    @property
    def order_key(self) -> tuple[int, int, int, int]:
        return self.specificity.sort_key()

    def original_name(self, var: str) -> str:
        return dict(self.var_names).get(var, var)

    def __str__(self) -> str:
        def lst(xs):
            return "[" + ", ".join(str(x) for x in xs) + "]"

        conds = f", {lst(self.conds)}" if self.conds else ""
        eqs = f" {lst(self.eqs)}" if self.eqs else ""
        return f"{self.origin}: {lst(self.lhs)}{conds} => {lst(self.rhs)}{eqs}"


def _skeleton_key(c: Condition) -> tuple:
    return c.key


def _instantiation(t: Arg | Condition) -> int:
    if isinstance(t, Var):
        return 0
    if isinstance(t, Condition):
        return _instantiation(t.label) + _instantiation(t.body)
    return 1 + sum(_instantiation(a) for a in t.args)


def specificity_of(lhs: Sequence[Condition], conds: Sequence[RuleCondition], source_order: int) -> SpecKey:
    return SpecKey(len(lhs), sum(_instantiation(c) for c in lhs), len(conds), source_order)


def specificity_compare(a: OrientedRule, b: OrientedRule) -> int:
    """1 if ``a`` is more specific than ``b``, -1 if less, 0 if equal keys."""
    ka, kb = a.order_key, b.order_key
    if ka == kb:
        return 0
    return 1 if ka < kb else -1


def orient(rule: TransferRule, direction: Direction, source_order: int | None = None) -> OrientedRule | None:
    """Orient ``rule`` for ``direction``; ``None`` when its operator excludes it.

    Backward orientation consumes the target side.  Conditions stay with the
    side they were written on, so a backward rule carries no conditions
    (target-side conditions are not evaluated).
    """
    if direction is Direction.BIDIR:
        raise ValueError("orientation direction must be FWD or BWD")
    if not rule.op.permits(direction):
        return None
    if direction is Direction.FWD:
        lhs, conds, rhs = rule.sl_sem, rule.sl_conds, rule.tl_patterns
    else:
        lhs, conds, rhs = rule.tl_patterns, (), rule.sl_sem
    if not lhs:
        raise CompileError(f"{rule.id}: oriented left-hand side is empty for direction {direction.name}")
    lhs = tuple(sorted(lhs, key=_skeleton_key))
    order = rule.source_order if source_order is None else source_order
    return OrientedRule(rule.id, direction, lhs, tuple(conds), tuple(rhs), rule.tl_eqs, specificity_of(lhs, conds, order))


def canonicalize(rule: OrientedRule) -> OrientedRule:
    """Rename variables to V1, V2, ... in order of first occurrence."""
    seq: list = list(rule.lhs)
    for c in rule.conds:
        seq.extend(condition_terms(c))
    for e in rule.eqs:
        seq.extend((e.left, e.right))
    seq.extend(rule.rhs)
    names = variables(seq)
    back = dict(rule.var_names)
    mapping = {old: f"V{i}" for i, old in enumerate(names, 1)}

    def ren(t):
        if isinstance(t, Var):
            return Var(mapping[t.name])
        if isinstance(t, Condition):
            return Condition(ren(t.label), ren(t.body))
        if not t.args:
            return t
        return Term(t.functor, tuple(ren(a) for a in t.args))

    return OrientedRule(
        rule.origin,
        rule.direction,
        tuple(ren(c) for c in rule.lhs),
        tuple(rename_condition(c, ren) for c in rule.conds),
        tuple(ren(c) for c in rule.rhs),
        tuple(EqBind(ren(e.left), ren(e.right)) for e in rule.eqs),
        rule.specificity,
        tuple((new, back.get(old, old)) for old, new in mapping.items()),
    )


# -- trie ---------------------------------------------------------------------------


class TrieNode:
    __slots__ = ("pattern", "depth", "branches", "by_sig", "leaves", "best", "_children")

    def __init__(self, pattern: Condition, depth: int):
        self.pattern = pattern
        self.depth = depth
        self.branches: list[TrieNode] = []
        self.by_sig: dict[Signature, list[TrieNode]] = {}
        self.leaves: list[OrientedRule] = []
        self.best: tuple = ()
        self._children: dict[Condition, TrieNode] = {}

    def child(self, pattern: Condition) -> "TrieNode":
        node = self._children.get(pattern)
        if node is None:
            node = self._children[pattern] = TrieNode(pattern, self.depth + 1)
        return node

    def finalize(self) -> tuple:
        self.leaves.sort(key=lambda r: r.order_key)
        for n in self._children.values():
            n.finalize()
        self.branches = sorted(self._children.values(), key=lambda n: n.best)
        self.by_sig = {}
        for n in self.branches:
            self.by_sig.setdefault(n.pattern.signature, []).append(n)
        keys = [r.order_key for r in self.leaves[:1]] + [n.best for n in self.branches[:1]]
        self.best = min(keys)
        return self.best

    def walk(self) -> Iterator[OrientedRule]:
        """Leaves in trie order (own leaves first, then branches)."""
        yield from self.leaves
        for n in self.branches:
            yield from n.walk()


class RuleTrie:
    def __init__(self, rules: Iterable[OrientedRule] = ()):
        roots: dict[Condition, TrieNode] = {}
        for r in rules:
            node = roots.get(r.lhs[0])
            if node is None:
                node = roots[r.lhs[0]] = TrieNode(r.lhs[0], 0)
            for pat in r.lhs[1:]:
                node = node.child(pat)
            node.leaves.append(r)
        self.index: dict[Signature, list[TrieNode]] = {}
        for node in roots.values():
            node.finalize()
            self.index.setdefault(node.pattern.signature, []).append(node)
        for nodes in self.index.values():
            nodes.sort(key=lambda n: n.best)

    def lookup(self, sig: Signature) -> list[TrieNode]:
        return self.index.get(sig, [])

    @property
    def keys(self) -> list[Signature]:
        return sorted(self.index)

    def walk(self) -> Iterator[OrientedRule]:
        for sig in self.keys:
            for node in self.index[sig]:
                yield from node.walk()

    def nodes(self) -> Iterator[TrieNode]:
        stack = [n for sig in reversed(self.keys) for n in reversed(self.index[sig])]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.branches))

    def dump(self) -> str:
        lines: list[str] = []

        def lst(xs):
            return "[" + ", ".join(str(x) for x in xs) + "]"

        def visit(node: TrieNode, indent: int):
            pad = "  " * indent
            lines.append(f"{pad}{node.pattern}")
            for r in node.leaves:
                extra = ""
                if r.conds:
                    extra += f" if={lst(r.conds)}"
                if r.eqs:
                    extra += f" eq={lst(r.eqs)}"
                lines.append(f"{pad}  => {r.origin} spec={r.specificity}{extra} rhs={lst(r.rhs)}")
            for b in node.branches:
                visit(b, indent + 1)

        for sig in self.keys:
            lines.append(f"index {sig[0]}/{sig[1]}")
            for node in self.index[sig]:
                visit(node, 1)
        return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class CompiledRuleSet:
    direction: Direction
    trie: RuleTrie
    rules: tuple[OrientedRule, ...]
    classes: dict
    hierarchy: SortHierarchy | None
    diagnostics: list[Diagnostic]

    def dump_trie(self) -> str:
        return f"direction {self.direction.name.lower()}\n" + self.trie.dump()

    @property
    def index_keys(self) -> list[Signature]:
        return self.trie.keys


def parse_direction(d: Direction | str) -> Direction:
    if isinstance(d, Direction):
        return d
    table = {"fwd": Direction.FWD, "forward": Direction.FWD, "bwd": Direction.BWD, "backward": Direction.BWD}
    try:
        return table[d.lower()]
    except KeyError:
        raise ValueError(f"unknown direction {d!r} (use fwd or bwd)") from None


def compile_rules(
    modules: Sequence[RuleModule],
    direction: Direction | str,
    hierarchy: SortHierarchy | None = None,
) -> CompiledRuleSet:
    direction = parse_direction(direction)
    if direction is Direction.BIDIR:
        raise CompileError("compile direction must be fwd or bwd")
    diags: list[Diagnostic] = [d for m in modules for d in m.diagnostics]

    by_name = {m.name: m for m in modules}
    if len(by_name) != len(modules):
        raise CompileError("two rule modules share a name")
    seen_ids: dict[str, str] = {}
    for m in modules:
        for imp in m.imports:
            if imp not in by_name:
                raise CompileError(f"module {m.name!r} imports unknown module {imp!r}")
        for r in m.rules:
            if r.id in seen_ids:
                raise CompileError(f"duplicate rule id {r.id!r}")
            seen_ids[r.id] = m.name

    classes: dict = {}
    oriented: list[OrientedRule] = []
    order = 0
    for m in modules:
        imported = [c for imp in _import_closure(m, by_name) for c in by_name[imp].classes]
        expanded = expand_classes(m, imported)
        classes.update(expanded.class_table())
        for r in expanded.rules:
            order += 1
            o = orient(r, direction, order)
            if o is None:
                continue
            if direction is Direction.BWD and r.sl_conds:
                diags.append(Diagnostic("info", f"{r.id}: source-side conditions are not applied backwards"))
            oriented.append(canonicalize(o))

    kept: list[OrientedRule] = []
    firsts: dict[tuple, OrientedRule] = {}
    for o in oriented:
        ident = (o.lhs, o.conds, o.eqs, o.rhs)
        prev = firsts.get(ident)
        if prev is not None:
            d = Diagnostic("warning", f"rule {o.origin} duplicates {prev.origin} and is dropped (uniqueness reduction)")
            log.warning("%s", d)
            diags.append(d)
            continue
        firsts[ident] = o
        kept.append(o)

    for o in kept if hierarchy is not None else ():
        for c in o.conds:
            if isinstance(c, SortTest) and c.sort not in hierarchy:
                raise CompileError(f"{o.origin}: unknown sort {c.sort!r} in condition {c}")

    kept.sort(key=lambda r: r.order_key)
    return CompiledRuleSet(direction, RuleTrie(kept), tuple(kept), classes, hierarchy, diags)


def _import_closure(m: RuleModule, by_name: dict[str, RuleModule]) -> list[str]:
    out: list[str] = []
    stack = list(m.imports)
    while stack:
        name = stack.pop(0)
        if name in out or name == m.name:
            continue
        out.append(name)
        stack.extend(by_name[name].imports)
    return out


__all__ = [
    "CompiledRuleSet",
    "OrientedRule",
    "RuleTrie",
    "SpecKey",
    "TrieNode",
    "canonicalize",
    "compile_rules",
    "orient",
    "specificity_compare",
]
