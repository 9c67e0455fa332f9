"""A small sort hierarchy standing in for an external domain model.

File format: one ``child isa parent.`` statement per entry, ``%`` comments.
Parents need no separate declaration.  Sorts without a declared parent hang
directly below the root ``top``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ._lexer import TokenStream, tokenize
from .errors import HierarchyError, HierarchySyntaxError, UnknownSortError

TOP = "top"


@dataclass(frozen=True)
class SortHierarchy:
    sorts: frozenset[str]
    isa: frozenset[tuple[str, str]]
    _ancestors: dict = field(repr=False, compare=False, hash=False, default_factory=dict)

    def __post_init__(self):
        parents: dict[str, set[str]] = {s: set() for s in self.sorts}
        for child, parent in self.isa:
            parents[child].add(parent)
        # memoised reflexive-transitive closure, rejecting cycles on the way
        closure: dict[str, frozenset[str]] = {}
        visiting: set[str] = set()

        def up(s: str) -> frozenset[str]:
            if s in closure:
                return closure[s]
            if s in visiting:
                raise HierarchyError(f"cycle in sort hierarchy through {s!r}")
            visiting.add(s)
            acc = {s}
            for p in parents[s]:
                acc |= up(p)
            visiting.discard(s)
            closure[s] = frozenset(acc)
            return closure[s]

        for s in sorted(self.sorts):
            up(s)
        self._ancestors.update(closure)

    def __contains__(self, sort: str) -> bool:
        return sort in self.sorts

    def subsumes(self, general: str, specific: str) -> bool:
        """True iff ``general`` is reachable from ``specific`` via isa edges (reflexively)."""
        for s in (general, specific):
            if s not in self.sorts:
                raise UnknownSortError(f"unknown sort {s!r}")
        return general in self._ancestors[specific]

    def parents(self, sort: str) -> list[str]:
        return sorted(p for c, p in self.isa if c == sort)

    def serialize(self) -> str:
        return "".join(f"{c} isa {p}.\n" for c, p in sorted(self.isa))


def build_hierarchy(edges) -> SortHierarchy:
    """Build a hierarchy from (child, parent) pairs, attaching orphans to ``top``."""
    edges = set(edges)
    sorts = {TOP}
    for child, parent in edges:
        if child == TOP:
            raise HierarchyError("the root sort 'top' cannot have a parent")
        sorts.update((child, parent))
    has_parent = {c for c, _ in edges}
    for s in sorts:
        if s != TOP and s not in has_parent:
            edges.add((s, TOP))
    h = SortHierarchy(frozenset(sorts), frozenset(edges))
    return h


def load_hierarchy(text: str, source: str = "<sorts>") -> SortHierarchy:
    ts = TokenStream(tokenize(text, "%", HierarchySyntaxError, source), HierarchySyntaxError, source)
    edges: list[tuple[str, str]] = []
    while ts.peek().kind != "eof":
        child = ts.expect_kind("name", "a sort name").text
        ts.expect("isa")
        parent = ts.expect_kind("name", "a sort name").text
        ts.expect(".")
        edges.append((child, parent))
    return build_hierarchy(edges)


def load_hierarchy_file(path: str | Path) -> SortHierarchy:
    path = Path(path)
    return load_hierarchy(path.read_text(encoding="utf-8"), str(path))


def trivial_hierarchy() -> SortHierarchy:
    return build_hierarchy(())


def subsumes_or_equal(h: SortHierarchy | None, general: str, specific: str) -> bool:
    """``h.subsumes`` when both sorts are known, else a flat model: only
    identity and ``top`` subsume."""
    if h is not None and general in h and specific in h:
        return h.subsumes(general, specific)
    return general == specific or general == TOP
