"""Brute-force reference transfer by exhaustive partitioning.

Every way of covering the input by disjoint blocks, each consumed by one
rule, is enumerated; all distinct target sets are returned.  Blocks are
built around the smallest uncovered condition, so each partition is visited
once, and a rule's left-hand side is matched against a block under every
permutation.  Exponential by design, so inputs are capped.

Only context, sort and subordination conditions are supported.
"""

from __future__ import annotations

from itertools import combinations, permutations
from typing import Sequence

from .compiler import OrientedRule
from .errors import OracleLimitError, UnknownLabelError
from .rules import ContextMatch, SortTest, SubordTest
from .sorts import TOP, SortHierarchy, subsumes_or_equal
from .terms import Condition, FreshGen, Var, instantiate_all, match, substitute
from .vit import SemSet, Vit, subordinated

MAX_CONDITIONS = 10
MAX_RULES = 12


def oracle_transfer(
    v: Vit,
    rules: Sequence[OrientedRule],
    hierarchy: SortHierarchy | None = None,
) -> set[SemSet]:
    items = list(v.sem)
    if len(items) > MAX_CONDITIONS:
        raise OracleLimitError(f"oracle accepts at most {MAX_CONDITIONS} conditions, got {len(items)}")
    if len(rules) > MAX_RULES:
        raise OracleLimitError(f"oracle accepts at most {MAX_RULES} rules, got {len(rules)}")
    for r in rules:
        if r.eqs:
            raise ValueError(f"{r.origin}: equality bindings are not supported by the oracle")
        for c in r.conds:
            if not isinstance(c, (ContextMatch, SortTest, SubordTest)):
                raise ValueError(f"{r.origin}: condition {c} is not supported by the oracle")
    results: set[SemSet] = set()

    def holds(conds, i, env):
        if i == len(conds):
            yield env
            return
        c = conds[i]
        if isinstance(c, ContextMatch):
            for alt in c.alternatives():
                for s in items:
                    e2 = match(alt, s, env)
                    if e2 is not None:
                        yield from holds(conds, i + 1, e2)
        elif isinstance(c, SortTest):
            m = substitute(c.marker, env)
            if isinstance(m, Var):
                return
            sort = v.sorts.get(m.functor)
            if c.negated:
                ok = sort is not None and not subsumes_or_equal(hierarchy, c.sort, sort)
            else:
                ok = subsumes_or_equal(hierarchy, c.sort, sort or TOP)
            if ok:
                yield from holds(conds, i + 1, env)
        else:
            lo, hi = substitute(c.lower, env), substitute(c.upper, env)
            if isinstance(lo, Var) or isinstance(hi, Var):
                return
            try:
                ok = subordinated(v, lo.functor, hi.functor)
            except UnknownLabelError:
                ok = False
            if ok:
                yield from holds(conds, i + 1, env)

    def cover(uncovered: tuple[int, ...], emitted: tuple[Condition, ...], fresh: int):
        if not uncovered:
            results.add(SemSet(emitted))
            return
        pivot, rest = uncovered[0], uncovered[1:]
        for k in range(len(rest) + 1):
            for others in combinations(rest, k):
                block = (pivot,) + others
                left = tuple(i for i in rest if i not in others)
                for r in rules:
                    if len(r.lhs) != len(block):
                        continue
                    for perm in permutations(block):
                        env: dict | None = {}
                        for pat, idx in zip(r.lhs, perm):
                            env = match(pat, items[idx], env)
                            if env is None:
                                break
                        if env is None:
                            continue
                        for env2 in holds(r.conds, 0, env):
                            gen = FreshGen(fresh)
                            produced, _ = instantiate_all(r.rhs, env2, gen)
                            cover(left, emitted + produced, gen.count)

    cover(tuple(range(len(items))), (), 0)
    return results
