"""The transfer engine.

One transfer step selects the smallest remaining source condition, looks up
the rules indexed under its ``(functor, arity)``, matches the rest of each
left-hand side against the remaining conditions and evaluates the rule's
conditions.  Candidates are produced lazily in strict specificity order.
The first candidate that passes fires: its left-hand side is removed from
the source set and its right-hand side, instantiated, is added to the
target.  When no rule fires the fallback policy decides.

Under the ``copy`` and ``drop`` policies every step makes progress, so the
engine is greedy.  Under ``error`` a condition no rule can consume is a dead
end and the engine backtracks to the most recent alternative candidate
before giving up.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from enum import Enum
from itertools import count
from typing import Iterator, Mapping

from .compiler import CompiledRuleSet, OrientedRule
from .errors import TransferError
from .hooks import SUBORDINATED, HookRegistry
from .rules import ContextMatch, EqBind, HookCall, SortTest, SubordTest
from .sorts import TOP, subsumes_or_equal
from .terms import FRESH_PREFIX, Condition, FreshGen, Term, Var, instantiate_all, substitute, substitute_condition
from .vit import ScopeConstraint, SemSet, Vit, validate_sorts, validate_vit


class FallbackPolicy(str, Enum):
    COPY = "copy"
    DROP = "drop"
    ERROR = "error"


FALLBACK = "FALLBACK"


def _fmt_list(xs) -> str:
    return "[" + ", ".join(str(x) for x in xs) + "]"


@dataclass(frozen=True)
class TraceStep:
    rule: str  # rule id, or FALLBACK
    consumed: tuple[Condition, ...]
    produced: tuple[Condition, ...]
    bindings: tuple[tuple[str, Term], ...] = ()
    rejected: tuple[str, ...] = ()  # candidates whose conditions failed first

    @property
    def is_fallback(self) -> bool:
        return self.rule == FALLBACK

    def __str__(self) -> str:
        if self.is_fallback:
            tail = "" if self.produced else " dropped"
            return f"FALLBACK {self.consumed[0]}{tail}"
        env = ", ".join(f"{k}={v}" for k, v in self.bindings)
        return f"FIRE {self.rule} consumed={_fmt_list(self.consumed)} produced={_fmt_list(self.produced)} env={{{env}}}"


@dataclass(frozen=True)
class TransferState:
    remaining: SemSet
    emitted: tuple[Condition, ...] = ()
    trace: tuple[TraceStep, ...] = ()
    fresh: int = 0

    @classmethod
    def start(cls, v: Vit | SemSet) -> "TransferState":
        return cls(v.sem if isinstance(v, Vit) else v)

    @property
    def final(self) -> bool:
        return not len(self.remaining)


@dataclass
class Stats:
    rules_tried: int = 0
    rules_fired: int = 0
    fallbacks: int = 0
    backtracks: int = 0
    elapsed: float = 0.0

    def __str__(self) -> str:
        return (
            f"tried={self.rules_tried} fired={self.rules_fired} fallbacks={self.fallbacks} "
            f"backtracks={self.backtracks} time={self.elapsed * 1000:.3f}ms"
        )


@dataclass
class TransferResult:
    output: Vit
    trace: tuple[TraceStep, ...]
    stats: Stats = field(default_factory=Stats)

    def trace_text(self) -> str:
        return "".join(f"{s}\n" for s in self.trace)


@dataclass
class Derivations:
    results: list[TransferResult]
    truncated: bool = False

    def outputs(self) -> list[SemSet]:
        return [r.output.sem for r in self.results]


# -- rule application -------------------------------------------------------------


def _resolve_eqs(eqs, env: dict[str, Term], fresh: int) -> tuple[dict[str, Term], int] | None:
    """Apply equality bindings: bind a free side, check two bound sides."""
    env = dict(env)
    for e in eqs:
        a, b = env.get(e.left.name), env.get(e.right.name)
        if a is not None and b is not None:
            if a != b:
                return None
        elif a is not None:
            env[e.right.name] = a
        elif b is not None:
            env[e.left.name] = b
        else:
            fresh += 1
            env[e.left.name] = env[e.right.name] = Term(f"{FRESH_PREFIX}{fresh}")
    return env, fresh


def _produce(rule: OrientedRule, env: Mapping[str, Term], fresh: int):
    eqs = list(rule.eqs) + [c for c in rule.conds if isinstance(c, EqBind)]
    resolved = _resolve_eqs(eqs, env, fresh)
    if resolved is None:
        return None
    full, fresh = resolved
    gen = FreshGen(fresh)
    produced, full = instantiate_all(rule.rhs, full, gen)
    return produced, full, gen.count


def _bindings(rule: OrientedRule, env: Mapping[str, Term]) -> tuple[tuple[str, Term], ...]:
    names = dict(rule.var_names)
    return tuple(sorted(((names.get(k, k), v) for k, v in env.items()), key=lambda kv: kv[0]))


def _canonical_env(rule: OrientedRule, env: Mapping[str, Term]) -> dict[str, Term]:
    canon = {c for c, _ in rule.var_names}
    if not rule.var_names or set(env) <= canon:
        return dict(env)
    back = {o: c for c, o in rule.var_names}
    return {back.get(k, k): v for k, v in env.items()}


def apply_rule(state: TransferState, rule: OrientedRule, env: Mapping[str, Term]) -> TransferState | None:
    """Fire ``rule`` under ``env`` (which must bind its whole left-hand side).

    ``env`` may be keyed by the canonical variable names or by the names
    used in the rule text.  The consumed conditions are found by instantiating the left-hand side, so
    they must all be present in ``state.remaining``.  Returns ``None`` when an
    equality binding fails.
    """
    env = _canonical_env(rule, env)
    consumed = tuple(substitute_condition(c, env) for c in rule.lhs)
    remaining = set(state.remaining)
    for c in consumed:
        if c not in remaining:
            raise ValueError(f"{rule.origin}: {c} is not in the remaining source set")
    if len(set(consumed)) != len(consumed):
        raise ValueError(f"{rule.origin}: left-hand side matches the same condition twice")
    out = _produce(rule, env, state.fresh)
    if out is None:
        return None
    produced, full, fresh = out
    step = TraceStep(rule.origin, consumed, produced, _bindings(rule, full))
    left = SemSet(c for c in state.remaining if c not in set(consumed))
    return TransferState(left, state.emitted + produced, state.trace + (step,), fresh)


def replay(start: SemSet, trace) -> TransferState:
    """Rebuild the final state from a trace: remove consumed, add produced."""
    remaining = list(start)
    emitted: list[Condition] = []
    for step in trace:
        for c in step.consumed:
            remaining.remove(c)
        emitted.extend(step.produced)
    return TransferState(SemSet(remaining), tuple(emitted), tuple(trace))


# -- engine -----------------------------------------------------------------------------


class _Frame:
    __slots__ = ("mask", "emitted", "trace", "fresh", "sel", "cands", "fired", "rejected")

    def __init__(self, mask, emitted, trace, fresh, sel, cands):
        self.mask = mask
        self.emitted = emitted
        self.trace = trace
        self.fresh = fresh
        self.sel = sel
        self.cands = cands
        self.fired = False
        self.rejected: list[str] = []


class _Engine:
    def __init__(self, vit: Vit, prog: CompiledRuleSet, hooks: HookRegistry | None, policy: FallbackPolicy):
        self.vit = vit
        self.prog = prog
        self.hooks = hooks if hooks is not None else HookRegistry()
        self.policy = FallbackPolicy(policy)
        self.hierarchy = prog.hierarchy
        self.items: tuple[Condition, ...] = vit.sem.conditions
        self.full = (1 << len(self.items)) - 1
        self.by_sig: dict[tuple[str, int], list[int]] = {}
        for i, c in enumerate(self.items):
            self.by_sig.setdefault(c.signature, []).append(i)
        self.stats = Stats()
        self.stuck: Condition | None = None

    # candidate enumeration

    def _lhs_matches(self, mask: int, sel: int) -> Iterator[tuple[OrientedRule, dict, int]]:
        """(rule, env, used-mask) for every left-hand-side match, most specific first.

        Only matches that consume ``sel`` are yielded.  Since left-hand sides
        are sorted and ``sel`` is the smallest remaining condition, ``sel``
        can only be consumed by one of the leading patterns sharing its
        signature, so the first pattern may match any remaining condition of
        that signature and branches are pruned once past it.
        """
        items, by_sig = self.items, self.by_sig
        sig = items[sel].signature
        sel_bit = 1 << sel
        heap: list = []
        tick = count()
        roots = self.prog.trie.lookup(sig)
        if roots:
            free = [p for p in by_sig[sig] if not mask >> p & 1]
            for node in roots:
                for pos in free:
                    env = _match(node.pattern, items[pos], {})
                    if env is not None:
                        heap.append((node.best, next(tick), 0, node, env, mask | (1 << pos)))
        heapq.heapify(heap)
        while heap:
            _, _, kind, node, payload, used = heapq.heappop(heap)
            if kind == 1:
                i, env = payload
                rule = node.leaves[i]
                if i + 1 < len(node.leaves):
                    heapq.heappush(heap, (node.leaves[i + 1].order_key, next(tick), 1, node, (i + 1, env), used))
                yield rule, env, used
                continue
            env = payload
            has_sel = used & sel_bit
            if node.leaves and has_sel:
                heapq.heappush(heap, (node.leaves[0].order_key, next(tick), 1, node, (0, env), used))
            if not node.by_sig:
                continue
            if not has_sel:
                pairs = ((node.by_sig.get(sig), by_sig[sig]),)
            elif len(node.by_sig) <= len(by_sig):
                pairs = ((node.by_sig[s], by_sig.get(s)) for s in node.by_sig)
            else:
                pairs = ((node.by_sig.get(s), by_sig[s]) for s in by_sig)
            for children, positions in pairs:
                if not children or not positions:
                    continue
                for child in children:
                    for pos in positions:
                        if used >> pos & 1:
                            continue
                        e2 = _match(child.pattern, items[pos], env)
                        if e2 is not None:
                            heapq.heappush(heap, (child.best, next(tick), 0, child, e2, used | (1 << pos)))

    def candidates(self, frame_mask: int, sel: int, rejected: list[str]) -> Iterator[tuple[OrientedRule, dict, int]]:
        for rule, env, used in self._lhs_matches(frame_mask, sel):
            self.stats.rules_tried += 1
            ok = False
            for env2 in self._conds(rule, 0, env, frame_mask):
                if _resolve_eqs(rule.eqs, env2, 0) is None:
                    continue
                ok = True
                yield rule, env2, used
            if not ok:
                rejected.append(rule.origin)

    def _conds(self, rule: OrientedRule, i: int, env: dict, mask: int) -> Iterator[dict]:
        conds = rule.conds
        if i == len(conds):
            yield env
            return
        c = conds[i]
        if isinstance(c, ContextMatch):
            # context sees the whole input: remaining plus everything consumed so far
            for alt in c.alternatives():
                for pos in self.by_sig.get(alt.signature, ()):
                    e2 = _match(alt, self.items[pos], env)
                    if e2 is not None:
                        yield from self._conds(rule, i + 1, e2, mask)
        elif isinstance(c, SortTest):
            if self._sort_test(c, env):
                yield from self._conds(rule, i + 1, env, mask)
        elif isinstance(c, SubordTest):
            args = (substitute(c.lower, env), substitute(c.upper, env))
            if self.hooks.call(SUBORDINATED, args, self.vit, _Snapshot(self, mask)):
                yield from self._conds(rule, i + 1, env, mask)
        elif isinstance(c, EqBind):
            resolved = _resolve_eqs((c,), env, 0) if _bound_side(c, env) else (env, 0)
            if resolved is not None:
                yield from self._conds(rule, i + 1, resolved[0], mask)
        elif isinstance(c, HookCall):
            args = tuple(substitute(a, env) for a in c.args)
            res = self.hooks.call(c.name, args, self.vit, _Snapshot(self, mask))
            if res is True:
                yield from self._conds(rule, i + 1, env, mask)
            elif res:
                e2 = dict(env)
                for k, v in _canonical_env(rule, res).items():
                    if e2.setdefault(k, v) != v:
                        return
                yield from self._conds(rule, i + 1, e2, mask)
        else:
            raise TypeError(f"unknown rule condition {c!r}")

    def _sort_test(self, c: SortTest, env: Mapping[str, Term]) -> bool:
        marker = substitute(c.marker, env)
        if isinstance(marker, Var):
            return False
        assigned = self.vit.sorts.get(marker.functor)
        if c.negated and assigned is None:
            # a negated test needs positive sort information
            return False
        holds = subsumes_or_equal(self.hierarchy, c.sort, assigned or TOP)
        return not holds if c.negated else holds

    # search

    def _frame(self, mask, emitted, trace, fresh) -> _Frame:
        sel = ((~mask) & (mask + 1)).bit_length() - 1
        f = _Frame(mask, emitted, trace, fresh, sel, None)
        f.cands = self.candidates(mask, sel, f.rejected) if mask != self.full else iter(())
        return f

    def _fire(self, f: _Frame, rule: OrientedRule, env: dict, used: int) -> _Frame | None:
        out = _produce(rule, env, f.fresh)
        if out is None:
            return None
        produced, full, fresh = out
        newly = used & ~f.mask
        consumed = tuple(self.items[p] for p in range(len(self.items)) if newly >> p & 1)
        step = TraceStep(rule.origin, consumed, produced, _bindings(rule, full), tuple(f.rejected))
        f.rejected.clear()
        self.stats.rules_fired += 1
        return self._frame(used, f.emitted + produced, f.trace + (step,), fresh)

    def _fallback(self, f: _Frame) -> _Frame:
        c = self.items[f.sel]
        produced = () if self.policy is FallbackPolicy.DROP else (c,)
        step = TraceStep(FALLBACK, (c,), produced, (), tuple(f.rejected))
        self.stats.fallbacks += 1
        return self._frame(f.mask | (1 << f.sel), f.emitted + produced, f.trace + (step,), f.fresh)

    def search(self, exhaustive: bool = False, limit: int | None = None) -> Iterator[_Frame]:
        """Yield complete derivations in preference order."""
        stack = [self._frame(0, (), (), 0)]
        found = 0
        while stack:
            f = stack[-1]
            if f.mask == self.full:
                stack.pop()
                found += 1
                yield f
                if limit is not None and found >= limit:
                    return
                continue
            nxt = next(f.cands, None)
            if nxt is not None:
                child = self._fire(f, *nxt)
                if child is not None:
                    f.fired = True
                    stack.append(child)
                continue
            stack.pop()
            if not f.fired and self.policy is not FallbackPolicy.ERROR:
                f.fired = True
                stack.append(self._fallback(f))
                continue
            if not f.fired and self.stuck is None:
                self.stuck = self.items[f.sel]
            if stack and not exhaustive:
                self.stats.backtracks += 1

    def result(self, f: _Frame) -> TransferResult:
        return TransferResult(_output(self.vit, f.emitted), f.trace, self.stats)


class _Snapshot:
    """Lazy view of the engine state handed to hooks."""

    def __init__(self, engine: _Engine, mask: int):
        self._engine = engine
        self.mask = mask

    @property
    def remaining(self) -> SemSet:
        items = self._engine.items
        return SemSet(items[i] for i in range(len(items)) if not self.mask >> i & 1)


def _bound_side(e: EqBind, env) -> bool:
    return e.left.name in env or e.right.name in env


def _match(pattern: Condition, subject: Condition, env: dict) -> dict | None:
    out = dict(env)
    if _match_into(pattern.body, subject.body, out) and _match_into(pattern.label, subject.label, out):
        return out
    return None


def _match_into(p, s, env) -> bool:
    if p.__class__ is Var:
        bound = env.get(p.name)
        if bound is None:
            env[p.name] = s
            return True
        return bound == s
    if p.functor != s.functor:
        return False
    pa, sa = p.args, s.args
    if len(pa) != len(sa):
        return False
    for x, y in zip(pa, sa):
        if not _match_into(x, y, env):
            return False
    return True


def _output(src: Vit, emitted) -> Vit:
    sem = SemSet(emitted)
    consts = sem.constants()
    args = {a.functor for c in sem for a in c.body.args if isinstance(a, Term)}
    scope = tuple(s for s in src.scope if s.lower in consts and s.upper in consts)
    sorts = {m: s for m, s in src.sorts.items() if m in args}
    return Vit(sem, tuple(ScopeConstraint(*s) for s in scope), sorts, dict(src.extras))


def _prepare(v: Vit, prog: CompiledRuleSet) -> None:
    validate_vit(v, transfer_input=True)
    if prog.hierarchy is not None:
        validate_sorts(v, prog.hierarchy)


def transfer(
    v: Vit,
    prog: CompiledRuleSet,
    hooks: HookRegistry | None = None,
    policy: FallbackPolicy | str = FallbackPolicy.COPY,
) -> TransferResult:
    t0 = time.perf_counter()
    _prepare(v, prog)
    eng = _Engine(v, prog, hooks, policy)
    for f in eng.search():
        eng.stats.elapsed = time.perf_counter() - t0
        return eng.result(f)
    stuck = eng.stuck
    raise TransferError(f"no rule applies to {stuck} and the fallback policy is 'error'", stuck)


def derive_all(
    v: Vit,
    prog: CompiledRuleSet,
    hooks: HookRegistry | None = None,
    limit: int = 1000,
    policy: FallbackPolicy | str = FallbackPolicy.COPY,
) -> Derivations:
    """All distinct outputs reachable by choosing among candidate rules.

    The selected condition is always the smallest remaining one; only the
    choice of rule varies.  ``limit`` bounds the number of complete
    derivations explored; ``truncated`` is set when more exist.
    """
    t0 = time.perf_counter()
    _prepare(v, prog)
    eng = _Engine(v, prog, hooks, policy)
    seen: dict[SemSet, TransferResult] = {}
    truncated = False
    explored = 0
    for f in eng.search(exhaustive=True):
        if explored >= limit:
            truncated = True
            break
        explored += 1
        res = TransferResult(_output(v, f.emitted), f.trace, Stats())
        seen.setdefault(res.output.sem, res)
    elapsed = time.perf_counter() - t0
    for r in seen.values():
        r.stats = Stats(eng.stats.rules_tried, eng.stats.rules_fired, eng.stats.fallbacks, 0, elapsed)
    return Derivations(list(seen.values()), truncated)


__all__ = [
    "Derivations",
    "FallbackPolicy",
    "Stats",
    "TraceStep",
    "TransferResult",
    "TransferState",
    "apply_rule",
    "derive_all",
    "replay",
    "transfer",
]
