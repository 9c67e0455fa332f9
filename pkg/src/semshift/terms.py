"""Ground terms, patterns, the canonical term order, matching and instantiation.

Terms are immutable.  Every term carries a precomputed sort key so that the
canonical order is plain tuple comparison:

* a variable sorts below every non-variable term at the same position;
* non-variable terms compare by functor name, then arity, then arguments
  left to right;
* a condition compares its body first and its label second, so predicate
  identity dominates both sorting and indexing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union

SYMBOL_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
VARIABLE_RE = re.compile(r"[A-Z][a-zA-Z0-9_]*\Z")
FRESH_PREFIX = "t"
FRESH_RE = re.compile(rf"{FRESH_PREFIX}[0-9]+\Z")


@dataclass(frozen=True, slots=True, repr=False)
class Var:
    name: str
    key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not VARIABLE_RE.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")
        object.__setattr__(self, "key", (0,))

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Term:
    functor: str
    args: tuple = ()
    key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not SYMBOL_RE.match(self.functor):
            raise ValueError(f"invalid symbol {self.functor!r}")
        args = tuple(self.args)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "key", (1, self.functor, len(args)) + tuple(a.key for a in args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.functor, len(self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.functor
        return f"{self.functor}({','.join(str(a) for a in self.args)})"

    def __repr__(self) -> str:
        return f"Term({str(self)!r})"


Arg = Union[Term, Var]


@dataclass(frozen=True, slots=True, repr=False)
class Condition:
    """A labeled term ``label:body(...)``; ground when it contains no variables."""

    label: Arg
    body: Term
    key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if isinstance(self.label, Term) and self.label.args:
            raise ValueError(f"label must be a constant, got {self.label}")
        object.__setattr__(self, "key", (self.body.key, self.label.key))

    @property
    def signature(self) -> tuple[str, int]:
        return self.body.signature

    def __str__(self) -> str:
        body = self.body
        if not body.args:
            return f"{self.label}:{body.functor}()"
        return f"{self.label}:{body}"

    def __repr__(self) -> str:
        return f"Condition({str(self)!r})"


def const(name: str) -> Term:
    return Term(name)


def compare_terms(a: Term | Condition, b: Term | Condition) -> int:
    """Three-way comparison under the canonical order: -1, 0 or 1."""
    ka, kb = a.key, b.key
    if ka == kb:
        return 0
    return -1 if ka < kb else 1


def iter_vars(t: Arg | Condition) -> Iterator[Var]:
    """Variables in left-to-right order of occurrence (with repeats)."""
    if isinstance(t, Var):
        yield t
    elif isinstance(t, Condition):
        yield from iter_vars(t.label)
        yield from iter_vars(t.body)
    else:
        for a in t.args:
            yield from iter_vars(a)


def variables(items: Iterable[Arg | Condition]) -> list[str]:
    """Distinct variable names in order of first occurrence."""
    seen: dict[str, None] = {}
    for item in items:
        for v in iter_vars(item):
            seen.setdefault(v.name)
    return list(seen)


def is_ground(t: Arg | Condition) -> bool:
    return next(iter_vars(t), None) is None


def iter_constants(t: Arg | Condition) -> Iterator[Term]:
    """Arity-0 terms occurring in ``t`` (labels included)."""
    if isinstance(t, Var):
        return
    if isinstance(t, Condition):
        yield from iter_constants(t.label)
        for a in t.body.args:
            yield from iter_constants(a)
        return
    if not t.args:
        yield t
    for a in t.args:
        yield from iter_constants(a)


def depth(t: Arg) -> int:
    if isinstance(t, Var) or not t.args:
        return 0
    return 1 + max(depth(a) for a in t.args)


# -- matching ---------------------------------------------------------------

BindingEnv = Mapping[str, Term]


def _match_into(p: Arg, s: Term, env: dict[str, Term]) -> bool:
    if isinstance(p, Var):
        bound = env.get(p.name)
        if bound is None:
            env[p.name] = s
            return True
        return bound == s
    if p.functor != s.functor or len(p.args) != len(s.args):
        return False
    for pa, sa in zip(p.args, s.args):
        if not _match_into(pa, sa, env):
            return False
    return True


def match(pattern: Arg | Condition, subject: Term | Condition, env: BindingEnv | None = None) -> dict[str, Term] | None:
    """One-way match of ``pattern`` against the ground ``subject``.

    Returns an extended copy of ``env`` or ``None``.  Already-bound variables
    must meet an identical ground term; the input env is never modified.
    """
    out = dict(env) if env else {}
    if isinstance(pattern, Condition):
        if not isinstance(subject, Condition):
            return None
        if not _match_into(pattern.body, subject.body, out):
            return None
        if not _match_into(pattern.label, subject.label, out):
            return None
        return out
    if isinstance(subject, Condition):
        return None
    return out if _match_into(pattern, subject, out) else None


# -- instantiation ----------------------------------------------------------


class FreshGen:
    """Deterministic generator of fresh constants ``t1, t2, ...`` for one derivation."""

    def __init__(self, start: int = 0):
        self.count = start

    def next(self) -> Term:
        self.count += 1
        return Term(f"{FRESH_PREFIX}{self.count}")


def substitute(t: Arg, env: Mapping[str, Term]) -> Arg:
    """Replace bound variables; unbound ones are left in place."""
    if isinstance(t, Var):
        return env.get(t.name, t)
    if not t.args:
        return t
    return Term(t.functor, tuple(substitute(a, env) for a in t.args))


def substitute_condition(c: Condition, env: Mapping[str, Term]) -> Condition:
    return Condition(substitute(c.label, env), substitute(c.body, env))


def instantiate_all(
    patterns: Iterable[Condition], env: BindingEnv, fresh: FreshGen | None = None
) -> tuple[tuple[Condition, ...], dict[str, Term]]:
    """Ground a list of patterns together.

    Unbound variables receive fresh constants in order of first occurrence,
    shared across all patterns of the call.  Returns the ground conditions and
    the env extended with the fresh bindings.
    """
    patterns = tuple(patterns)
    full = dict(env)
    for name in variables(patterns):
        if name not in full:
            if fresh is None:
                raise ValueError(f"variable {name} is unbound and no fresh generator was given")
            full[name] = fresh.next()
    return tuple(substitute_condition(p, full) for p in patterns), full


def instantiate(pattern: Condition, env: BindingEnv, fresh: FreshGen | None = None) -> Condition:
    return instantiate_all((pattern,), env, fresh)[0][0]
