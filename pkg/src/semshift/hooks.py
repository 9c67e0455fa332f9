"""Named condition hooks callable from rule conditions.

A hook is ``fn(args, vit, state) -> bool | Mapping[str, Term]``.  ``args``
holds the instantiated arguments; arguments still unbound are passed as
``Var`` objects and the hook may bind them by returning a mapping from
variable name (as written in the rule, or the name of a received ``Var``)
to ground term.  Returning ``False``/``None`` means the
condition does not hold.  Raising is an engine error.
"""

from __future__ import annotations

import threading
from typing import Callable, Mapping, Union

from .errors import HookError, UnknownLabelError
from .terms import Term, Var
from .vit import Vit, subordinated

HookResult = Union[bool, None, Mapping[str, Term]]
Hook = Callable[..., HookResult]

SUBORDINATED = "subordinated"


def subordination_hook(args, vit: Vit, state=None) -> bool:
    """Default scope check: deterministic subordination over the input's declared structure."""
    lower, upper = args
    if isinstance(lower, Var) or isinstance(upper, Var):
        return False
    try:
        return subordinated(vit, lower.functor, upper.functor)
    except UnknownLabelError:
        return False


class HookRegistry:
    def __init__(self, defaults: bool = True):
        self._hooks: dict[str, Hook] = {}
        self._locks: dict[str, threading.Lock] = {}
        if defaults:
            self.register(SUBORDINATED, subordination_hook)

    def register(self, name: str, fn: Hook, *, exclusive: bool = False) -> None:
        """Register ``fn``; exclusive hooks are serialised across threads."""
        self._hooks[name] = fn
        if exclusive:
            self._locks[name] = threading.Lock()
        else:
            self._locks.pop(name, None)

    def __contains__(self, name: str) -> bool:
        return name in self._hooks

    def call(self, name: str, args: tuple, vit: Vit, state=None) -> HookResult:
        fn = self._hooks.get(name)
        if fn is None:
            raise HookError(f"no hook registered under {name!r}")
        lock = self._locks.get(name)
        try:
            if lock is None:
                return fn(args, vit, state)
            with lock:
                return fn(args, vit, state)
        except HookError:
            raise
        except Exception as exc:
            raise HookError(f"hook {name!r} failed: {exc}") from exc
