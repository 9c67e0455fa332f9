from __future__ import annotations

import pytest

from semshift import data_path
from semshift.compiler import compile_rules
from semshift.rules import load_rule_file, parse_rule_file
from semshift.sorts import load_hierarchy_file
from semshift.syntax import parse_conditions
from semshift.vit import SemSet, Vit, load_vit_file, parse_vit


def conds(text: str):
    return parse_conditions(text)


def semset(text: str) -> SemSet:
    return SemSet(parse_conditions(text))


def vit(text: str, **slots) -> Vit:
    """A Vit from a bare condition list, e.g. ``vit("l1:a(i1), l2:b(i1)")``."""
    return Vit(semset(text), **slots)


def program(text: str, direction: str = "fwd", hierarchy=None, module: str = "main"):
    return compile_rules([parse_rule_file(text, "<test>", module)], direction, hierarchy)


@pytest.fixture(scope="session")
def demo_module():
    return load_rule_file(data_path("demo_rules.trl"))


@pytest.fixture(scope="session")
def demo_sorts():
    return load_hierarchy_file(data_path("demo.sorts"))


@pytest.fixture(scope="session")
def demo_fwd(demo_module, demo_sorts):
    return compile_rules([demo_module], "fwd", demo_sorts)


@pytest.fixture(scope="session")
def passen_bei():
    return load_vit_file(data_path("passen_bei.vit"))


__all__ = ["conds", "semset", "vit", "program", "parse_vit"]
