"""Compiler and runtime for transfer rules over flat, labeled ground term sets."""

from __future__ import annotations

import logging
from importlib import resources
from pathlib import Path

from .compiler import CompiledRuleSet, OrientedRule, SpecKey, compile_rules, orient, specificity_compare
from .errors import (
    CompileError,
    HookError,
    RuleError,
    RuleSyntaxError,
    SemshiftError,
    TransferError,
    VitSyntaxError,
    VitValidationError,
)
from .hooks import HookRegistry
from .oracle import oracle_transfer
from .rules import Direction, RuleModule, TransferRule, expand_classes, load_rule_file, parse_rule_file
from .runtime import FallbackPolicy, TransferResult, apply_rule, derive_all, replay, transfer
from .sorts import SortHierarchy, load_hierarchy, load_hierarchy_file
from .terms import Condition, Term, Var, match
from .vit import SemSet, Vit, load_vit_file, parse_vit, serialize_vit, subordinated, validate_vit

logging.getLogger(__name__).addHandler(logging.NullHandler())


def data_path(name: str) -> Path:
    """Path of a file shipped in the package ``data`` directory."""
    return Path(str(resources.files(__name__).joinpath("data", name)))


__all__ = [
    "CompileError",
    "CompiledRuleSet",
    "Condition",
    "Direction",
    "FallbackPolicy",
    "HookError",
    "HookRegistry",
    "OrientedRule",
    "RuleError",
    "RuleModule",
    "RuleSyntaxError",
    "SemSet",
    "SemshiftError",
    "SortHierarchy",
    "SpecKey",
    "Term",
    "TransferError",
    "TransferResult",
    "TransferRule",
    "Var",
    "Vit",
    "VitSyntaxError",
    "VitValidationError",
    "apply_rule",
    "compile_rules",
    "data_path",
    "derive_all",
    "expand_classes",
    "load_hierarchy",
    "load_hierarchy_file",
    "load_rule_file",
    "load_vit_file",
    "match",
    "oracle_transfer",
    "orient",
    "parse_rule_file",
    "parse_vit",
    "replay",
    "serialize_vit",
    "specificity_compare",
    "subordinated",
    "transfer",
    "validate_vit",
]
