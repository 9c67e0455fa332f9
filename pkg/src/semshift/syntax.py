"""Readers for the shared ``label:functor(arg, ...)`` term syntax."""

from __future__ import annotations

from ._lexer import TokenStream, describe, tokenize
from .errors import SyntaxErrorAt
from .terms import Arg, Condition, Term, Var


def read_arg(ts: TokenStream) -> Arg:
    tok = ts.next()
    if tok.kind == "var":
        return Var(tok.text)
    if tok.kind != "name":
        ts.fail(f"expected a term, found {describe(tok)}", tok)
    if ts.at("("):
        return Term(tok.text, read_args(ts))
    return Term(tok.text)


def read_args(ts: TokenStream) -> tuple[Arg, ...]:
    ts.expect("(")
    args: list[Arg] = []
    if not ts.accept(")"):
        args.append(read_arg(ts))
        while ts.accept(","):
            args.append(read_arg(ts))
        ts.expect(")")
    return tuple(args)


def read_label(ts: TokenStream) -> Arg:
    tok = ts.next()
    if tok.kind == "var":
        return Var(tok.text)
    if tok.kind == "name":
        return Term(tok.text)
    ts.fail(f"expected a label, found {describe(tok)}", tok)


def read_condition_after_label(ts: TokenStream, label: Arg) -> Condition:
    ts.expect(":")
    tok = ts.expect_kind("name", "a predicate name")
    return Condition(label, Term(tok.text, read_args(ts)))


def read_condition(ts: TokenStream) -> Condition:
    return read_condition_after_label(ts, read_label(ts))


def parse_condition(text: str) -> Condition:
    """Parse a single condition such as ``l1:echt(l2)`` or ``L:arg3(E,Y)``."""
    ts = TokenStream(tokenize(text, "%", SyntaxErrorAt, "<condition>"), SyntaxErrorAt, "<condition>")
    c = read_condition(ts)
    ts.expect_kind("eof", "end of input")
    return c


def parse_conditions(text: str) -> list[Condition]:
    """Parse a comma-separated list, brackets optional."""
    ts = TokenStream(tokenize(text, "%", SyntaxErrorAt, "<conditions>"), SyntaxErrorAt, "<conditions>")
    bracket = ts.accept("[")
    out: list[Condition] = []
    if not (bracket and ts.at("]")) and ts.peek().kind != "eof":
        out.append(read_condition(ts))
        while ts.accept(","):
            out.append(read_condition(ts))
    if bracket:
        ts.expect("]")
    ts.expect_kind("eof", "end of input")
    return out
