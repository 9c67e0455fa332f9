"""Tokenizer and a tiny recursive-descent helper shared by the text formats."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Type

from .errors import SyntaxErrorAt

_PUNCT = r"<->|->|<-|=<|::|[\[\](){},.:<~]"


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # name | var | string | punct | eof
    text: str
    line: int
    col: int


def _build(comment: str) -> re.Pattern:
    return re.compile(
        rf"""
        (?P<ws>[ \t\r\n]+)
      | (?P<comment>{re.escape(comment)}[^\n]*)
      | (?P<name>[a-z][a-zA-Z0-9_]*)
      | (?P<var>[A-Z][a-zA-Z0-9_]*)
      | (?P<string>"(?:[^"\\\n]|\\.)*")
      | (?P<punct>{_PUNCT})
        """,
        re.X,
    )


_PATTERNS: dict[str, re.Pattern] = {}


def tokenize(text: str, comment: str, error: Type[SyntaxErrorAt], source: str) -> list[Token]:
    pattern = _PATTERNS.get(comment)
    if pattern is None:
        pattern = _PATTERNS[comment] = _build(comment)
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = pattern.match(text, pos)
        if m is None:
            ch = text[pos]
            hint = " (identifiers must start with a letter)" if ch.isdigit() else ""
            raise error(f"unexpected character {ch!r}{hint}", line, pos - line_start + 1, source)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token], error: Type[SyntaxErrorAt], source: str):
        self.tokens = tokens
        self.i = 0
        self.error = error
        self.source = source

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str, ahead: int = 0) -> bool:
        tok = self.peek(ahead)
        return tok.kind in ("punct", "name") and tok.text == text

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            self.fail(f"expected {text!r}, found {describe(tok)}", tok)
        return self.next()

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"expected {what}, found {describe(tok)}", tok)
        return self.next()

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise self.error(message, tok.line, tok.col, self.source)


def describe(tok: Token) -> str:
    if tok.kind == "eof":
        return "end of input"
    return repr(tok.text)
