"""Tiny shared tokenizer for the query DSL and the rule file format."""

from __future__ import annotations

import re
from dataclasses import dataclass


@dataclass(frozen=True)
class Token:
    kind: str   # IDENT | INT | QUOTED | OP | EOF
    text: str
    line: int
    column: int


class ScanError(Exception):
    def __init__(self, message: str, line: int, column: int):
        self.message, self.line, self.column = message, line, column
        super().__init__(message)


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_INT = re.compile(r"\d+")
_QUOTED = re.compile(r"'([^'\n]*)'")


def scan(text: str, operators: tuple[str, ...]) -> list[Token]:
    """Tokenize; operators are matched longest-first.  '#' comments to EOL."""
    ops = sorted(operators, key=len, reverse=True)
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        m = _QUOTED.match(text, i)
        if m:
            tokens.append(Token("QUOTED", m.group(1), line, col))
            col += m.end() - i
            i = m.end()
            continue
        if ch == "'":
            raise ScanError("unterminated quoted token", line, col)
        m = _INT.match(text, i)
        if m:
            tokens.append(Token("INT", m.group(0), line, col))
            col += m.end() - i
            i = m.end()
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(Token("IDENT", m.group(0), line, col))
            col += m.end() - i
            i = m.end()
            continue
        for op in ops:
            if text.startswith(op, i):
                tokens.append(Token("OP", op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            raise ScanError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens
