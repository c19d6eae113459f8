"""Tokenizer for `.psa` source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from psamathe.diagnostics import Diagnostic
from psamathe.syntax import Span

KEYWORDS = frozenset({
    "type", "is", "transformer", "var", "try", "catch", "consume", "new",
    "st", "such that", "copy", "zip",
    "fungible", "unique", "immutable", "consumable", "asset",
    "empty", "one", "any", "nonempty",
    "bool", "nat", "list", "table", "true", "false",
})

# longest symbols first so that `-->` wins over `-` and `->`
SYMBOLS = (
    "-->", "<--", "|->", "->", "==", "!=", "<=", ">=",
    ":", ",", ".", "_", "(", ")", "[", "]", "{", "}",
    "+", "-", "*", "/", "<", ">",
)

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<hex>0[xX][0-9a-fA-F]+)
  | (?P<nat>[0-9]+)
  | (?P<such>such[ \t]+that\b)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>""" + "|".join(re.escape(s) for s in SYMBOLS) + r""")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | identifier | natural | symbol | eof
    lexeme: str
    span: Span

    @property
    def value(self) -> int:
        return int(self.lexeme, 0)

    def is_(self, kind: str, lexeme: str | None = None) -> bool:
        return self.kind == kind and (lexeme is None or self.lexeme == lexeme)

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.lexeme!r}, {self.span})"


class LexError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(d.message for d in diagnostics))
        self.diagnostics = diagnostics


def tokenize(source: str) -> list[Token]:
    """Split ``source`` into tokens, ending with an ``eof`` token.

    Raises LexError listing every unexpected character.
    """
    tokens: list[Token] = []
    errors: list[Diagnostic] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            span = Span(line, col, 1, pos)
            errors.append(Diagnostic(f"unexpected character {source[pos]!r}", span))
            pos += 1
            continue
        kind = m.lastgroup
        text = m.group()
        span = Span(line, col, len(text), pos)
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        elif kind in ("hex", "nat"):
            tokens.append(Token("natural", text, span))
        elif kind == "such":
            tokens.append(Token("keyword", "such that", span))
        elif kind == "ident":
            if text == "_":
                tokens.append(Token("symbol", "_", span))
            elif text in KEYWORDS:
                tokens.append(Token("keyword", text, span))
            else:
                tokens.append(Token("identifier", text, span))
        else:
            tokens.append(Token("symbol", text, span))
        pos = m.end()
    if errors:
        raise LexError(errors)
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1, 0, pos)))
    return tokens
