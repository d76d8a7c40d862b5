"""Tokenizer for mini-ArkTS source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError

KEYWORDS = frozenset({
    "let", "const", "var", "function", "class", "struct", "namespace", "extends",
    "new", "return", "this", "super", "if", "else", "while", "for", "true",
    "false", "null", "undefined", "typeof", "break", "continue", "do",
})

# Contextual words: lexed as identifiers, recognised by the parser by position.
MODIFIERS = frozenset({"static", "export", "declare", "private", "public", "protected", "readonly", "method"})

# Longest operators first so the alternation is greedy.
_PUNCT = [
    "===", "!==", "...", "=>", "==", "!=", "<=", ">=", "&&", "||", "??", "?.",
    "+=", "-=", "*=", "/=", "++", "--",
    "{", "}", "(", ")", "[", "]", ";", ",", ".", ":", "?", "=", "<", ">",
    "+", "-", "*", "/", "%", "!", "&", "|", "@",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<string>'(?:[^'\\\n]|\\.)*'|"(?:[^"\\\n]|\\.)*")
  | (?P<template>`(?:[^`\\]|\\.)*`)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<punct>"""
    + "|".join(re.escape(p) for p in _PUNCT)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | number | string | punct | eof
    value: str
    line: int
    col: int
    nl_before: bool = False

    def is_punct(self, value: str) -> bool:
        return self.kind == "punct" and self.value == value

    def is_keyword(self, value: str) -> bool:
        return self.kind == "keyword" and self.value == value


def _unquote(text: str) -> str:
    body = text[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


def tokenize(source: str, path: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    nl_pending = False
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", path, line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group(kind)
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
            nl_pending = True
        elif kind in ("bcomment", "template"):
            newlines = text.count("\n")
            if kind == "template":
                tokens.append(Token("string", text[1:-1], line, col, nl_pending))
                nl_pending = False
            if newlines:
                line += newlines
                line_start = pos + text.rfind("\n") + 1
                if kind == "bcomment":
                    nl_pending = True
        elif kind in ("ws", "lcomment"):
            pass
        else:
            if kind == "ident" and text in KEYWORDS:
                kind = "keyword"
            elif kind == "string":
                text = _unquote(text)
            tokens.append(Token(kind, text, line, col, nl_pending))
            nl_pending = False
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, True))
    return tokens
