"""Tokenizer for MiniLang source text."""

from __future__ import annotations

import re
from typing import NamedTuple

from .errors import ParseError

KEYWORDS = frozenset(
    {"fn", "test", "let", "if", "else", "while", "return", "true", "false"}
)

OPERATORS = (
    "==", "!=", "<=", ">=", "&&", "||",
    "+", "-", "*", "/", "%", "<", ">", "!", "=",
    "(", ")", "{", "}", ",", ";",
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


class Token(NamedTuple):
    kind: str  # "ident", "int", "str", "kw", "op", "eof"
    text: str
    line: int
    col: int
    value: object = None

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        return repr(self.text)


_TOKEN = re.compile(r"""
    (?P<nl>\n)
  | (?P<ws>[ \t\f\v]+)
  | (?P<lc>//[^\n]*)
  | (?P<bc>/\*)
  | (?P<int>\d+)
  | (?P<id>[^\W\d]\w*)
  | (?P<str>")
  | (?P<op>==|!=|<=|>=|&&|\|\||[-+*/%<>!=(){},;])
""", re.X)
_STRING_BODY = re.compile(r'[^"\\\n]*')


def tokenize(source: str, path: str = "<input>") -> list:
    """Split ``source`` into tokens, dropping whitespace and comments.

    Both ``//`` line comments and ``/* ... */`` block comments are accepted.
    CRLF line endings are normalised first.
    """
    src = source.replace("\r\n", "\n").replace("\r", "\n")
    tokens = []
    append = tokens.append
    i, line, line_start = 0, 1, 0
    n = len(src)

    def fail(msg, at, expected=()):
        raise ParseError(msg, line, at - line_start + 1, expected, path)

    while i < n:
        m = _TOKEN.match(src, i)
        if m is None:
            fail(f"unexpected character {src[i]!r}", i)
        kind = m.lastgroup
        j = m.end()
        if kind == "nl":
            line += 1
            line_start = j
        elif kind == "ws" or kind == "lc":
            pass
        elif kind == "bc":
            end = src.find("*/", j)
            if end < 0:
                fail("unterminated block comment", i, ("*/",))
            nl = src.count("\n", i, end)
            if nl:
                line += nl
                line_start = src.rfind("\n", i, end) + 1
            j = end + 2
        elif kind == "int":
            text = m.group()
            if j < n and (src[j].isalpha() or src[j] == "_"):
                fail(f"malformed number {src[i:j + 1]!r}", i)
            value = int(text)
            if value > 2**63 - 1:
                fail(f"integer literal {text} out of 64-bit range", i)
            append(Token("int", text, line, i - line_start + 1, value))
        elif kind == "id":
            text = m.group()
            append(Token("kw" if text in KEYWORDS else "ident", text, line,
                         i - line_start + 1))
        elif kind == "str":
            chars = []
            while True:
                body = _STRING_BODY.match(src, j)
                chars.append(body.group())
                j = body.end()
                if j >= n or src[j] == "\n":
                    fail("unterminated string literal", i, ('"',))
                if src[j] == '"':
                    break
                if j + 1 >= n or src[j + 1] not in _ESCAPES:  # backslash
                    fail("invalid escape sequence", j)
                chars.append(_ESCAPES[src[j + 1]])
                j += 2
            j += 1
            append(Token("str", src[i:j], line, i - line_start + 1, "".join(chars)))
        else:
            append(Token("op", m.group(), line, i - line_start + 1))
        i = j
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens
