"""C/C++ lexer with C11 maximal-munch rules.

Input is expected to be comment-stripped (see normalize.strip_comments_nonascii);
whitespace is dropped, every other byte must belong to some token. Numbers are
matched with the preprocessing-number rule, which covers all integer and
floating constants (hex, suffixes, exponents) in one regex.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import LexError

KEYWORDS = frozenset(
    """
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Alignas _Alignof _Atomic _Bool _Complex _Generic _Imaginary _Noreturn
    _Static_assert _Thread_local
    """.split()
)

# Longest first so alternation preserves maximal munch.
OPERATORS = [
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "^=", "|=", "::", "##",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "?", ":",
    ".", "#",
]
PUNCTUATION = frozenset("(){}[];,")

_WS = re.compile(r"[ \t\r\f\v]+")
_IDENT = re.compile(r"[A-Za-z_]\w*")
# C11 pp-number: digit or .digit start, then identifier chars, dots and
# sign-bearing exponents.
_NUMBER = re.compile(r"\.?\d(?:[eEpP][+-]|[\w.])*")
_STRING = re.compile(r'(?:u8|u|U|L)?"(?:\\.|[^"\\\n])*"')
_CHAR = re.compile(r"(?:u8|u|U|L)?'(?:\\.|[^'\\\n])*'")
_STRING_OPEN = re.compile(r'(?:u8|u|U|L)?"')
_CHAR_OPEN = re.compile(r"(?:u8|u|U|L)?'")
_OPERATOR = re.compile("|".join(re.escape(op) for op in OPERATORS))

TOKEN_KINDS = (
    "identifier",
    "keyword",
    "number",
    "string_lit",
    "char_lit",
    "operator",
    "punctuation",
)


@dataclass(frozen=True)
class CToken:
    kind: str
    text: str
    line: int
    col: int

    def __repr__(self):
        return f"CToken({self.kind}, {self.text!r}, {self.line}:{self.col})"


def lex_c_source(text: str) -> list[CToken]:
    """Tokenize C/C++ source. Raises LexError on unterminated literals or
    bytes that start no token."""
    tokens: list[CToken] = []
    pos = 0
    line = 1
    line_start = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            line += 1
            pos += 1
            line_start = pos
            continue
        m = _WS.match(text, pos)
        if m:
            pos = m.end()
            continue
        col = pos - line_start + 1

        m = _NUMBER.match(text, pos)
        if m:
            tokens.append(CToken("number", m.group(), line, col))
            pos = m.end()
            continue
        m = _STRING.match(text, pos)
        if m:
            tokens.append(CToken("string_lit", m.group(), line, col))
            pos = m.end()
            continue
        m = _CHAR.match(text, pos)
        if m:
            tokens.append(CToken("char_lit", m.group(), line, col))
            pos = m.end()
            continue
        if _STRING_OPEN.match(text, pos):
            raise LexError("unterminated string literal", line, col)
        if _CHAR_OPEN.match(text, pos):
            raise LexError("unterminated char literal", line, col)
        m = _IDENT.match(text, pos)
        if m:
            word = m.group()
            kind = "keyword" if word in KEYWORDS else "identifier"
            tokens.append(CToken(kind, word, line, col))
            pos = m.end()
            continue
        if ch in PUNCTUATION:
            tokens.append(CToken("punctuation", ch, line, col))
            pos += 1
            continue
        m = _OPERATOR.match(text, pos)
        if m:
            tokens.append(CToken("operator", m.group(), line, col))
            pos = m.end()
            continue
        raise LexError(f"byte {ch!r} starts no token", line, col)
    return tokens


def render_tokens(tokens) -> str:
    """Join token texts with single spaces; re-lexing the result reproduces
    the same (kind, text) sequence."""
    return " ".join(t.text if isinstance(t, CToken) else t for t in tokens)
