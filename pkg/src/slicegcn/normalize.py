"""Symbolic representation of slices: comment/non-ASCII stripping, renaming
of user identifiers to V1,V2,.../F1,F2,..., and tokenization.

Renaming is one-to-one within a slice and assigned in first-occurrence
order, so two slices differing only by consistent identifier names produce
the same token list. Library callee names are kept verbatim; they carry the
vulnerability signal the classifier depends on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, SliceRecord
from .errors import DataError
from .lexer import lex_c_source

# Identifiers that are never renamed: common typedefs, std streams and
# macro-like names. Extend via the stoplist argument of symbolize().
DEFAULT_STOPLIST = frozenset(
    ["size_t", "ssize_t", "FILE", "NULL", "EOF", "stdin", "stdout", "stderr",
     "true", "false", "bool", "int8_t", "int16_t", "int32_t", "int64_t",
     "uint8_t", "uint16_t", "uint32_t", "uint64_t", "wchar_t", "ptrdiff_t",
     "va_list", "errno", "main"]
)


@dataclass
class SymbolMap:
    """Bijective renaming maps for one slice."""

    var_map: dict[str, str] = field(default_factory=dict)
    func_map: dict[str, str] = field(default_factory=dict)

    def var_symbol(self, name: str) -> str:
        if name not in self.var_map:
            self.var_map[name] = f"V{len(self.var_map) + 1}"
        return self.var_map[name]

    def func_symbol(self, name: str) -> str:
        if name not in self.func_map:
            self.func_map[name] = f"F{len(self.func_map) + 1}"
        return self.func_map[name]


@dataclass(frozen=True)
class TokenizedSlice:
    slice_id: int
    tokens: tuple[str, ...]
    label: int


def strip_comments_nonascii(text: str) -> str:
    """Remove //-comments, /*...*/ comments (keeping their newlines so line
    numbers survive) and every byte >= 0x80. String and char literal bodies
    are kept apart from non-ASCII deletion."""
    out: list[str] = []
    i = 0
    n = len(text)
    line = 1
    state = "code"  # code | string | char
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
        if state == "code":
            if c == "/" and i + 1 < n and text[i + 1] == "/":
                j = text.find("\n", i)
                i = n if j < 0 else j
                continue
            if c == "/" and i + 1 < n and text[i + 1] == "*":
                end = text.find("*/", i + 2)
                if end < 0:
                    raise DataError(f"line {line}: unterminated block comment")
                out.append("\n" * text.count("\n", i, end + 2))
                line += text.count("\n", i, end + 2)
                i = end + 2
                continue
            if c == '"':
                state = "string"
            elif c == "'":
                state = "char"
        elif state in ("string", "char"):
            quote = '"' if state == "string" else "'"
            if c == "\\" and i + 1 < n:
                if ord(c) < 128:
                    out.append(c)
                nxt = text[i + 1]
                if ord(nxt) < 128:
                    out.append(nxt)
                if nxt == "\n":
                    line += 1
                i += 2
                continue
            if c == quote or c == "\n":
                state = "code"
        if ord(c) < 128:
            out.append(c)
        i += 1
    return "".join(out)


def symbolize(
    slice_rec: SliceRecord,
    user_funcs: set[str] | frozenset[str] = frozenset(),
    stoplist: frozenset[str] = DEFAULT_STOPLIST,
    symbolize_fields: bool = True,
) -> tuple[list[str], SymbolMap]:
    """Rename user identifiers in a slice to positional symbols.

    An identifier directly followed by '(' is treated as a call: renamed to
    F<n> when it is a known user-defined function, left verbatim otherwise.
    All other identifiers outside the stoplist become V<n>. With
    symbolize_fields=False, struct member names (after '.' or '->') are
    kept verbatim instead.
    """
    mapping = SymbolMap()
    out_lines: list[str] = []
    # Strip the slice as one text so block comments may span code lines;
    # newlines are preserved, so the line count survives.
    cleaned = strip_comments_nonascii("\n".join(slice_rec.code_lines)).split("\n")
    for raw in cleaned:
        tokens = lex_c_source(raw)
        rendered: list[str] = []
        for j, t in enumerate(tokens):
            if t.kind != "identifier" or t.text in stoplist:
                rendered.append(t.text)
                continue
            if t.text in user_funcs:
                rendered.append(mapping.func_symbol(t.text))
                continue
            if not symbolize_fields and j > 0 and tokens[j - 1].text in (".", "->"):
                rendered.append(t.text)
                continue
            is_call = j + 1 < len(tokens) and tokens[j + 1].text == "("
            if is_call:
                rendered.append(t.text)  # library/API callee stays verbatim
            else:
                rendered.append(mapping.var_symbol(t.text))
        out_lines.append(" ".join(rendered))
    return out_lines, mapping


def tokenize_symbolic(symbolic_lines: list[str], slice_id: int = -1, label: int = 0) -> TokenizedSlice:
    """Lex symbolized lines into the flat token list used for graph building."""
    tokens: list[str] = []
    for line in symbolic_lines:
        tokens.extend(t.text for t in lex_c_source(line))
    return TokenizedSlice(slice_id=slice_id, tokens=tuple(tokens), label=label)


def normalize_corpus(
    corpus: Corpus,
    user_funcs: set[str] | frozenset[str] = frozenset(),
    stoplist: frozenset[str] = DEFAULT_STOPLIST,
) -> list[TokenizedSlice]:
    out = []
    for rec in corpus.records:
        lines, _ = symbolize(rec, user_funcs=user_funcs, stoplist=stoplist)
        ts = tokenize_symbolic(lines, slice_id=rec.id, label=rec.label)
        if not ts.tokens:
            raise DataError(f"record {rec.id}: no tokens after normalization")
        out.append(ts)
    return out


def write_tokenized(slices: list[TokenizedSlice], path: str) -> None:
    """One line per slice: `<slice_id>\\t<label>\\t<token1> <token2> ...`."""
    with open(path, "w", encoding="utf-8") as fh:
        for ts in slices:
            fh.write(f"{ts.slice_id}\t{ts.label}\t{' '.join(ts.tokens)}\n")


def load_tokenized(path: str) -> list[TokenizedSlice]:
    out: list[TokenizedSlice] = []
    seen: set[int] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}: line {lineno}: expected 3 tab-separated fields")
            try:
                sid = int(parts[0])
                label = int(parts[1])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: non-numeric id or label") from exc
            if label not in (0, 1):
                raise DataError(f"{path}: line {lineno}: label not in {{0,1}}")
            if sid in seen:
                raise DataError(f"{path}: line {lineno}: duplicate slice id {sid}")
            seen.add(sid)
            tokens = tuple(parts[2].split())
            if not tokens:
                raise DataError(f"{path}: line {lineno}: slice {sid} has no tokens")
            out.append(TokenizedSlice(slice_id=sid, tokens=tokens, label=label))
    return out
