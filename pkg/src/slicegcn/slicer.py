"""Intra-procedural slicing around sensitive library/API calls.

Functions are recovered from the token stream (identifier '(' params ')' '{'
at top brace level), their bodies split into statements at ';' (outside
parens) and at braces, and slices are grown by syntactic def-use chasing:
identifiers left of an assignment or in a declarator count as definitions,
every other identifier as a use. No alias or flow-kill analysis is done;
reassignment keeps a variable tracked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataError
from .lexer import CToken, render_tokens

DEFAULT_SINKS = {
    "strcpy": "backward",
    "strcat": "backward",
    "memcpy": "backward",
    "sprintf": "backward",
    "gets": "backward",
    "recv": "forward",
    "read": "forward",
    "fread": "forward",
    "scanf": "forward",
}

ASSIGN_OPS = frozenset(
    ["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="]
)

# Identifiers commonly used as types; statements starting with these are
# treated as declarations even though they are not C keywords.
COMMON_TYPE_NAMES = frozenset(
    ["size_t", "ssize_t", "FILE", "int8_t", "int16_t", "int32_t", "int64_t",
     "uint8_t", "uint16_t", "uint32_t", "uint64_t", "wchar_t", "ptrdiff_t"]
)


@dataclass(frozen=True)
class Statement:
    line: int
    tokens: tuple[CToken, ...]

    def text(self) -> str:
        return render_tokens(self.tokens)


@dataclass
class FunctionSpan:
    name: str
    params: list[str]
    body_statements: list[Statement] = field(default_factory=list)

    def statement_at(self, line: int) -> Statement | None:
        """First statement whose token span covers the line."""
        for st in self.body_statements:
            if st.tokens and st.tokens[0].line <= line <= st.tokens[-1].line:
                return st
        return None


@dataclass(frozen=True)
class SinkCall:
    callee: str
    direction: str  # forward | backward
    args: tuple[str, ...]
    line: int


def parse_sink_config(path: str) -> dict[str, str]:
    """One `<callee> <forward|backward>` entry per line, '#' comments."""
    sinks: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2 or parts[1] not in ("forward", "backward"):
                raise DataError(f"{path}: line {lineno}: expected '<callee> <forward|backward>'")
            sinks[parts[0]] = parts[1]
    return sinks


def extract_functions(tokens: list[CToken]) -> list[FunctionSpan]:
    """Find function definitions at top brace level and split their bodies
    into statements."""
    functions: list[FunctionSpan] = []
    depth = 0
    i = 0
    n = len(tokens)
    while i < n:
        t = tokens[i]
        if t.text == "{":
            depth += 1
            i += 1
            continue
        if t.text == "}":
            depth -= 1
            i += 1
            continue
        if depth == 0 and t.kind == "identifier" and i + 1 < n and tokens[i + 1].text == "(":
            close = _match_paren(tokens, i + 1)
            if close is not None and close + 1 < n and tokens[close + 1].text == "{":
                body_end = _match_brace(tokens, close + 1)
                if body_end is not None:
                    params = _param_names(tokens[i + 2 : close])
                    body = tokens[close + 2 : body_end]
                    functions.append(
                        FunctionSpan(name=t.text, params=params,
                                     body_statements=_split_statements(body))
                    )
                    i = body_end + 1
                    continue
        i += 1
    return functions


def _match_paren(tokens, open_idx):
    depth = 0
    for j in range(open_idx, len(tokens)):
        if tokens[j].text == "(":
            depth += 1
        elif tokens[j].text == ")":
            depth -= 1
            if depth == 0:
                return j
    return None


def _match_brace(tokens, open_idx):
    depth = 0
    for j in range(open_idx, len(tokens)):
        if tokens[j].text == "{":
            depth += 1
        elif tokens[j].text == "}":
            depth -= 1
            if depth == 0:
                return j
    return None


def _param_names(tokens) -> list[str]:
    """Last bracket-free identifier of each comma-separated declaration."""
    names: list[str] = []
    segment: list[CToken] = []
    depth = 0
    for t in list(tokens) + [CToken("punctuation", ",", 0, 0)]:
        if t.text in "([":
            depth += 1
        elif t.text in ")]":
            depth -= 1
        if t.text == "," and depth == 0:
            cand = [s for s in segment if s.kind == "identifier" and s.text not in COMMON_TYPE_NAMES]
            if cand:
                names.append(cand[-1].text)
            segment = []
        else:
            if t.kind == "identifier" and depth == 0:
                segment.append(t)
    return names


def _split_statements(body: list[CToken]) -> list[Statement]:
    """Statements end at ';' outside parens; braces delimit without being
    kept, so control headers like `if (x)` become their own statements."""
    statements: list[Statement] = []
    current: list[CToken] = []
    paren_depth = 0

    def flush():
        if current:
            statements.append(Statement(line=current[0].line, tokens=tuple(current)))
            current.clear()

    for t in body:
        if t.text == "(":
            paren_depth += 1
        elif t.text == ")":
            paren_depth -= 1
        if t.text in ("{", "}"):
            flush()
            continue
        current.append(t)
        if t.text == ";" and paren_depth == 0:
            flush()
    flush()
    return statements


def find_sink_calls(tokens: list[CToken], sinks: dict[str, str]) -> list[SinkCall]:
    """Every `name (` occurrence with name in the sink config yields one call
    with the identifiers of its top-level comma-split arguments."""
    calls: list[SinkCall] = []
    for i, t in enumerate(tokens):
        if t.kind != "identifier" or t.text not in sinks:
            continue
        if i + 1 >= len(tokens) or tokens[i + 1].text != "(":
            continue
        close = _match_paren(tokens, i + 1)
        if close is None:
            continue
        args = _argument_identifiers(tokens[i + 2 : close])
        calls.append(
            SinkCall(callee=t.text, direction=sinks[t.text], args=tuple(args), line=t.line)
        )
    return calls


def _argument_identifiers(tokens) -> list[str]:
    """Variable-like identifiers inside the argument list, in order, deduped.
    Callee names of nested calls and keywords are skipped."""
    out: list[str] = []
    seen: set[str] = set()
    for j, t in enumerate(tokens):
        if t.kind != "identifier":
            continue
        if j + 1 < len(tokens) and tokens[j + 1].text == "(":
            continue
        if t.text in seen:
            continue
        seen.add(t.text)
        out.append(t.text)
    return out


def statement_defs_uses(st: Statement) -> tuple[set[str], set[str]]:
    """Syntactic definitions and uses of one statement.

    Defs: identifiers left of a top-level assignment operator (outside
    brackets), declared names in declarations, and ++/-- operands. Uses:
    every other identifier except called function names.
    """
    toks = st.tokens
    defs: set[str] = set()
    uses: set[str] = set()

    assign_idx = None
    depth = 0
    for j, t in enumerate(toks):
        if t.text in "([":
            depth += 1
        elif t.text in ")]":
            depth -= 1
        elif depth == 0 and t.text in ASSIGN_OPS:
            assign_idx = j
            break

    is_decl = bool(toks) and (
        toks[0].kind == "keyword" and toks[0].text not in ("return", "goto", "if",
                                                           "while", "for", "switch",
                                                           "do", "else", "case", "sizeof")
        or toks[0].text in COMMON_TYPE_NAMES
    )

    def classify(j: int, t: CToken, lhs: bool, bracket_depth: int):
        if t.kind != "identifier":
            return
        if j + 1 < len(toks) and toks[j + 1].text == "(":
            return  # called function name
        neighbor_incdec = (j > 0 and toks[j - 1].text in ("++", "--")) or (
            j + 1 < len(toks) and toks[j + 1].text in ("++", "--")
        )
        if neighbor_incdec:
            defs.add(t.text)
            uses.add(t.text)
            return
        if lhs and bracket_depth == 0 and t.text not in COMMON_TYPE_NAMES:
            defs.add(t.text)
        elif lhs and bracket_depth > 0:
            uses.add(t.text)
        else:
            uses.add(t.text)

    if assign_idx is not None:
        depth = 0
        for j in range(assign_idx):
            t = toks[j]
            if t.text in "([":
                depth += 1
            elif t.text in ")]":
                depth -= 1
            else:
                classify(j, t, lhs=True, bracket_depth=depth)
        for j in range(assign_idx + 1, len(toks)):
            classify(j, toks[j], lhs=False, bracket_depth=0)
    elif is_decl:
        # Declaration without initializer: declared names are the
        # bracket-free identifiers.
        depth = 0
        for j, t in enumerate(toks):
            if t.text in "([":
                depth += 1
            elif t.text in ")]":
                depth -= 1
            else:
                classify(j, t, lhs=True, bracket_depth=depth)
    else:
        for j, t in enumerate(toks):
            classify(j, t, lhs=False, bracket_depth=0)
    return defs, uses


def backward_slice(f: FunctionSpan, seed_vars: set[str], seed_line: int) -> list[Statement]:
    """Fixed point of upward def-use chasing from the seed statement.

    A statement above the seed joins the slice iff it defines a tracked
    variable; its used identifiers then join the working set.
    """
    seed = f.statement_at(seed_line)
    if seed is None:
        raise DataError(f"seed line {seed_line} not inside function {f.name}")
    working = set(seed_vars)
    above = [st for st in f.body_statements if st.line < seed.line]
    included: dict[int, Statement] = {seed_line: seed}
    changed = True
    while changed:
        changed = False
        for st in reversed(above):
            if st.line in included:
                continue
            defs, uses = statement_defs_uses(st)
            if defs & working:
                included[st.line] = st
                working |= uses
                changed = True
    return [st for st in sorted(included.values(), key=lambda s: s.line)]


def forward_slice(f: FunctionSpan, seed_vars: set[str], seed_line: int) -> list[Statement]:
    """Downward mirror: statements using or redefining a tracked variable are
    included, and their definitions join the working set."""
    seed = f.statement_at(seed_line)
    if seed is None:
        raise DataError(f"seed line {seed_line} not inside function {f.name}")
    working = set(seed_vars)
    below = [st for st in f.body_statements if st.line > seed.line]
    included: dict[int, Statement] = {seed_line: seed}
    changed = True
    while changed:
        changed = False
        for st in below:
            if st.line in included:
                continue
            defs, uses = statement_defs_uses(st)
            if (uses | defs) & working:
                included[st.line] = st
                working |= defs
                changed = True
    return [st for st in sorted(included.values(), key=lambda s: s.line)]


def assemble_gadget(slices: list[list[Statement]]) -> list[Statement]:
    """Union of statement lists, deduped by (line, text), sorted by line."""
    merged: dict[tuple[int, str], Statement] = {}
    for sl in slices:
        for st in sl:
            merged.setdefault((st.line, st.text()), st)
    if not merged:
        raise DataError("gadget assembly produced no statements")
    return sorted(merged.values(), key=lambda s: s.line)
