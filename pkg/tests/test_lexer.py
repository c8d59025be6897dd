import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicegcn.errors import LexError
from slicegcn.lexer import lex_c_source, render_tokens


def kinds_texts(src):
    return [(t.kind, t.text) for t in lex_c_source(src)]


def test_canonical_declaration():
    assert kinds_texts("int x = 1;") == [
        ("keyword", "int"),
        ("identifier", "x"),
        ("operator", "="),
        ("number", "1"),
        ("punctuation", ";"),
    ]


def test_maximal_munch_trace():
    # Hand trace of C11 maximal munch: -> and += are single tokens,
    # 0x1F is one hex constant.
    assert kinds_texts("a->b += 0x1F;") == [
        ("identifier", "a"),
        ("operator", "->"),
        ("identifier", "b"),
        ("operator", "+="),
        ("number", "0x1F"),
        ("punctuation", ";"),
    ]


def test_unterminated_string():
    with pytest.raises(LexError, match="line 1"):
        lex_c_source('"unterminated')


def test_unterminated_char():
    with pytest.raises(LexError, match="line 2"):
        lex_c_source("int x;\n'a")


def test_unknown_byte_rejected():
    with pytest.raises(LexError, match="starts no token"):
        lex_c_source("int @x;")


@pytest.mark.parametrize(
    "src,texts",
    [
        ("x<<=2", ["x", "<<=", "2"]),
        ("a+++b", ["a", "++", "+", "b"]),
        ("p-->q", ["p", "--", ">", "q"]),
        ("f(a,b)", ["f", "(", "a", ",", "b", ")"]),
        ("1.5e-3f", ["1.5e-3f"]),
        (".5 + x.y", [".5", "+", "x", ".", "y"]),
        ('L"wide" u8"x"', ['L"wide"', 'u8"x"']),
        ("'\\n'", ["'\\n'"]),
        ("std::vector", ["std", "::", "vector"]),
        ("0xABCp2", ["0xABCp2"]),
        ("a...b", ["a", "...", "b"]),
    ],
)
def test_munch_cases(src, texts):
    assert [t.text for t in lex_c_source(src)] == texts


def test_positions_1_based_and_increasing():
    tokens = lex_c_source("int x;\n  y = 2;")
    assert (tokens[0].line, tokens[0].col) == (1, 1)
    assert (tokens[3].line, tokens[3].col) == (2, 3)
    positions = [(t.line, t.col) for t in tokens]
    assert positions == sorted(positions)
    assert all(t.text for t in tokens)


def test_whitespace_dropped():
    assert [t.text for t in lex_c_source("  a \t b\n\nc ")] == ["a", "b", "c"]


def test_keyword_vs_identifier():
    toks = lex_c_source("while whilex _Bool Bool")
    assert [t.kind for t in toks] == ["keyword", "identifier", "keyword", "identifier"]


def test_string_with_escapes():
    toks = lex_c_source(r'printf("a\"b\\");')
    assert toks[2].kind == "string_lit"
    assert toks[2].text == r'"a\"b\\"'


C_SNIPPETS = [
    "for (i = 0; i < n; i++) { sum += a[i]; }",
    "if (x != NULL && *x >= 0x10) return x->field;",
    'char *s = "hi"; s[0] = \'H\';',
    "n = recv(fd, buf, len, 0);",
    "y = (a + b) * c / d % e;",
    "mask <<= 3; mask |= 0777;",
]


@pytest.mark.parametrize("src", C_SNIPPETS)
def test_round_trip_snippets(src):
    tokens = lex_c_source(src)
    relexed = lex_c_source(render_tokens(tokens))
    assert [(t.kind, t.text) for t in relexed] == [(t.kind, t.text) for t in tokens]


ident = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,6}", fullmatch=True)
number = st.from_regex(r"(0x[0-9A-Fa-f]{1,4}|[0-9]{1,5}(\.[0-9]{1,3})?)", fullmatch=True)
operator = st.sampled_from(["+", "-", "*", "/", "==", "<=", "->", "+=", "<<", "&&"])
punct = st.sampled_from(list("(){}[];,"))
token_text = st.one_of(ident, number, operator, punct)


@settings(max_examples=200, deadline=None)
@given(st.lists(token_text, min_size=1, max_size=30))
def test_round_trip_property(texts):
    # Joining arbitrary tokens with spaces and lexing gives back one token
    # per text; re-rendering and re-lexing is then a fixed point.
    tokens = lex_c_source(" ".join(texts))
    assert [t.text for t in tokens] == texts
    again = lex_c_source(render_tokens(tokens))
    assert [(t.kind, t.text) for t in again] == [(t.kind, t.text) for t in tokens]
