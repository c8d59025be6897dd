import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicegcn.corpus import (
    Corpus,
    SliceRecord,
    corpus_stats,
    dedup_corpus,
    parse_gadget_file,
    split_corpus,
    write_gadget_file,
)
from slicegcn.errors import DataError

SEP = "-" * 33


def write(tmp_path, text):
    p = tmp_path / "corpus.txt"
    p.write_text(text, encoding="utf-8")
    return str(p)


def block(rid, origin, code, label):
    return "\n".join([f"{rid} {origin}", *code, str(label), SEP]) + "\n"


def test_parse_single_block(tmp_path):
    path = write(tmp_path, block(0, "a.c main 10", ["strcpy(buf,src);"], 1))
    c = parse_gadget_file(path)
    assert len(c) == 1
    rec = c.records[0]
    assert rec.id == 0
    assert rec.origin == "a.c main 10"
    assert rec.code_lines == ("strcpy(buf,src);",)
    assert rec.label == 1
    assert not c.train_ids and not c.test_ids


def test_parse_two_blocks(tmp_path):
    text = block(0, "a.c f 1", ["x = 1;"], 0) + block(1, "a.c g 2", ["y = 2;"], 1)
    c = parse_gadget_file(write(tmp_path, text))
    assert [r.id for r in c.records] == [0, 1]


def test_parse_label_out_of_range(tmp_path):
    text = "\n".join(["0 a.c main 10", "x = 1;", "2", SEP]) + "\n"
    with pytest.raises(DataError, match=r"label not in \{0,1\}"):
        parse_gadget_file(write(tmp_path, text))


def test_parse_bad_header(tmp_path):
    text = "\n".join(["x0 a.c", "code;", "0", SEP]) + "\n"
    with pytest.raises(DataError, match="line 1"):
        parse_gadget_file(write(tmp_path, text))


def test_parse_missing_separator(tmp_path):
    with pytest.raises(DataError, match="separator"):
        parse_gadget_file(write(tmp_path, "0 a.c\ncode;\n1\n"))


def test_parse_empty_body(tmp_path):
    text = "\n".join(["5 a.c", "0", SEP]) + "\n"
    with pytest.raises(DataError):
        parse_gadget_file(write(tmp_path, text))


def test_parse_ids_must_increase(tmp_path):
    text = block(1, "a", ["x;"], 0) + block(1, "b", ["y;"], 0)
    with pytest.raises(DataError, match="strictly increasing"):
        parse_gadget_file(write(tmp_path, text))


def test_code_line_may_look_like_label(tmp_path):
    # The label is the last line before the separator, so "0" can be code.
    text = "\n".join(["0 a.c", "0", "1", SEP]) + "\n"
    c = parse_gadget_file(write(tmp_path, text))
    assert c.records[0].code_lines == ("0",)
    assert c.records[0].label == 1


def test_round_trip(tmp_path):
    recs = [
        SliceRecord(0, "a.c f 1", ("char b[10];", "strcpy(b, s);"), 1, "FC"),
        SliceRecord(3, "", ("x = 0;",), 0, "FC"),
        SliceRecord(7, "weird origin  with  spaces", ("1", "0"), 0, "FC"),
    ]
    path = str(tmp_path / "rt.txt")
    write_gadget_file(Corpus(records=recs), path)
    back = parse_gadget_file(path, kind="FC")
    assert back.records == recs


code_line = st.text(
    alphabet=st.characters(min_codepoint=32, max_codepoint=126),
    min_size=1,
    max_size=40,
).filter(lambda s: s != SEP and s.strip())


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.text(alphabet="abcdef.c ", max_size=15),
                  st.lists(code_line, min_size=1, max_size=4),
                  st.integers(0, 1)),
        min_size=1,
        max_size=8,
    )
)
def test_round_trip_property(tmp_path_factory, blocks):
    recs = [
        SliceRecord(i, origin.strip(), tuple(code), label)
        for i, (origin, code, label) in enumerate(blocks)
    ]
    path = str(tmp_path_factory.mktemp("rt") / "c.txt")
    write_gadget_file(Corpus(records=recs), path)
    assert parse_gadget_file(path).records == recs


def make_corpus(n, labels=None):
    recs = [
        SliceRecord(i, f"f{i}.c", (f"line{i};",), labels[i] if labels else i % 2)
        for i in range(n)
    ]
    return Corpus(records=recs)


def test_split_80_20():
    c = split_corpus(make_corpus(10), 0.8, seed=7)
    assert len(c.train_ids) == 8
    assert len(c.test_ids) == 2
    c.validate_split()


def test_split_partition_property():
    for n in (1, 2, 5, 17, 100):
        for seed in (0, 1, 2):
            import warnings as w

            with w.catch_warnings():
                w.simplefilter("ignore")
                c = split_corpus(make_corpus(n), 0.8, seed=seed)
            assert c.train_ids | c.test_ids == set(range(n))
            assert not (c.train_ids & c.test_ids)


def test_split_degenerate_warns():
    with pytest.warns(UserWarning, match="empty test set"):
        c = split_corpus(make_corpus(1), 0.8, seed=0)
    assert len(c.train_ids) == 1 and not c.test_ids


def test_split_deterministic():
    a = split_corpus(make_corpus(20), 0.8, seed=42)
    b = split_corpus(make_corpus(20), 0.8, seed=42)
    assert a.train_ids == b.train_ids
    other = split_corpus(make_corpus(20), 0.8, seed=43)
    assert a.train_ids != other.train_ids  # overwhelmingly likely


def test_split_stratified_keeps_label_ratio():
    labels = [1] * 30 + [0] * 70
    c = split_corpus(make_corpus(100, labels), 0.8, seed=3, stratify=True)
    train_pos = sum(1 for r in c.records if r.id in c.train_ids and r.label == 1)
    assert train_pos == 24  # 0.8 * 30


def test_split_empty_corpus():
    with pytest.raises(DataError):
        split_corpus(Corpus(records=[]), 0.8, seed=0)


def test_stats_counting():
    c = make_corpus(3, labels=[1, 0, 0])
    s = corpus_stats(c)
    assert s["total"] == 3 and s["vulnerable"] == 1 and s["non_vulnerable"] == 2


def test_stats_empty():
    s = corpus_stats(Corpus(records=[]))
    assert s["total"] == 0 and s["vulnerable"] == 0 and s["non_vulnerable"] == 0


def test_stats_total_property():
    import random

    rng = random.Random(0)
    for _ in range(20):
        n = rng.randrange(1, 50)
        labels = [rng.randrange(2) for _ in range(n)]
        s = corpus_stats(make_corpus(n, labels))
        assert s["vulnerable"] + s["non_vulnerable"] == s["total"] == n
        assert s["vulnerable"] == sum(labels)


def test_dedup_keeps_first_and_warns_on_conflict():
    recs = [
        SliceRecord(0, "a", ("x;",), 0),
        SliceRecord(1, "b", ("x;",), 1),
        SliceRecord(2, "c", ("y;",), 1),
    ]
    keys = {0: ("x", ";"), 1: ("x", ";"), 2: ("y", ";")}
    with pytest.warns(UserWarning, match="disagree on label"):
        out = dedup_corpus(Corpus(records=recs), keys)
    assert [r.id for r in out.records] == [0, 2]
