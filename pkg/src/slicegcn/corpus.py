"""Labeled slice corpora: plain-text block format, train/test splits, stats.

On-disk format (UTF-8 text), one block per slice:

    <id> <origin...>          header: decimal id, rest of line is opaque text
    <code line 1>
    ...                       at least one code line
    <code line k>
    <0|1>                     label
    ---------------------------------   exactly 33 dashes

Within a block the label is always the last line before the separator, so
code lines may themselves look like "0" or "1" without ambiguity.
"""

from __future__ import annotations

import math
import random
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field

from .errors import DataError

SEPARATOR = "-" * 33

KINDS = ("FC", "AU", "PU", "AE", "GADGET")

_HEADER_RE = re.compile(r"(\d+)(?: (.*))?$")


@dataclass(frozen=True)
class SliceRecord:
    """One labeled code slice, the unit of classification."""

    id: int
    origin: str
    code_lines: tuple[str, ...]
    label: int
    kind: str = "GADGET"

    def __post_init__(self):
        if self.id < 0:
            raise DataError(f"record id must be non-negative, got {self.id}")
        if not self.code_lines:
            raise DataError(f"record {self.id}: code_lines is empty")
        if self.label not in (0, 1):
            raise DataError(f"record {self.id}: label not in {{0,1}}")
        if self.kind not in KINDS:
            raise DataError(f"record {self.id}: unknown kind {self.kind!r}")


@dataclass
class Corpus:
    """An ordered collection of slice records plus an optional split.

    train_ids/test_ids are both empty until split_corpus assigns them; once
    assigned they partition the full id set.
    """

    records: list[SliceRecord]
    train_ids: set[int] = field(default_factory=set)
    test_ids: set[int] = field(default_factory=set)

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> list[int]:
        return [r.id for r in self.records]

    def by_id(self, rid: int) -> SliceRecord:
        for r in self.records:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def is_split(self) -> bool:
        return bool(self.train_ids or self.test_ids)

    def validate_split(self) -> None:
        all_ids = set(self.ids())
        if self.train_ids & self.test_ids:
            raise DataError("train_ids and test_ids overlap")
        if self.train_ids | self.test_ids != all_ids:
            raise DataError("split does not cover every record id")


def parse_gadget_file(path: str, kind: str = "GADGET") -> Corpus:
    """Parse a gadget corpus file into a Corpus with no split assigned.

    Raises DataError with a line number for malformed headers, labels
    outside {0,1}, a missing separator, or an empty code body.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    # A trailing newline after the final separator yields one empty element.
    if lines and lines[-1] == "":
        lines.pop()

    records: list[SliceRecord] = []
    block: list[tuple[int, str]] = []  # (1-based line number, text)
    prev_id = -1
    for lineno, text in enumerate(lines, start=1):
        if text == SEPARATOR:
            records.append(_parse_block(block, prev_id, kind))
            prev_id = records[-1].id
            block = []
        else:
            block.append((lineno, text))
    if any(text.strip() for _, text in block):
        raise DataError(
            f"{path}: line {block[0][0]}: block not terminated by separator"
        )
    return Corpus(records=records)


def _parse_block(block: list[tuple[int, str]], prev_id: int, kind: str) -> SliceRecord:
    while block and not block[0][1].strip():  # tolerate blank lines between blocks
        block = block[1:]
    if len(block) < 3:
        lineno = block[0][0] if block else 0
        raise DataError(f"line {lineno}: block needs header, code and label lines")
    header_no, header = block[0]
    m = _HEADER_RE.fullmatch(header)
    if m is None:
        raise DataError(f"line {header_no}: malformed header {header!r}")
    rid = int(m.group(1))
    origin = m.group(2) or ""
    if rid <= prev_id:
        raise DataError(
            f"line {header_no}: id {rid} not strictly increasing (previous {prev_id})"
        )
    label_no, label_text = block[-1]
    if label_text not in ("0", "1"):
        raise DataError(f"line {label_no}: label not in {{0,1}}: {label_text!r}")
    code = tuple(text for _, text in block[1:-1])
    if not code:
        raise DataError(f"line {header_no}: record {rid} has empty code body")
    return SliceRecord(id=rid, origin=origin, code_lines=code, label=int(label_text), kind=kind)


def write_gadget_file(corpus: Corpus, path: str) -> None:
    """Write records in the block format; parse_gadget_file round-trips it."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in corpus.records:
            header = f"{r.id} {r.origin}" if r.origin else str(r.id)
            fh.write(header + "\n")
            for line in r.code_lines:
                fh.write(line + "\n")
            fh.write(f"{r.label}\n{SEPARATOR}\n")


def split_ids(
    ids: list[int],
    train_fraction: float,
    seed: int,
    labels: dict[int, int] | None = None,
    stratify: bool = False,
) -> tuple[set[int], set[int]]:
    """Deterministic shuffle-and-cut split of an id list.

    The train side gets floor(train_fraction*n + 0.5) ids (round half up).
    With stratify=True the cut is applied per label group instead.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train fraction must be in (0,1), got {train_fraction}")
    if not ids:
        raise DataError("cannot split an empty corpus")
    rng = random.Random(seed)
    if stratify:
        if labels is None:
            raise DataError("stratified split needs labels")
        train: set[int] = set()
        for lab in (0, 1):
            group = [i for i in ids if labels[i] == lab]
            rng.shuffle(group)
            k = int(math.floor(train_fraction * len(group) + 0.5))
            train.update(group[:k])
    else:
        shuffled = list(ids)
        rng.shuffle(shuffled)
        k = int(math.floor(train_fraction * len(shuffled) + 0.5))
        train = set(shuffled[:k])
    test = set(ids) - train
    if not test:
        warnings.warn("split produced an empty test set", stacklevel=2)
    if not train:
        warnings.warn("split produced an empty train set", stacklevel=2)
    return train, test


def split_corpus(
    c: Corpus, train_fraction: float, seed: int, stratify: bool = False
) -> Corpus:
    """Return a new Corpus with train_ids/test_ids assigned."""
    labels = {r.id: r.label for r in c.records}
    train, test = split_ids(c.ids(), train_fraction, seed, labels=labels, stratify=stratify)
    out = Corpus(records=list(c.records), train_ids=train, test_ids=test)
    out.validate_split()
    return out


def corpus_stats(c: Corpus) -> dict:
    """Counts per label and per kind; vulnerable + non-vulnerable = total."""
    vuln = sum(1 for r in c.records if r.label == 1)
    per_kind = Counter(r.kind for r in c.records)
    return {
        "total": len(c.records),
        "vulnerable": vuln,
        "non_vulnerable": len(c.records) - vuln,
        "per_kind": dict(sorted(per_kind.items())),
    }


def dedup_corpus(c: Corpus, keys: dict[int, tuple[str, ...]]) -> Corpus:
    """Drop records whose key (e.g. token sequence) repeats an earlier one.

    Label conflicts between duplicates are reported as warnings rather than
    resolved; the first occurrence wins.
    """
    seen: dict[tuple[str, ...], int] = {}
    kept: list[SliceRecord] = []
    for r in c.records:
        key = keys[r.id]
        if key in seen:
            first = seen[key]
            if c.by_id(first).label != r.label:
                warnings.warn(
                    f"records {first} and {r.id} share a symbolic form but disagree on label",
                    stacklevel=2,
                )
            continue
        seen[key] = r.id
        kept.append(r)
    return Corpus(records=kept)
