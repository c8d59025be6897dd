"""Synthetic planted-signal corpora for desk-scale learning checks.

Two signal kinds:
  token   - every vulnerable slice contains a strcpy call, no safe slice does;
  cooccur - recv and memcpy appear together only in vulnerable slices; safe
            slices sometimes carry one of the two, never both.

Filler statements are drawn from the same distribution for both classes, so
after symbolization the label correlates only with the planted pattern.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .corpus import Corpus, SliceRecord
from .embed import EmbeddingTable
from .errors import DataError
from .lexer import lex_c_source

TOKEN_SIGNAL_LINE = "strcpy(dst, src);"
COOCCUR_LINES = ("recv(fd, buf, len, 0);", "memcpy(out, buf, len);")

# Small pools keep filler tokens frequent across slices, so their IDF (and
# with it their edge weight) stays low relative to the planted token's.
_VARS = ["a", "b", "c", "idx", "tmp", "val"]
_CALLS = ["printf", "fclose", "malloc", "free", "fopen", "strlen", "puts"]
_STRINGS = ['"ok"', '"path"', '"%d"']


def _filler_line(rng: random.Random) -> str:
    v = rng.choice(_VARS)
    w = rng.choice(_VARS)
    num = rng.randrange(0, 8)
    kind = rng.randrange(6)
    if kind == 0:
        return f"int {v} = {num};"
    if kind == 1:
        return f"{v} = {w} + {num};"
    if kind == 2:
        return f"{rng.choice(_CALLS)}({v});"
    if kind == 3:
        return f"if ({v} > {num})"
    if kind == 4:
        return f"{v} = {rng.choice(_CALLS)}({rng.choice(_STRINGS)});"
    return f"{v}++;"


def gen_synthetic(
    n: int, vuln_fraction: float, signal: str, seed: int
) -> Corpus:
    """Deterministic corpus of n slices with round(n*fraction) positives."""
    if n < 2:
        raise DataError("need at least 2 slices")
    if not 0.0 < vuln_fraction < 1.0:
        raise DataError(f"vulnerable fraction must be in (0,1), got {vuln_fraction}")
    if signal not in ("token", "cooccur"):
        raise DataError(f"unknown signal kind {signal!r}")
    rng = random.Random(seed)
    n_pos = int(math.floor(vuln_fraction * n + 0.5))
    labels = [1] * n_pos + [0] * (n - n_pos)
    rng.shuffle(labels)

    records = []
    for i, label in enumerate(labels):
        lines = [_filler_line(rng) for _ in range(rng.randrange(3, 9))]
        if signal == "token":
            if label == 1:
                lines.insert(rng.randrange(len(lines) + 1), TOKEN_SIGNAL_LINE)
        else:
            if label == 1:
                for planted in COOCCUR_LINES:
                    lines.insert(rng.randrange(len(lines) + 1), planted)
            elif rng.random() < 0.2:
                # A few safe slices carry one of the pair, so the label
                # tracks joint presence, not either word alone. The rate
                # keeps the pair's PPMI well above zero.
                lines.insert(
                    rng.randrange(len(lines) + 1), rng.choice(COOCCUR_LINES)
                )
        records.append(
            SliceRecord(
                id=i,
                origin=f"synthetic/{signal}.c gen {i}",
                code_lines=tuple(lines),
                label=label,
                kind="GADGET",
            )
        )
    corpus = Corpus(records=records)
    _self_check(corpus, signal)
    return corpus


def _planted_names(signal: str) -> tuple[str, ...]:
    return ("strcpy",) if signal == "token" else tuple(
        line.split("(")[0] for line in COOCCUR_LINES
    )


def _self_check(corpus: Corpus, signal: str) -> None:
    """Verify by lexical scan that the planted pattern marks exactly the
    positive slices."""
    names = _planted_names(signal)
    for rec in corpus.records:
        present = set()
        for line in rec.code_lines:
            for tok in lex_c_source(line):
                if tok.kind == "identifier" and tok.text in names:
                    present.add(tok.text)
        has_signal = present == set(names)
        if has_signal != (rec.label == 1):
            raise DataError(
                f"planted-signal self-check failed for record {rec.id}"
            )


def gen_noise_embeddings(ids: list[int], dim: int, seed: int) -> EmbeddingTable:
    """Label-independent Gaussian vectors, used by the graph-advantage
    contrast: the features alone carry no signal."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    vectors = {sid: rng.standard_normal(dim) / math.sqrt(dim) for sid in sorted(ids)}
    return EmbeddingTable(dim=dim, vectors=vectors)
