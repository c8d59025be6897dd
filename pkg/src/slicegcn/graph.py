"""Heterogeneous word-slice graph: vocabulary, TF-IDF and PPMI edge weights,
sparse symmetric adjacency and its symmetric normalization.

Node order is [word 0 .. V-1, slice V .. V+N-1]. Edge weights follow the
case rule: PPMI between distinct words, TF-IDF between a slice and a word
(mirrored so A stays symmetric), 1 on the diagonal, 0 otherwise. Both
logarithms are natural logs; zero weights are never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import DataError
from .normalize import TokenizedSlice


@dataclass
class Vocabulary:
    index: dict[str, int]  # word -> node index, first-occurrence order
    df: dict[str, int]  # word -> number of slices containing it
    n_slices: int

    def __len__(self) -> int:
        return len(self.index)

    @property
    def words(self) -> list[str]:
        return list(self.index)


@dataclass
class CooccurrenceStats:
    """Slice-level occurrence probabilities (or window-level in window mode)."""

    p_single: np.ndarray  # per word index
    joint_keys: np.ndarray  # encoded i*2^32+j pairs, i<j, sorted
    joint_counts: np.ndarray
    denominator: int  # number of slices (or windows)

    def p_pair(self, i: int, j: int) -> float:
        if i == j:
            raise DataError("p_pair needs two distinct words")
        a, b = (i, j) if i < j else (j, i)
        key = np.int64(a) * 2**32 + np.int64(b)
        pos = np.searchsorted(self.joint_keys, key)
        if pos < len(self.joint_keys) and self.joint_keys[pos] == key:
            return float(self.joint_counts[pos]) / self.denominator
        return 0.0


@dataclass
class TextGraph:
    n_words: int
    n_slices: int
    words: list[str]
    slice_ids: list[int]
    rows: np.ndarray  # COO triples of A, both triangles plus diagonal
    cols: np.ndarray
    vals: np.ndarray
    hat_vals: np.ndarray | None = None  # D^-1/2 A D^-1/2 over the same triples
    features: np.ndarray | None = None  # (V+N) x dim

    @property
    def n_nodes(self) -> int:
        return self.n_words + self.n_slices

    def slice_node(self, position: int) -> int:
        return self.n_words + position

    def to_dense(self, normalized: bool = False) -> np.ndarray:
        vals = self.hat_vals if normalized else self.vals
        if vals is None:
            raise DataError("adjacency not normalized yet")
        dense = np.zeros((self.n_nodes, self.n_nodes))
        dense[self.rows, self.cols] = vals
        return dense

    def matmul(self, dense: np.ndarray, normalized: bool = True) -> np.ndarray:
        vals = self.hat_vals if normalized else self.vals
        if vals is None:
            raise DataError("adjacency not normalized yet")
        return _accel.coo_matmul(self.rows, self.cols, vals, dense)


def build_vocab(corpus: list[TokenizedSlice], min_df: int = 1) -> Vocabulary:
    """Index words with document frequency >= min_df in first-occurrence order."""
    if not corpus:
        raise DataError("cannot build a vocabulary from an empty corpus")
    df: dict[str, int] = {}
    order: list[str] = []
    for ts in corpus:
        for w in dict.fromkeys(ts.tokens):  # unique, first-occurrence order
            if w not in df:
                df[w] = 0
                order.append(w)
            df[w] += 1
    kept = [w for w in order if df[w] >= min_df]
    if not kept:
        raise DataError(f"vocabulary is empty after min_df={min_df} filtering")
    return Vocabulary(
        index={w: i for i, w in enumerate(kept)},
        df={w: df[w] for w in kept},
        n_slices=len(corpus),
    )


def tf_idf(ts: TokenizedSlice, word: str, vocab: Vocabulary) -> float:
    """Raw term count times ln(N / df)."""
    if word not in vocab.index:
        raise DataError(f"word {word!r} not in vocabulary")
    tf = sum(1 for t in ts.tokens if t == word)
    if tf == 0:
        return 0.0
    return tf * math.log(vocab.n_slices / vocab.df[word])


def ppmi(i: int, j: int, stats: CooccurrenceStats) -> float:
    """max(ln(p(i,j) / (p(i) p(j))), 0); 0 when the pair never co-occurs."""
    if i == j:
        raise DataError("ppmi is defined for distinct words")
    pij = stats.p_pair(i, j)
    if pij == 0.0:
        return 0.0
    return max(math.log(pij / (float(stats.p_single[i]) * float(stats.p_single[j]))), 0.0)


def _slice_word_indices(ts: TokenizedSlice, vocab: Vocabulary) -> np.ndarray:
    idx = sorted({vocab.index[t] for t in ts.tokens if t in vocab.index})
    return np.asarray(idx, dtype=np.int64)


def cooccurrence_stats(
    corpus: list[TokenizedSlice], vocab: Vocabulary, window: int | None = None
) -> CooccurrenceStats:
    """Occurrence statistics per slice, or per sliding window of `window`
    tokens (step 1; a shorter slice is one window) when window is given."""
    units: list[np.ndarray] = []
    if window is None:
        units = [_slice_word_indices(ts, vocab) for ts in corpus]
    else:
        if window < 2:
            raise DataError("window must cover at least 2 tokens")
        for ts in corpus:
            toks = ts.tokens
            if len(toks) <= window:
                spans = [toks]
            else:
                spans = [toks[k : k + window] for k in range(len(toks) - window + 1)]
            for span in spans:
                idx = sorted({vocab.index[t] for t in span if t in vocab.index})
                units.append(np.asarray(idx, dtype=np.int64))
    denom = len(units)
    if denom == 0:
        raise DataError("no occurrence units")
    single = np.zeros(len(vocab), dtype=np.int64)
    for u in units:
        single[u] += 1
    starts = np.zeros(len(units) + 1, dtype=np.int64)
    for k, u in enumerate(units):
        starts[k + 1] = starts[k] + len(u)
    flat = np.concatenate(units) if units else np.empty(0, dtype=np.int64)
    keys = _accel.pair_keys(starts, flat.astype(np.int64))
    if len(keys):
        joint_keys, joint_counts = np.unique(keys, return_counts=True)
    else:
        joint_keys = np.empty(0, dtype=np.int64)
        joint_counts = np.empty(0, dtype=np.int64)
    return CooccurrenceStats(
        p_single=single.astype(np.float64) / denom,
        joint_keys=joint_keys,
        joint_counts=joint_counts,
        denominator=denom,
    )


def build_adjacency(
    corpus: list[TokenizedSlice],
    vocab: Vocabulary,
    stats: CooccurrenceStats,
) -> TextGraph:
    """Assemble the symmetric COO adjacency with unit self-loops."""
    V = len(vocab)
    N = len(corpus)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []

    # Word-word PPMI edges from the joint-count table.
    logp = {}
    for key, cnt in zip(stats.joint_keys.tolist(), stats.joint_counts.tolist()):
        i, j = key >> 32, key & 0xFFFFFFFF
        pij = cnt / stats.denominator
        w = math.log(pij / (float(stats.p_single[i]) * float(stats.p_single[j])))
        if w > 0.0:
            logp[(i, j)] = w
    for (i, j), w in logp.items():
        rows.extend((i, j))
        cols.extend((j, i))
        vals.extend((w, w))

    # Slice-word TF-IDF edges, mirrored.
    word_list = vocab.words
    idf = np.array([math.log(vocab.n_slices / vocab.df[w]) for w in word_list])
    for pos, ts in enumerate(corpus):
        snode = V + pos
        counts: dict[int, int] = {}
        for t in ts.tokens:
            wi = vocab.index.get(t)
            if wi is not None:
                counts[wi] = counts.get(wi, 0) + 1
        for wi in sorted(counts):
            w = counts[wi] * idf[wi]
            if w != 0.0:
                rows.extend((snode, wi))
                cols.extend((wi, snode))
                vals.extend((w, w))

    # Unit self-loops on every node.
    for node in range(V + N):
        rows.append(node)
        cols.append(node)
        vals.append(1.0)

    order = np.lexsort((np.asarray(cols), np.asarray(rows)))
    return TextGraph(
        n_words=V,
        n_slices=N,
        words=vocab.words,
        slice_ids=[ts.slice_id for ts in corpus],
        rows=np.asarray(rows, dtype=np.int64)[order],
        cols=np.asarray(cols, dtype=np.int64)[order],
        vals=np.asarray(vals, dtype=np.float64)[order],
    )


def normalize_adjacency(g: TextGraph) -> TextGraph:
    """Fill hat_vals with the symmetric normalization D^-1/2 A D^-1/2."""
    deg = np.zeros(g.n_nodes)
    np.add.at(deg, g.rows, g.vals)
    if np.any(deg <= 0):
        raise DataError("adjacency has a non-positive row sum")
    inv_sqrt = 1.0 / np.sqrt(deg)
    # Multiply the two scale factors first; their product is identical for
    # (i,j) and (j,i), keeping A_hat bitwise symmetric.
    g.hat_vals = g.vals * (inv_sqrt[g.rows] * inv_sqrt[g.cols])
    return g


def write_graph(g: TextGraph, path: str, dim: int) -> None:
    """Text dump: header, one `<i> <j> <weight>` line per stored entry of A
    (17 significant digits), then the node-index legend."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"nodes={g.n_nodes} words={g.n_words} slices={g.n_slices} dim={dim}\n")
        for r, c, v in zip(g.rows.tolist(), g.cols.tolist(), g.vals.tolist()):
            fh.write(f"{r} {c} {v:.17g}\n")
        for w, idx in zip(g.words, range(g.n_words)):
            fh.write(f"word {idx} {w}\n")
        for pos, sid in enumerate(g.slice_ids):
            fh.write(f"slice {g.n_words + pos} {sid}\n")


def load_graph(path: str) -> tuple[TextGraph, int]:
    """Parse a graph dump; returns the graph (unnormalized) and the header dim."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        fields = dict(kv.split("=", 1) for kv in header.split())
        try:
            n_nodes = int(fields["nodes"])
            n_words = int(fields["words"])
            n_slices = int(fields["slices"])
            dim = int(fields["dim"])
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: malformed graph header {header!r}") from exc
        if n_nodes != n_words + n_slices:
            raise DataError(f"{path}: node count mismatch in header")
        rows: list[int] = []
        cols: list[int] = []
        vals: list[float] = []
        words: dict[int, str] = {}
        slice_ids: dict[int, int] = {}
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if parts[0] == "word":
                words[int(parts[1])] = " ".join(parts[2:])
            elif parts[0] == "slice":
                slice_ids[int(parts[1])] = int(parts[2])
            else:
                if len(parts) != 3:
                    raise DataError(f"{path}: line {lineno}: malformed entry")
                rows.append(int(parts[0]))
                cols.append(int(parts[1]))
                vals.append(float(parts[2]))
        if len(words) != n_words or len(slice_ids) != n_slices:
            raise DataError(f"{path}: legend does not cover all nodes")
    g = TextGraph(
        n_words=n_words,
        n_slices=n_slices,
        words=[words[i] for i in range(n_words)],
        slice_ids=[slice_ids[n_words + p] for p in range(n_slices)],
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        vals=np.asarray(vals, dtype=np.float64),
    )
    return g, dim
