"""Node features: external embeddings for slice nodes, deterministic seeded
vectors for word nodes, and the embedding interchange file.

Embedding file grammar (UTF-8 text):

    dim=<d>
    <slice_id>\t<f1> <f2> ... <fd>
    ...

Lines starting with '#' are comments and are ignored, so producers may
append provenance notes.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .graph import TextGraph, Vocabulary
from .normalize import TokenizedSlice


@dataclass
class EmbeddingTable:
    dim: int
    vectors: dict[int, np.ndarray]

    def __contains__(self, sid: int) -> bool:
        return sid in self.vectors


def load_embeddings(path: str) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("dim="):
            raise DataError(f"{path}: first line must be 'dim=<d>', got {header!r}")
        try:
            dim = int(header[4:])
        except ValueError as exc:
            raise DataError(f"{path}: bad dim value in {header!r}") from exc
        if dim < 1:
            raise DataError(f"{path}: dim must be positive")
        vectors: dict[int, np.ndarray] = {}
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}: line {lineno}: expected '<id>\\t<floats>'")
            try:
                sid = int(parts[0])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: non-integer slice id") from exc
            if sid in vectors:
                raise DataError(f"{path}: line {lineno}: duplicate slice id {sid}")
            fields = parts[1].split()
            if len(fields) != dim:
                raise DataError(f"row {sid}: expected {dim} values, got {len(fields)}")
            try:
                vec = np.array([float(x) for x in fields])
            except ValueError as exc:
                raise DataError(f"row {sid}: non-numeric field") from exc
            vectors[sid] = vec
    return EmbeddingTable(dim=dim, vectors=vectors)


def write_embeddings(table: EmbeddingTable, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={table.dim}\n")
        for sid in sorted(table.vectors):
            vals = " ".join(f"{x:.17g}" for x in table.vectors[sid])
            fh.write(f"{sid}\t{vals}\n")


def _word_seed(word: str, seed: int) -> int:
    digest = hashlib.sha256(f"{seed}:{word}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def word_vector(word: str, dim: int, seed: int) -> np.ndarray:
    """Seeded Gaussian vector scaled by 1/sqrt(dim); depends only on the
    word text and the seed, never on vocabulary order."""
    rng = np.random.default_rng(_word_seed(word, seed))
    return rng.standard_normal(dim) / math.sqrt(dim)


def word_node_features(vocab: Vocabulary, dim: int, seed: int) -> np.ndarray:
    if dim < 1:
        raise DataError("feature dim must be positive")
    out = np.empty((len(vocab), dim))
    for w, idx in vocab.index.items():
        out[idx] = word_vector(w, dim, seed)
    return out


def assemble_feature_matrix(
    g: TextGraph,
    word_features: np.ndarray,
    slice_embeddings: EmbeddingTable | None,
    corpus: list[TokenizedSlice] | None = None,
    fallback_mean_words: bool = False,
) -> TextGraph:
    """Stack word-node features and slice-node embeddings in node order.

    Without an embedding table (or for ids missing from it), fallback mode
    averages the word vectors of the slice's distinct in-vocabulary words;
    otherwise a missing slice id is an error naming the id.
    """
    if word_features.shape[0] != g.n_words:
        raise DataError("word feature row count does not match word nodes")
    dim = word_features.shape[1]
    if slice_embeddings is not None and slice_embeddings.dim != dim:
        raise DataError(
            f"embedding dim {slice_embeddings.dim} != word feature dim {dim}"
        )
    X = np.zeros((g.n_nodes, dim))
    X[: g.n_words] = word_features
    by_id = {ts.slice_id: ts for ts in corpus} if corpus is not None else {}
    word_row = {w: i for i, w in enumerate(g.words)}
    for pos, sid in enumerate(g.slice_ids):
        node = g.n_words + pos
        if slice_embeddings is not None and sid in slice_embeddings:
            X[node] = slice_embeddings.vectors[sid]
        elif fallback_mean_words:
            ts = by_id.get(sid)
            if ts is None:
                raise DataError(f"slice {sid}: fallback mode needs the tokenized corpus")
            rows = sorted({word_row[t] for t in ts.tokens if t in word_row})
            if rows:
                X[node] = word_features[rows].mean(axis=0)
        else:
            raise DataError(f"no embedding for slice id {sid}")
    g.features = X
    return g
