"""Batch inference over tokenized slices.

Input is the tokenized-corpus interchange file (one line per slice:
`<slice_id>\\t<label>\\t<tokens...>`); output is the embedding file the
classifier consumes (`dim=<d>` header, `<slice_id>\\t<floats>` rows, a
trailing `#` comment recording pooling mode and model for provenance).

The per-slice vector is either the classifier-token summary (first token
position, the default) or the attention-masked mean over all positions.
Slices longer than the max sequence length are truncated; the count of
truncated slices is warned about and recorded in the trailing comment.
"""

from __future__ import annotations

import os
import sys
import tempfile
from dataclasses import dataclass

import torch

POOL_MODES = ("classifier_token", "mean")


class ExportError(Exception):
    pass


@dataclass
class ExportJob:
    input_path: str
    output_path: str
    model: str
    pool: str = "classifier_token"
    max_len: int = 512
    batch_size: int = 16

    def __post_init__(self):
        if self.pool not in POOL_MODES:
            raise ExportError(f"pool must be one of {POOL_MODES}, got {self.pool!r}")
        if self.max_len < 2:
            raise ExportError("max sequence length must be at least 2")


def read_tokenized_corpus(path: str) -> list[tuple[int, str]]:
    """(slice_id, space-joined token text) pairs; duplicate ids are an error."""
    out: list[tuple[int, str]] = []
    seen: set[int] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ExportError(f"{path}: line {lineno}: expected 3 tab-separated fields")
            try:
                sid = int(parts[0])
            except ValueError as exc:
                raise ExportError(f"{path}: line {lineno}: non-integer slice id") from exc
            if sid in seen:
                raise ExportError(f"{path}: line {lineno}: duplicate slice id {sid}")
            seen.add(sid)
            out.append((sid, parts[2]))
    if not out:
        raise ExportError(f"{path}: no slices found")
    return out


def load_model(name_or_path: str):
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        model = AutoModel.from_pretrained(name_or_path)
    except Exception as exc:
        raise ExportError(f"cannot load model {name_or_path!r}: {exc}") from exc
    model.eval()
    return tokenizer, model


def export_embeddings(job: ExportJob) -> int:
    """Run the model over every slice and write the embedding file
    atomically. Returns the number of truncated slices."""
    slices = read_tokenized_corpus(job.input_path)
    tokenizer, model = load_model(job.model)
    hidden = model.config.hidden_size

    texts = [text for _, text in slices]
    truncated = 0
    for text in texts:
        ids = tokenizer(text, truncation=False)["input_ids"]
        if len(ids) > job.max_len:
            truncated += 1
    if truncated:
        print(
            f"warning: {truncated} slice(s) longer than {job.max_len} tokens were truncated",
            file=sys.stderr,
        )

    vectors: list[torch.Tensor] = []
    with torch.no_grad():
        for lo in range(0, len(texts), job.batch_size):
            batch = texts[lo : lo + job.batch_size]
            enc = tokenizer(
                batch,
                padding=True,
                truncation=True,
                max_length=job.max_len,
                return_tensors="pt",
            )
            out = model(**enc)
            states = out.last_hidden_state
            if job.pool == "classifier_token":
                pooled = states[:, 0, :]
            else:
                mask = enc["attention_mask"].unsqueeze(-1).to(states.dtype)
                pooled = (states * mask).sum(dim=1) / mask.sum(dim=1)
            vectors.append(pooled.to(torch.float64))
    stacked = torch.cat(vectors, dim=0)
    if not torch.isfinite(stacked).all():
        raise ExportError("model produced non-finite embedding values")

    out_dir = os.path.dirname(os.path.abspath(job.output_path)) or "."
    fd, tmp_path = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(f"dim={hidden}\n")
            for (sid, _), vec in zip(slices, stacked):
                vals = " ".join(f"{v:.8g}" for v in vec.tolist())
                fh.write(f"{sid}\t{vals}\n")
            fh.write(
                f"# pool={job.pool} model={job.model} max_len={job.max_len} "
                f"truncated={truncated}\n"
            )
        os.replace(tmp_path, job.output_path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    return truncated
