"""Command-line front end.

Subcommands: extract, normalize, build-graph, train, eval, predict,
pipeline, gen-synthetic. Every run prints its full flag echo to stdout so
runs are self-describing; stage timings go to stderr and never into output
files, keeping file outputs byte-reproducible for a fixed seed.

Exit codes: 0 success, 1 usage error, 2 data/contract error, 3 numeric
divergence.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import embed as embed_mod
from . import gcn as gcn_mod
from . import graph as graph_mod
from . import metrics as metrics_mod
from . import normalize as norm_mod
from . import slicer as slicer_mod
from . import synth as synth_mod
from .errors import DataError, DivergenceError, SliceGcnError
from .lexer import lex_c_source


class UsageError(SliceGcnError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


SOURCE_SUFFIXES = (".c", ".cc", ".cpp", ".h", ".hpp")


def _echo(cmd: str, args: argparse.Namespace) -> list[str]:
    lines = [f"# run={cmd}"]
    for key in sorted(vars(args)):
        if key == "func":
            continue
        lines.append(f"# {key}={getattr(args, key)}")
    return lines


class _Timer:
    def __init__(self):
        self.t0 = time.perf_counter()

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        print(f"[{name}] {now - self.t0:.2f}s", file=sys.stderr)
        self.t0 = now


# --------------------------------------------------------------------------
# extract

def _load_label_map(path: str | None) -> dict[str, int]:
    if path is None:
        return {}
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.rsplit(None, 1)
            if len(parts) != 2 or parts[1] not in ("0", "1"):
                raise DataError(f"{path}: line {lineno}: expected '<file> <0|1>'")
            out[parts[0]] = int(parts[1])
    return out


def cmd_extract(args) -> int:
    timer = _Timer()
    src = Path(args.src)
    if not src.is_dir():
        raise DataError(f"source directory not found: {src}")
    files = sorted(
        p for p in src.rglob("*") if p.is_file() and p.suffix in SOURCE_SUFFIXES
    )
    if not files:
        raise DataError(f"no C/C++ sources under {src}")
    sinks = (
        slicer_mod.parse_sink_config(args.sinks)
        if args.sinks
        else dict(slicer_mod.DEFAULT_SINKS)
    )
    label_map = _load_label_map(args.label_map)

    records: list[corpus_mod.SliceRecord] = []
    user_funcs: set[str] = set()
    next_id = 0
    for path in files:
        rel = path.relative_to(src).as_posix()
        text = norm_mod.strip_comments_nonascii(
            path.read_text(encoding="utf-8", errors="replace")
        )
        records_before = len(records)
        tokens = lex_c_source(text)
        functions = slicer_mod.extract_functions(tokens)
        user_funcs.update(f.name for f in functions)
        label = label_map.get(rel, 0)
        for fn in functions:
            body_tokens = [t for st in fn.body_statements for t in st.tokens]
            for call in slicer_mod.find_sink_calls(body_tokens, sinks):
                if call.direction == "backward":
                    sl = slicer_mod.backward_slice(fn, set(call.args), call.line)
                else:
                    # Variables assigned by the call statement are affected
                    # by its arguments, so they seed the forward chase too.
                    seed_vars = set(call.args)
                    seed_stmt = fn.statement_at(call.line)
                    if seed_stmt is not None:
                        defs, _ = slicer_mod.statement_defs_uses(seed_stmt)
                        seed_vars |= defs
                    sl = slicer_mod.forward_slice(fn, seed_vars, call.line)
                statements = slicer_mod.assemble_gadget([sl])
                records.append(
                    corpus_mod.SliceRecord(
                        id=next_id,
                        origin=f"{rel} {fn.name} {call.line}",
                        code_lines=tuple(st.text() for st in statements),
                        label=label,
                        kind=args.kind,
                    )
                )
                next_id += 1
        if len(records) == records_before:
            print(f"note: no gadgets in {rel}", file=sys.stderr)
    out = corpus_mod.Corpus(records=records)
    corpus_mod.write_gadget_file(out, args.out)
    if args.funcs_out:
        with open(args.funcs_out, "w", encoding="utf-8") as fh:
            for name in sorted(user_funcs):
                fh.write(name + "\n")
    stats = corpus_mod.corpus_stats(out)
    print(f"extracted {stats['total']} gadgets ({stats['vulnerable']} vulnerable)")
    timer.stage("extract")
    return 0


# --------------------------------------------------------------------------
# normalize

def _read_user_funcs(path: str | None) -> frozenset[str]:
    if path is None:
        return frozenset()
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def cmd_normalize(args) -> int:
    timer = _Timer()
    c = corpus_mod.parse_gadget_file(args.corpus, kind=args.kind)
    user_funcs = _read_user_funcs(args.user_funcs)
    tokenized = norm_mod.normalize_corpus(c, user_funcs=user_funcs)
    if args.dedup:
        keys = {ts.slice_id: ts.tokens for ts in tokenized}
        c = corpus_mod.dedup_corpus(c, keys)
        kept = {r.id for r in c.records}
        tokenized = [ts for ts in tokenized if ts.slice_id in kept]
    norm_mod.write_tokenized(tokenized, args.out)
    print(f"tokenized {len(tokenized)} slices")
    timer.stage("normalize")
    return 0


# --------------------------------------------------------------------------
# build-graph

def cmd_build_graph(args) -> int:
    timer = _Timer()
    tokenized = norm_mod.load_tokenized(args.tokens)
    vocab = graph_mod.build_vocab(tokenized, min_df=args.min_df)
    stats = graph_mod.cooccurrence_stats(tokenized, vocab, window=args.window)
    g = graph_mod.build_adjacency(tokenized, vocab, stats)
    graph_mod.write_graph(g, args.out, dim=args.dim)
    print(
        f"graph: {g.n_words} words + {g.n_slices} slices, "
        f"{len(g.vals)} stored entries"
    )
    timer.stage("build-graph")
    return 0


# --------------------------------------------------------------------------
# shared train/eval plumbing

def _labels_in_graph_order(g, tokenized) -> np.ndarray:
    by_id = {ts.slice_id: ts.label for ts in tokenized}
    try:
        return np.array([by_id[sid] for sid in g.slice_ids], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"slice id {exc.args[0]} in graph but not in tokenized corpus")


def _split_masks(g, tokenized, args) -> tuple[np.ndarray, np.ndarray]:
    labels = {ts.slice_id: ts.label for ts in tokenized}
    train_ids, _ = corpus_mod.split_ids(
        list(g.slice_ids), args.train_frac, args.seed,
        labels=labels, stratify=args.stratify,
    )
    train_mask = np.array([sid in train_ids for sid in g.slice_ids])
    return train_mask, ~train_mask


def _assemble_features(g, dim, tokenized, args) -> None:
    table = None
    if args.embeddings:
        table = embed_mod.load_embeddings(args.embeddings)
        if table.dim != dim:
            raise DataError(
                f"embedding dim {table.dim} does not match graph dim {dim}"
            )
    elif not args.fallback_mean_words:
        raise DataError("need --embeddings or --fallback-mean-words")
    vocab_like = graph_mod.Vocabulary(
        index={w: i for i, w in enumerate(g.words)}, df={}, n_slices=g.n_slices
    )
    words = embed_mod.word_node_features(vocab_like, dim, args.feature_seed)
    embed_mod.assemble_feature_matrix(
        g, words, table, corpus=tokenized,
        fallback_mean_words=args.fallback_mean_words,
    )


def _train_config(args) -> gcn_mod.TrainConfig:
    return gcn_mod.TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        dropout_p=args.dropout,
        seed=args.seed,
        single_dropout=args.single_dropout,
    )


def cmd_train(args) -> int:
    timer = _Timer()
    g, dim = graph_mod.load_graph(args.graph)
    tokenized = norm_mod.load_tokenized(args.tokens)
    _assemble_features(g, dim, tokenized, args)
    graph_mod.normalize_adjacency(g)
    timer.stage("features")
    labels = _labels_in_graph_order(g, tokenized)
    train_mask, _ = _split_masks(g, tokenized, args)
    config = _train_config(args)
    params, history = gcn_mod.train(g, config, labels, train_mask)
    gcn_mod.save_checkpoint(args.checkpoint_out, params, config, history)
    print(f"trained {config.epochs} epochs, final train loss {history[-1]:.6f}")
    timer.stage("train")
    return 0


def _report_for(g, params, labels, mask, kinds=None):
    preds = gcn_mod.predict(g, params, mask)
    truth = labels[preds.positions]
    report = metrics_mod.metrics(
        metrics_mod.confusion(preds.labels.tolist(), truth.tolist())
    )
    if kinds:
        for kind in sorted(set(kinds.values())):
            rows = [
                k for k, pos in enumerate(preds.positions)
                if kinds.get(g.slice_ids[pos]) == kind
            ]
            if rows:
                report.per_kind[kind] = metrics_mod.metrics(
                    metrics_mod.confusion(
                        preds.labels[rows].tolist(), truth[rows].tolist()
                    )
                )
    return report, preds


def _write_report(path: str, text: str, echo: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(echo) + "\n" + text)


def cmd_eval(args) -> int:
    timer = _Timer()
    g, dim = graph_mod.load_graph(args.graph)
    tokenized = norm_mod.load_tokenized(args.tokens)
    _assemble_features(g, dim, tokenized, args)
    graph_mod.normalize_adjacency(g)
    params, _, _ = gcn_mod.load_checkpoint(args.checkpoint)
    labels = _labels_in_graph_order(g, tokenized)
    train_mask, test_mask = _split_masks(g, tokenized, args)
    kinds = None
    if args.corpus:
        c = corpus_mod.parse_gadget_file(args.corpus)
        kinds = {r.id: r.kind for r in c.records}
    report, _ = _report_for(g, params, labels, test_mask, kinds)
    text = metrics_mod.render_report(report, name="gcn")
    if args.baseline:
        if g.features is None:
            raise DataError("baseline needs assembled features")
        slice_feats = g.features[g.n_words :]
        base_report, _ = gcn_mod.baseline_linear(
            slice_feats, labels, train_mask, test_mask, _train_config(args)
        )
        text += metrics_mod.render_report(base_report, name="baseline")
    _write_report(args.report_out, text, _echo("eval", args))
    print(text, end="")
    timer.stage("eval")
    return 0


def cmd_predict(args) -> int:
    timer = _Timer()
    g, dim = graph_mod.load_graph(args.graph)
    tokenized = norm_mod.load_tokenized(args.tokens)
    _assemble_features(g, dim, tokenized, args)
    graph_mod.normalize_adjacency(g)
    params, _, _ = gcn_mod.load_checkpoint(args.checkpoint)
    if args.all:
        mask = np.ones(g.n_slices, dtype=bool)
    else:
        _, mask = _split_masks(g, tokenized, args)
    preds = gcn_mod.predict(g, params, mask)
    with open(args.out, "w", encoding="utf-8") as fh:
        for row, pos in enumerate(preds.positions):
            sid = g.slice_ids[pos]
            p = preds.probs[row]
            fh.write(f"{sid}\t{p[0]:.17g} {p[1]:.17g}\t{preds.labels[row]}\n")
    print(f"wrote predictions for {len(preds.positions)} slices")
    timer.stage("predict")
    return 0


# --------------------------------------------------------------------------
# pipeline

def cmd_pipeline(args) -> int:
    timer = _Timer()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        c = corpus_mod.parse_gadget_file(args.corpus, kind=args.kind)
    except DataError as exc:
        raise DataError(f"[corpus] {exc}") from exc

    try:
        user_funcs = _read_user_funcs(args.user_funcs)
        tokenized = norm_mod.normalize_corpus(c, user_funcs=user_funcs)
        if args.dedup:
            keys = {ts.slice_id: ts.tokens for ts in tokenized}
            c = corpus_mod.dedup_corpus(c, keys)
            kept = {r.id for r in c.records}
            tokenized = [ts for ts in tokenized if ts.slice_id in kept]
        norm_mod.write_tokenized(tokenized, str(outdir / "tokens.tsv"))
    except DataError as exc:
        raise DataError(f"[normalize] {exc}") from exc
    timer.stage("normalize")

    try:
        dim = args.dim
        if args.embeddings:
            dim = embed_mod.load_embeddings(args.embeddings).dim
        vocab = graph_mod.build_vocab(tokenized, min_df=args.min_df)
        stats = graph_mod.cooccurrence_stats(tokenized, vocab, window=args.window)
        g = graph_mod.build_adjacency(tokenized, vocab, stats)
        graph_mod.write_graph(g, str(outdir / "graph.txt"), dim=dim)
    except DataError as exc:
        raise DataError(f"[build-graph] {exc}") from exc
    timer.stage("build-graph")

    try:
        _assemble_features(g, dim, tokenized, args)
        graph_mod.normalize_adjacency(g)
        labels = _labels_in_graph_order(g, tokenized)
        train_mask, test_mask = _split_masks(g, tokenized, args)
        config = _train_config(args)
        params, history = gcn_mod.train(g, config, labels, train_mask)
        gcn_mod.save_checkpoint(str(outdir / "checkpoint.txt"), params, config, history)
    except DataError as exc:
        raise DataError(f"[train] {exc}") from exc
    timer.stage("train")

    try:
        kinds = {r.id: r.kind for r in c.records}
        report, preds = _report_for(g, params, labels, test_mask, kinds)
        text = metrics_mod.render_report(report, name="gcn")
        if args.baseline:
            slice_feats = g.features[g.n_words :]
            base_report, _ = gcn_mod.baseline_linear(
                slice_feats, labels, train_mask, test_mask, config
            )
            text += metrics_mod.render_report(base_report, name="baseline")
        _write_report(str(outdir / "report.txt"), text, _echo("pipeline", args))
    except DataError as exc:
        raise DataError(f"[eval] {exc}") from exc
    timer.stage("eval")
    print(text, end="")
    return 0


# --------------------------------------------------------------------------
# gen-synthetic

def cmd_gen_synthetic(args) -> int:
    c = synth_mod.gen_synthetic(args.n, args.vuln_frac, args.signal, args.seed)
    corpus_mod.write_gadget_file(c, args.out)
    stats = corpus_mod.corpus_stats(c)
    print(
        f"generated {stats['total']} slices "
        f"({stats['vulnerable']} vulnerable, signal={args.signal})"
    )
    if args.emit_noise_embeddings:
        table = synth_mod.gen_noise_embeddings(c.ids(), args.dim, args.seed)
        embed_mod.write_embeddings(table, args.emit_noise_embeddings)
        print(f"wrote noise embeddings dim={args.dim}")
    return 0


# --------------------------------------------------------------------------
# parser

def _add_feature_flags(p: _Parser) -> None:
    p.add_argument("--embeddings", help="embedding file for slice nodes")
    p.add_argument(
        "--fallback-mean-words", action="store_true",
        help="slice features = mean of their word vectors (no embedding file)",
    )
    p.add_argument("--feature-seed", type=int, default=None,
                   help="seed for word-node features (default: --seed)")


def _add_train_flags(p: _Parser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=4)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--single-dropout", action="store_true",
                   help="collapse the two dropout layers into one")
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--stratify", action="store_true")


def build_parser() -> _Parser:
    parser = _Parser(prog="slicegcn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="slice C/C++ sources into a gadget corpus")
    p.add_argument("--src", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sinks", help="sink config file (default: built-in list)")
    p.add_argument("--kind", default="GADGET", choices=corpus_mod.KINDS)
    p.add_argument("--label-map", help="file of '<relative path> <0|1>' lines")
    p.add_argument("--funcs-out", help="write the user-defined function names here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("normalize", help="symbolize and tokenize a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", default="GADGET", choices=corpus_mod.KINDS)
    p.add_argument("--user-funcs", help="file of user-defined function names")
    p.add_argument("--dedup", action="store_true",
                   help="drop slices with a repeated symbolic representation")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("build-graph", help="build the word-slice graph")
    p.add_argument("--tokens", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--window", type=int, default=None,
                   help="sliding-window co-occurrence instead of slice-level")
    p.add_argument("--dim", type=int, default=768,
                   help="node feature width recorded in the header")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train the graph classifier")
    p.add_argument("--graph", required=True)
    p.add_argument("--tokens", required=True)
    p.add_argument("--checkpoint-out", required=True)
    _add_feature_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the held-out split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--tokens", required=True)
    p.add_argument("--report-out", required=True)
    p.add_argument("--corpus", help="original corpus, enables per-kind rows")
    p.add_argument("--baseline", action="store_true",
                   help="also train/report the linear baseline")
    _add_feature_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write per-slice probabilities")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--tokens", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--all", action="store_true", help="predict every slice, not just test")
    _add_feature_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("pipeline", help="normalize + graph + train + eval in one run")
    p.add_argument("--corpus", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--kind", default="GADGET", choices=corpus_mod.KINDS)
    p.add_argument("--user-funcs")
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--dim", type=int, default=768)
    p.add_argument("--baseline", action="store_true")
    _add_feature_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("gen-synthetic", help="generate a planted-signal corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--vuln-frac", type=float, required=True)
    p.add_argument("--signal", choices=("token", "cooccur"), default="token")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--emit-noise-embeddings",
                   help="also write label-independent noise embeddings here")
    p.add_argument("--dim", type=int, default=64,
                   help="dim for --emit-noise-embeddings")
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "feature_seed", None) is None and hasattr(args, "seed"):
            args.feature_seed = args.seed
        for line in _echo(args.command, args):
            print(line)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
