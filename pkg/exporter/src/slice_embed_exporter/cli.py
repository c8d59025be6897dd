import argparse
import sys

from .export import ExportError, ExportJob, export_embeddings


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="slice-embed-export",
        description="Embed tokenized slices with a pretrained code transformer.",
    )
    ap.add_argument("--input", required=True, help="tokenized corpus file")
    ap.add_argument("--output", required=True, help="embedding file to write")
    ap.add_argument("--model", required=True,
                    help="model name or local path (e.g. a code-pretrained BERT)")
    ap.add_argument("--pool", choices=("classifier_token", "mean"),
                    default="classifier_token")
    ap.add_argument("--max-len", type=int, default=512)
    ap.add_argument("--batch-size", type=int, default=16)
    args = ap.parse_args(argv)
    try:
        job = ExportJob(
            input_path=args.input,
            output_path=args.output,
            model=args.model,
            pool=args.pool,
            max_len=args.max_len,
            batch_size=args.batch_size,
        )
        truncated = export_embeddings(job)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output} (truncated={truncated})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
