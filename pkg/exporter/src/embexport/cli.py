"""Command line entry point.

    embexport --in utterances.jsonl --encoder hash --out vectors.emb1 --batch 64

Exit codes: 0 ok, 2 encoder/usage problem, 3 bad input data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from embexport.errors import DataError, EncoderError
from embexport.export import ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="embexport",
        description="Encode an utterance JSONL file and write an EMB1 embedding file.",
    )
    p.add_argument("--in", dest="input_path", required=True, metavar="JSONL",
                   help="utterance file; each line needs 'id' and 'text'")
    p.add_argument("--encoder", default="hash", metavar="NAME",
                   help="'hash', 'hash:<dim>', or 'st:<model>' (default: hash, dim 768)")
    p.add_argument("--out", dest="output_path", required=True, metavar="EMB1",
                   help="output embedding file")
    p.add_argument("--batch", type=int, default=64, metavar="N",
                   help="texts per encoder call (default: 64)")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.batch < 1:
        parser.error(f"--batch must be >= 1, got {args.batch}")
    job = ExportJob(
        input_path=Path(args.input_path),
        encoder=args.encoder,
        output_path=Path(args.output_path),
        batch_size=args.batch,
    )
    try:
        n, d = export(job)
    except EncoderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {job.output_path}: {n} rows, dim {d}, encoder {job.encoder}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
