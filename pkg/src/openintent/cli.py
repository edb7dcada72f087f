"""Command-line surface.

Subcommands: detect, discover, link, pipeline, evaluate, gen-synthetic.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import pipeline as pl
from .config import load_config
from .corpus import write_embeddings, write_utterances
from .errors import ConfigError, DataError, DivergenceError, OpenIntentError
from .serialize import dump_json
from .synthetic import (generate, overlap_spec, pick_constraints, recovery_spec)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4


def _add_common(p: argparse.ArgumentParser, constraints: bool = True) -> None:
    p.add_argument("--config", required=True, help="run config JSON file")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="override output directory")
    if constraints:
        p.add_argument("--constraints", default=None,
                       help="must-link/cannot-link JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="openintent",
        description="Discover novel intents and domains in embedded utterances",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="flag unlabeled utterances with unseen intents")
    _add_common(p, constraints=False)

    p = sub.add_parser("discover", help="learn the metric and cluster novel rows")
    _add_common(p)

    p = sub.add_parser("link", help="group novel intent clusters into domains")
    _add_common(p, constraints=False)

    p = sub.add_parser("pipeline", help="run detect, discover, link, evaluate")
    _add_common(p)
    p.add_argument("--eval", action="store_true",
                   help="print the metrics table after the run")

    p = sub.add_parser("evaluate", help="rebuild report.json from artifacts")
    _add_common(p, constraints=False)
    p.add_argument("--eval", action="store_true", help="print the metrics table")

    p = sub.add_parser("gen-synthetic", help="write a synthetic fixture corpus")
    p.add_argument("--preset", choices=("recovery", "overlap"), default="recovery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for the fixture files")
    return parser


# fixture run settings; the recovery preset needs the larger detector k so
# near-1 probabilities on tight blobs don't trip the per-class thresholds
_PRESET_CONFIG = {
    "recovery": {
        "detector": {"mode": "m_unseen", "k": 8.0, "lr": 0.1,
                     "epochs": 12, "batch_size": 64},
        "metric": {"h": 64, "e": 32, "lr": 0.001, "epochs": 15,
                   "batch_quadruplets": 64, "quads_per_anchor": 4},
    },
    "overlap": {
        "detector": {"mode": "m_unseen", "k": 8.0, "lr": 0.1,
                     "epochs": 12, "batch_size": 64},
        "metric": {"h": 64, "e": 32, "lr": 0.001, "epochs": 15,
                   "batch_quadruplets": 64, "quads_per_anchor": 4},
    },
}


def cmd_gen_synthetic(args: argparse.Namespace) -> None:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = recovery_spec() if args.preset == "recovery" else overlap_spec()
    corpus = generate(spec, args.seed)
    write_embeddings(corpus.embeddings, out / "embeddings.emb1")
    write_utterances(corpus.utterances, out / "utterances.jsonl")
    cfg = {
        "paths": {
            "embeddings": "embeddings.emb1",
            "utterances": "utterances.jsonl",
            "out_dir": "out",
        },
        "seed": args.seed,
        **_PRESET_CONFIG[args.preset],
    }
    if args.preset == "overlap":
        constraints = pick_constraints(corpus, seed=args.seed)
        dump_json(constraints.to_dict(), out / "constraints.json")
    dump_json(cfg, out / "config.json")
    sys.stdout.write(
        f"wrote {args.preset} fixture ({corpus.embeddings.n} rows) to {out}\n"
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-synthetic":
            cmd_gen_synthetic(args)
            return 0
        cfg = load_config(
            args.config,
            seed=args.seed,
            constraints=getattr(args, "constraints", None),
            out_dir=args.out,
        )
        if args.command == "detect":
            summary = pl.cmd_detect(cfg)
        elif args.command == "discover":
            summary = pl.cmd_discover(cfg)
        elif args.command == "link":
            summary = pl.cmd_link(cfg)
        elif args.command == "pipeline":
            summary = pl.cmd_pipeline(cfg, print_table=args.eval)
            sys.stdout.write(f"pipeline complete; artifacts in {cfg.paths.out_dir}\n")
            return 0
        else:
            summary = pl.cmd_evaluate(cfg, print_table=args.eval)
            return 0
        sys.stdout.write(f"{args.command}: {summary}\n")
        return 0
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except DivergenceError as exc:
        sys.stderr.write(f"divergence: {exc}\n")
        return EXIT_DIVERGENCE
    except DataError as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except OpenIntentError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
