"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import synthetic
from .experiment import (
    ConfigError,
    DataError,
    ExperimentConfig,
    compare_modes,
    run_experiment,
)
from .rerank import ALGORITHM_NAMES

logger = logging.getLogger("genrank")


def _add_experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override its values")
    p.add_argument("--corpus")
    p.add_argument("--format", choices=["jsonl", "trec-sgml"])
    p.add_argument("--queries")
    p.add_argument("--qrels")
    p.add_argument(
        "--algorithms",
        help="comma-separated list, or 'all'; known: " + ", ".join(ALGORITHM_NAMES),
    )
    p.add_argument("--dinit", type=int, help="size of the initially retrieved set")
    p.add_argument("--mode", choices=["rerank", "full-corpus"])
    p.add_argument("--link-mode", dest="link_mode", choices=["lm", "cosine"])
    p.add_argument("--mu-grid", dest="mu_grid")
    p.add_argument("--alpha-grid", dest="alpha_grid")
    p.add_argument("--lambda-grid", dest="lambda_grid")
    p.add_argument("--target-metric", dest="target_metric")
    p.add_argument("--full-corpus-cap", dest="full_corpus_cap", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")


_OVERRIDES = (
    "corpus", "format", "queries", "qrels", "algorithms", "dinit", "mode", "link_mode",
    "mu_grid", "alpha_grid", "lambda_grid", "target_metric", "full_corpus_cap", "jobs", "out",
)


def _config(args) -> ExperimentConfig:
    overrides = {k: getattr(args, k) for k in _OVERRIDES}
    if overrides["algorithms"] == "all":
        overrides["algorithms"] = ALGORITHM_NAMES
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    return ExperimentConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genrank",
        description="Structural re-ranking of language-model retrieval results.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the sweep protocol and write reports")
    _add_experiment_args(p_run)

    p_cmp = sub.add_parser("compare-modes", help="re-ranking vs. full-corpus ranking")
    _add_experiment_args(p_cmp)

    p_syn = sub.add_parser("synth", help="write the bundled synthetic corpus")
    p_syn.add_argument("out", help="output directory")
    p_syn.add_argument("--seed", type=int, default=synthetic.SyntheticSpec.seed)
    p_syn.add_argument("--docs", type=int, default=synthetic.SyntheticSpec.n_docs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            spec = replace(synthetic.SyntheticSpec(), seed=args.seed, n_docs=args.docs)
            paths = synthetic.write(args.out, spec)
            for path in paths.values():
                print(path)
            return 0
        config = _config(args)
        if args.command == "run":
            paths = run_experiment(config)
            print(paths["txt"].read_text(encoding="utf-8"), end="")
        else:
            print(compare_modes(config))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        logger.debug("runtime failure", exc_info=True)
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
