"""
Command-line entry point.

    covprep run --input owid.csv --pipeline both --out out
    covprep compare --out out

Exit status is 0 on success, 1 when a pipeline stage fails (the message
names the stage), and 2 for invalid arguments or configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import PipelineConfig
from .errors import ConfigError, MissingRun, StageError
from .pipeline import compare, run_custom, run_standard

EXIT_OK = 0
EXIT_STAGE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covprep",
        description="Run the standard and custom preprocessing pipelines and compare them.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON file with pipeline settings")
        p.add_argument("--out", help="output directory (default: out)")

    run = sub.add_parser("run", help="run one or both pipelines")
    common(run)
    run.add_argument("--input", help="OWID-schema CSV file")
    run.add_argument("--location", help="iso_code to model (default: IND)")
    run.add_argument("--pipeline", choices=("standard", "custom", "both"), default=None,
                     help="which pipeline to run (default: both)")
    run.add_argument("--target", help="target column (default: new_deaths)")
    run.add_argument("--seed", type=int, help="random seed (default: 0)")
    run.add_argument("--no-compare", action="store_true",
                     help="skip the comparison step after running both pipelines")

    cmp_ = sub.add_parser("compare", help="compare finished standard and custom runs")
    common(cmp_)
    return parser


def _config(args, **flags) -> PipelineConfig:
    overrides = {k: v for k, v in flags.items() if v is not None}
    if getattr(args, "config", None):
        return PipelineConfig.from_json(args.config, **overrides)
    return PipelineConfig.from_dict(overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            config = _config(args, out=args.out)
            delta = compare(config)
            for name in ("standard", "custom"):
                b = delta["best"][name]
                print(f"best {name}: {b['model']} test RMSE {b['test_rmse']:.3f}")
            return EXIT_OK

        which = args.pipeline or "both"
        config = _config(
            args,
            input=args.input,
            location=args.location,
            target=args.target,
            seed=args.seed,
            out=args.out,
            pipeline=None if which == "both" else which,
        )
        if config.input is None:
            parser.error("an input file is required (--input or the config file)")
        pipelines = ("standard", "custom") if which == "both" else (which,)
        for name in pipelines:
            result = run_standard(config) if name == "standard" else run_custom(config)
            best = result.report.best()
            print(f"{name}: {len(result.features)} features, best {best.model} "
                  f"test RMSE {best.test_rmse:.3f} -> {result.out_dir}")
        if which == "both" and not args.no_compare:
            compare(config)
            print(f"comparison written to {config.out}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"covprep: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"covprep: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except MissingRun as exc:
        print(f"covprep: [compare] {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
