"""Command-line front end.

Subcommands mirror the analysis stages so each is usable in isolation:

* ``taguchi`` -- response table, optimal combination, design diagnostics
* ``anova``   -- ANOVA table and model summary
* ``fit``     -- train a model, cross-validate, report importance
* ``report``  -- the full pipeline

Exit codes: 0 success (at least one stage ran and no I/O error),
1 I/O error, 2 usage error, 3 every stage failed.
"""

from __future__ import annotations

import argparse
import sys

from .pipeline import RunConfig, render, report_json, report_text, run_pipeline

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_ALL_FAILED = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", metavar="PATH", help="CSV file to analyze")
    src.add_argument(
        "--builtin",
        choices=["aa6262"],
        help="use the embedded dataset (default when --input is absent)",
    )
    p.add_argument("--response", default="hardness", help="response column name")
    p.add_argument("--seed", type=int, default=0, help="64-bit seed (default 0)")
    p.add_argument(
        "--format", choices=["text", "csv", "json"], default="text",
        help="output format",
    )
    p.add_argument("--out", metavar="DIR", help="write report files to DIR")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["rf", "gbm"], default="rf")
    p.add_argument("--trees", type=int, default=200, help="forest size")
    p.add_argument("--rounds", type=int, default=50, help="boosting rounds")
    p.add_argument(
        "--depth", type=int, default=0, help="max tree depth (0 = unlimited)"
    )
    p.add_argument("--nu", type=float, default=0.3, help="boosting learning rate")
    p.add_argument(
        "--lambda", dest="lam", type=float, default=0.0, help="L2 leaf penalty"
    )
    p.add_argument(
        "--m", type=int, default=None, help="features searched per split"
    )
    p.add_argument("--cv", default="loo", help="'loo' or 'k:<K>'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weldlab",
        description="Taguchi, ANOVA, and tree-ensemble analysis of "
        "process-parameter experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("taguchi", "signal-to-noise response table and design diagnostics"),
        ("anova", "ANOVA table and model summary"),
        ("fit", "train and cross-validate a model"),
        ("report", "run the full pipeline"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)
        if name in ("fit", "report"):
            _add_model_flags(p)
        if name in ("taguchi", "report"):
            p.add_argument(
                "--criterion", choices=["larger", "smaller", "nominal"],
                default="larger", help="S/N quality criterion",
            )
    return parser


_SECTIONS_BY_COMMAND = {
    "taguchi": ("dataset", "design", "taguchi"),
    "anova": ("dataset", "anova"),
    "fit": ("dataset", "model"),
    "report": ("dataset", "design", "taguchi", "anova", "model", "tree"),
}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    builtin = args.builtin
    if args.input is None and builtin is None:
        builtin = "aa6262"
    return RunConfig(
        input_path=args.input,
        builtin=None if args.input is not None else builtin,
        response=args.response,
        criterion=getattr(args, "criterion", "larger"),
        model=getattr(args, "model", "rf"),
        trees=getattr(args, "trees", 200),
        rounds=getattr(args, "rounds", 50),
        depth=getattr(args, "depth", 0),
        nu=getattr(args, "nu", 0.3),
        lam=getattr(args, "lam", 0.0),
        m=getattr(args, "m", None),
        cv=getattr(args, "cv", "loo"),
        seed=args.seed,
        format=args.format,
        out_dir=args.out,
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))  # exits with EXIT_USAGE

    try:
        doc = run_pipeline(cfg)
    except OSError as exc:
        print(f"weldlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"weldlab: {exc}", file=sys.stderr)
        return EXIT_IO

    # Keep only the sections this subcommand owns.
    wanted = _SECTIONS_BY_COMMAND[args.command]
    doc.sections = {k: v for k, v in doc.sections.items() if k in wanted}
    doc.errors = {k: v for k, v in doc.errors.items() if k in wanted}

    if not doc.sections:
        for stage, msg in doc.errors.items():
            print(f"weldlab: stage {stage} failed: {msg}", file=sys.stderr)
        return EXIT_ALL_FAILED

    if cfg.out_dir is not None:
        try:
            written = render(doc, cfg.format, cfg.out_dir)
        except OSError as exc:
            print(f"weldlab: I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        for p in written:
            print(p)
    else:
        if cfg.format == "csv":
            parser.error("--format csv requires --out DIR")
        sys.stdout.write(
            report_json(doc) if cfg.format == "json" else report_text(doc)
        )

    for stage, msg in doc.errors.items():
        print(f"weldlab: stage {stage} failed: {msg}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
