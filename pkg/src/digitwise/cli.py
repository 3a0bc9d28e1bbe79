"""Command-line surface tying generation, verification, and evaluation together."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, manifest
from .arith import schoolbook_trace
from .evaluation import EvalMode, eval_global, eval_subtask, render_report
from .grammar import TaskKind, render_trace
from .harness import HarnessError, load_endpoint_config
from .verifier import Verdict, verify_trace

_GEN_TASKS = {
    "t1_mult": (lambda n, seed: corpus.gen_t1_mult(), 100, True),
    "t2_add": (lambda n, seed: corpus.gen_t2_add(), 1000, True),
    "t3_extract": (corpus.gen_t3_extract, 5000, False),
    "t4_concat": (corpus.gen_t4_concat, 5000, False),
    "global_mult": (corpus.gen_global, 2000, False),
    "stage1": (lambda n, seed: corpus.gen_stage1(seed), 1100, True),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="digitwise",
        description="Generate, verify, and evaluate digit-by-digit "
                    "multiplication reasoning corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset as JSONL")
    p.add_argument("task", choices=sorted(_GEN_TASKS))
    p.add_argument("--n", type=int, default=None,
                   help="example count for sampled tasks")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--out", type=Path, default=None,
                   help="output file (default: stdout)")

    p = sub.add_parser("split", help="label a dataset train/eval")
    p.add_argument("input", type=Path)
    p.add_argument("--eval-fraction", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", type=Path, default=None,
                   help="output file (default: rewrite input)")

    p = sub.add_parser("render-trace", help="print the reasoning trace for a*m")
    p.add_argument("a", type=int)
    p.add_argument("m", type=int)

    p = sub.add_parser("verify", help="verify trace text against the oracle")
    p.add_argument("file", help="trace text file, or - for stdin")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--json", action="store_true", help="emit the report as JSON")

    p = sub.add_parser("eval", help="evaluate an endpoint on a dataset")
    p.add_argument("dataset", type=Path)
    p.add_argument("--endpoint-config", type=Path, required=True)
    p.add_argument("--mode", choices=["cot", "direct"], default="cot",
                   help="composed-task protocol (subtasks are always direct)")
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--max-iter", type=int, default=10)
    p.add_argument("--report-out", type=Path, default=None)

    p = sub.add_parser("manifest", help="curriculum manifest tools")
    msub = p.add_subparsers(dest="manifest_command", required=True)
    v = msub.add_parser("validate", help="validate a manifest file")
    v.add_argument("path", type=Path)
    i = msub.add_parser("init", help="generate default datasets and manifest")
    i.add_argument("directory", type=Path)
    i.add_argument("--seed", type=int, default=1234)
    i.add_argument("--n-extract", type=int, default=5000)
    i.add_argument("--n-concat", type=int, default=5000)
    i.add_argument("--n-global", type=int, default=2000)
    return parser


def _cmd_gen(args: argparse.Namespace) -> int:
    gen, default_n, exhaustive = _GEN_TASKS[args.task]
    if exhaustive and args.n is not None:
        raise ValueError(f"{args.task} has a fixed example count ({default_n})")
    n = args.n if args.n is not None else default_n
    ds = gen(n, args.seed)
    if args.out is None:
        for e in ds.examples:
            print(json.dumps(corpus.example_to_obj(e), ensure_ascii=False))
    else:
        corpus.write_jsonl(ds, args.out)
        print(f"wrote {len(ds)} examples to {args.out}", file=sys.stderr)
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    ds = corpus.read_jsonl(args.input)
    labeled = corpus.split_dataset(ds, args.eval_fraction, args.seed)
    out = args.out if args.out is not None else args.input
    corpus.write_jsonl(labeled, out)
    train = len(labeled.with_split(corpus.Split.TRAIN))
    evals = len(labeled.with_split(corpus.Split.EVAL))
    print(f"labeled {train} train / {evals} eval in {out}", file=sys.stderr)
    return 0


def _cmd_render_trace(args: argparse.Namespace) -> int:
    print(render_trace(schoolbook_trace(args.a, args.m)))
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.file == "-":
        text = sys.stdin.read()
    else:
        text = Path(args.file).read_text(encoding="utf-8")
    report = verify_trace(text, args.a, args.m)
    if args.json:
        print(report.to_json())
    elif report.first_error is not None:
        print(f"{report.verdict.value.capitalize()}: line "
              f"{report.first_error.line_number} {report.first_error.kind.value}")
    else:
        print(report.verdict.value.capitalize())
    return 0 if report.verdict is Verdict.VALID else 1


def _cmd_eval(args: argparse.Namespace) -> int:
    ds = corpus.read_jsonl(args.dataset)
    cfg = load_endpoint_config(args.endpoint_config)
    if ds.task is TaskKind.GLOBAL_MULT:
        report = eval_global(
            ds, cfg, EvalMode(args.mode),
            parallelism=args.parallelism, max_iter=args.max_iter,
        )
    else:
        report = eval_subtask(ds, cfg, parallelism=args.parallelism)
    table, payload = render_report([report])
    print(table)
    if args.report_out is not None:
        args.report_out.write_text(payload + "\n", encoding="utf-8")
        print(f"report written to {args.report_out}", file=sys.stderr)
    return 0


def _cmd_manifest(args: argparse.Namespace) -> int:
    if args.manifest_command == "validate":
        m = manifest.validate_manifest(args.path)
        print(f"valid: {len(m.stages)} stages "
              f"({' -> '.join(s.name for s in m.stages)})")
        return 0
    path = manifest.init_workspace(
        args.directory, seed=args.seed,
        n_extract=args.n_extract, n_concat=args.n_concat, n_global=args.n_global,
    )
    print(f"wrote datasets and manifest to {path}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "split": _cmd_split,
    "render-trace": _cmd_render_trace,
    "verify": _cmd_verify,
    "eval": _cmd_eval,
    "manifest": _cmd_manifest,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses exit 2 for usage errors
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
