"""Command line for planning and running staged fine-tunes."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .datafiles import DatasetError
from .plans import ManifestError, PlanError, load_manifest, plan_stages
from .runner import StageError, run_stage


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stagedriver",
        description="Plan and execute the staged fine-tuning curriculum "
                    "described by a manifest.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="print the dry-run stage plan")
    p.add_argument("manifest", type=Path)

    p = sub.add_parser("run", help="execute stages (or describe with --dry-run)")
    p.add_argument("manifest", type=Path)
    p.add_argument("--workspace", type=Path, default=Path("runs"),
                   help="directory for checkpoints/ and logs/ (default: runs)")
    p.add_argument("--stage", default=None,
                   help="run only the named stage (default: all, in order)")
    p.add_argument("--dry-run", action="store_true",
                   help="print invocations without training")
    return parser


def _cmd_plan(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    plans = plan_stages(manifest)
    for idx, plan in enumerate(plans):
        if idx:
            print()
        run_stage(plan, args.manifest.parent, Path("runs"), dry_run=True)
    print()
    print(f"{len(plans)} stage(s): " +
          " -> ".join(p.output_checkpoint for p in plans))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    plans = plan_stages(manifest)
    if args.stage is not None:
        plans = [p for p in plans if p.stage_name == args.stage]
        if not plans:
            raise ManifestError(f"no stage named {args.stage!r} in the manifest")
    for idx, plan in enumerate(plans):
        if idx:
            print()
        out = run_stage(plan, args.manifest.parent, args.workspace,
                        dry_run=args.dry_run)
        if not args.dry_run:
            print(f"stage {plan.stage_name}: checkpoint written to {out}")
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "plan":
            return _cmd_plan(args)
        return _cmd_run(args)
    except (ManifestError, PlanError, DatasetError, StageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
