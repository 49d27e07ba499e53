import asyncio

from Supervision.helper.manifest import build_manifest
from Supervision.helper.modal import load_pipeline_config
from Supervision.helper.task_manager import run_preprocess


def register(subparsers):
    parser = subparsers.add_parser("run", help="Preprocess every chip of a directory tree")
    parser.add_argument("--manifest", required=True, help="Root directory of chips and sidecars")
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.set_defaults(func=run)


def run(args) -> int:
    cfg = load_pipeline_config(args.config)
    overrides = {}
    if args.out:
        overrides["output_dir"] = args.out
    if args.workers:
        overrides["workers"] = max(1, args.workers)
    cfg = cfg.model_copy(update=overrides)
    manifest = build_manifest(args.manifest, cfg.seed, cfg.split)
    summary = asyncio.run(run_preprocess(manifest, cfg))
    return 0 if summary.failed == 0 else 1
