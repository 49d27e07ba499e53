import asyncio
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from time import time
from typing import Dict, Optional

import aiofiles

from Supervision.helper.container import encode_array, encode_stack
from Supervision.helper.exceptions import OutputNotWritable
from Supervision.helper.heatmap import heatmap_stack
from Supervision.helper.imaging import augment_chip, encode_pgm, load_chip
from Supervision.helper.mixture import fit_gmm
from Supervision.helper.modal import (
    ChipRecord, InstanceAnnotation, Manifest, ManifestEntry, PipelineConfig, SummaryRecord
)
from Supervision.helper.pgip import HeadSpec, pgip_targets
from Supervision.helper.rng import derive_seed
from Supervision.helper.scattering import extract_points, points_within
from Supervision.logger import LOGGER

REPORT_NAME = "report.jsonl"


@dataclass
class ChipResult:
    chip: str
    split: str
    stages: Dict[str, str] = field(default_factory=dict)
    artifacts: Dict[str, bytes] = field(default_factory=dict)
    points: int = 0

    @property
    def ok(self) -> bool:
        return not any(status.startswith("failed") for status in self.stages.values())

    def failed_stages(self):
        return [stage for stage, status in self.stages.items() if status.startswith("failed")]

    def record(self) -> ChipRecord:
        return ChipRecord(
            chip=self.chip, split=self.split, ok=self.ok, points=self.points,
            stages=self.stages, artifacts=sorted(self.artifacts),
        )


def _run_stage(result: ChipResult, name: str, needs, fn):
    if any(result.stages.get(n) != "ok" for n in needs):
        result.stages[name] = "skipped"
        return
    try:
        fn()
    except Exception as e:
        result.stages[name] = f"failed: {type(e).__name__}: {e}"
        LOGGER.warning(f"{result.chip}: {name} stage failed: {type(e).__name__}: {e}")
    else:
        result.stages[name] = "ok"


def process_chip(entry: ManifestEntry, root: str, cfg: PipelineConfig) -> ChipResult:
    """Pure per-chip stage chain; artifacts come back as bytes keyed by relative path."""
    result = ChipResult(chip=entry.chip_path, split=entry.split)
    seed = derive_seed(cfg.seed, entry.chip_path)
    rel = PurePosixPath(entry.chip_path)
    base = (rel.parent / rel.stem).as_posix()
    chip = points = mixture = None

    def load():
        nonlocal chip
        chip = load_chip(Path(root) / entry.chip_path)

    def find_points():
        nonlocal points
        points = extract_points(chip, cfg.harris)
        result.points = len(points)
        result.artifacts[f"{base}.points.json"] = points.model_dump_json().encode()

    def fit():
        nonlocal mixture
        mixture = fit_gmm(points, cfg.mixture.model_copy(update={"seed": seed}))
        result.artifacts[f"{base}.mixture.json"] = mixture.to_json().encode()

    def render():
        stack = heatmap_stack(mixture, chip.height, chip.width, cfg.heatmap.stride)
        result.artifacts[f"{base}.heatmap.pgdh"] = encode_stack(stack)

    def targets():
        instances = [InstanceAnnotation(bbox=obj.bbox, points=points_within(points, obj.bbox))
                     for obj in entry.annotations]
        for stride in cfg.pgip.strides:
            head = HeadSpec.for_image(stride, chip.height, chip.width)
            target = pgip_targets(instances, head, cfg.pgip)
            result.artifacts[f"{base}.s{stride}.pgdh"] = encode_array(target.values.astype("float32"))

    def augment():
        for n in range(cfg.augment.copies):
            aug_seed = derive_seed(seed, f"augment/{n}")
            aug_chip, aug_points = augment_chip(chip, points, cfg.augment, aug_seed)
            prefix = f"{base}.aug{n}"
            result.artifacts[f"{prefix}.pgm"] = encode_pgm(aug_chip)
            result.artifacts[f"{prefix}.points.json"] = aug_points.model_dump_json().encode()
            aug_mixture = fit_gmm(aug_points, cfg.mixture.model_copy(update={"seed": aug_seed}))
            result.artifacts[f"{prefix}.mixture.json"] = aug_mixture.to_json().encode()
            stack = heatmap_stack(aug_mixture, aug_chip.height, aug_chip.width, cfg.heatmap.stride)
            result.artifacts[f"{prefix}.heatmap.pgdh"] = encode_stack(stack)

    _run_stage(result, "load", (), load)
    _run_stage(result, "points", ("load",), find_points)
    _run_stage(result, "gmm", ("points",), fit)
    _run_stage(result, "heatmap", ("gmm",), render)
    if entry.annotations is not None:
        _run_stage(result, "pgip", ("points",), targets)
    if cfg.augment.copies:
        _run_stage(result, "augment", ("points",), augment)
    return result


def _crashed(entry: ManifestEntry, error: BaseException) -> ChipResult:
    LOGGER.error(f"{entry.chip_path}: worker crashed: {error!r}")
    return ChipResult(chip=entry.chip_path, split=entry.split, stages={"worker": f"failed: {error!r}"})


class ReportSink:
    """Append-only JSON-lines report, written in manifest order."""

    def __init__(self, path: Path):
        self.path = path
        self.lock = asyncio.Lock()
        self.pending: Dict[int, ChipRecord] = {}
        self.next_index = 0
        self.handle = None

    async def __aenter__(self):
        self.handle = await aiofiles.open(self.path, "w")
        return self

    async def __aexit__(self, *exc):
        await self.handle.close()

    async def put(self, index: int, record: ChipRecord):
        async with self.lock:
            self.pending[index] = record
            while self.next_index in self.pending:
                await self.handle.write(self.pending.pop(self.next_index).model_dump_json() + "\n")
                self.next_index += 1

    async def summarize(self, summary: SummaryRecord):
        async with self.lock:
            await self.handle.write(summary.model_dump_json() + "\n")


async def write_artifacts(out_dir: Path, result: ChipResult):
    for rel, data in result.artifacts.items():
        target = out_dir / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        async with aiofiles.open(target, "wb") as f:
            await f.write(data)


def _ensure_writable(out_dir: Path):
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputNotWritable(f"Cannot create output directory {out_dir}: {e}")
    if not os.access(out_dir, os.W_OK):
        raise OutputNotWritable(f"Output directory {out_dir} is not writable")


async def run_preprocess(manifest: Manifest, cfg: PipelineConfig, out_dir: Optional[str] = None) -> SummaryRecord:
    out = Path(out_dir or cfg.output_dir)
    _ensure_writable(out)
    start = time()
    loop = asyncio.get_running_loop()
    total = len(manifest.entries)
    results = [None] * total
    LOGGER.info(f"Preprocessing {total} chips from {manifest.root} with {cfg.workers} workers into {out}")

    async with ReportSink(out / REPORT_NAME) as sink:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:

            async def handle(index: int, entry: ManifestEntry):
                try:
                    result = await loop.run_in_executor(pool, process_chip, entry, manifest.root, cfg)
                except Exception as e:
                    result = _crashed(entry, e)
                await write_artifacts(out, result)
                results[index] = result
                await sink.put(index, result.record())

            await asyncio.gather(*(handle(i, entry) for i, entry in enumerate(manifest.entries)))

        stage_failures = {}
        for result in results:
            for stage in result.failed_stages():
                stage_failures[stage] = stage_failures.get(stage, 0) + 1
        succeeded = sum(r.ok for r in results)
        summary = SummaryRecord(
            total=total, succeeded=succeeded, failed=total - succeeded,
            stage_failures=stage_failures, wall_time=round(time() - start, 3),
        )
        await sink.summarize(summary)

    LOGGER.info(f"Preprocessed {succeeded}/{total} chips in {summary.wall_time}s")
    return summary
