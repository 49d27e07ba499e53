from pathlib import Path

from Supervision.helper.imaging import DEFAULT_HEIGHT, DEFAULT_WIDTH, save_chip, synth_airplane, synth_chip
from Supervision.helper.modal import AIRCRAFT_CLASSES, ObjectAnnotation, Sidecar
from Supervision.helper.rng import SplitMix64, derive_seed
from Supervision.logger import LOGGER

BBOX_MARGIN = 4


def register(subparsers):
    parser = subparsers.add_parser("synth", help="Write synthetic airplane chips with sidecar annotations")
    parser.add_argument("--count", type=int, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True)
    parser.add_argument("--height", type=int, default=DEFAULT_HEIGHT)
    parser.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    parser.add_argument("--clutter", type=float, default=0.05, help="Clutter noise sigma")
    parser.set_defaults(func=synth)


def _bbox(points, height, width):
    coords = points.coordinates()
    x_min, y_min = coords.min(axis=0) - BBOX_MARGIN
    x_max, y_max = coords.max(axis=0) + BBOX_MARGIN
    return (max(0.0, x_min), max(0.0, y_min), min(width - 1.0, x_max), min(height - 1.0, y_max))


def synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        seed = derive_seed(args.seed, f"synth/{i}")
        spec = synth_airplane(seed, args.height, args.width, args.clutter)
        chip, truth = synth_chip(spec)
        name = f"plane_{i:04d}"
        save_chip(out / f"{name}.pgm", chip)
        label = AIRCRAFT_CLASSES[SplitMix64(seed).below(len(AIRCRAFT_CLASSES))]
        sidecar = Sidecar(objects=[ObjectAnnotation(bbox=_bbox(truth, chip.height, chip.width), label=label)])
        (out / f"{name}.json").write_text(sidecar.model_dump_json(exclude_none=True))
    LOGGER.info(f"Wrote {args.count} synthetic chips to {out}")
    return 0
