from Supervision.commands import emit
from Supervision.helper.imaging import load_chip
from Supervision.helper.modal import load_pipeline_config
from Supervision.helper.scattering import extract_points
from Supervision.logger import LOGGER


def register(subparsers):
    parser = subparsers.add_parser("points", help="Extract scattering points from a chip")
    parser.add_argument("--in", dest="chip", required=True)
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=None)
    parser.set_defaults(func=points)


def points(args) -> int:
    cfg = load_pipeline_config(args.config)
    found = extract_points(load_chip(args.chip), cfg.harris)
    LOGGER.info(f"{args.chip}: {len(found)} scattering points")
    emit(found.model_dump_json(), args.out)
    return 0
