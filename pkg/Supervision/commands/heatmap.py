from pathlib import Path

from pydantic import ValidationError

from Supervision.helper.container import save_container
from Supervision.helper.exceptions import ChipNotFound, InvalidInput
from Supervision.helper.heatmap import heatmap_stack
from Supervision.helper.mixture import GaussianMixture
from Supervision.logger import LOGGER


def register(subparsers):
    parser = subparsers.add_parser("heatmap", help="Render a mixture as a PGDH heatmap stack")
    parser.add_argument("--mixture", required=True)
    parser.add_argument("--height", type=int, required=True)
    parser.add_argument("--width", type=int, required=True)
    parser.add_argument("--stride", type=int, default=1, help="Downsample ratio of the target grid")
    parser.add_argument("--out", required=True)
    parser.set_defaults(func=heatmap)


def heatmap(args) -> int:
    path = Path(args.mixture)
    if not path.is_file():
        raise ChipNotFound(f"Input file not found: {path}")
    try:
        mixture = GaussianMixture.from_json(path.read_bytes())
    except ValidationError as e:
        raise InvalidInput(f"{path}: {e}")
    if args.height < 1 or args.width < 1 or args.stride < 1:
        raise InvalidInput("height, width and stride must be positive")
    stack = heatmap_stack(mixture, args.height, args.width, args.stride)
    save_container(args.out, stack)
    LOGGER.info(f"Wrote {stack.K}x{stack.height}x{stack.width} heatmap to {args.out}")
    return 0
