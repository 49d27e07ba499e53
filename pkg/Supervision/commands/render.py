from Supervision.helper.container import load_container
from Supervision.helper.imaging import load_chip
from Supervision.helper.render import render_overlay
from Supervision.logger import LOGGER


def register(subparsers):
    parser = subparsers.add_parser("render", help="Overlay a heatmap stack on its chip as PNG")
    parser.add_argument("--heatmap", required=True)
    parser.add_argument("--chip", required=True)
    parser.add_argument("--out", required=True)
    parser.set_defaults(func=render)


def render(args) -> int:
    render_overlay(load_chip(args.chip), load_container(args.heatmap), args.out)
    LOGGER.info(f"Overlay written to {args.out}")
    return 0
