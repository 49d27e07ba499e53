import logging
import sys
from argparse import ArgumentParser
from traceback import format_exc

from Supervision import __version__
from Supervision.commands import fuse_check, gmm, heatmap, pgip, points, render, run, synth
from Supervision.helper.exceptions import ContainerError, InvalidInput, OutputNotWritable
from Supervision.logger import LOGGER

COMMANDS = (synth, points, gmm, heatmap, pgip, fuse_check, run, render)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="pgd-prep",
        description="Physics-guided supervision for SAR airplane detection.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, ContainerError, OutputNotWritable) as e:
        LOGGER.error(f"{args.command}: {type(e).__name__}: {e}")
        return 2
    except KeyboardInterrupt:
        LOGGER.info("Interrupted")
        return 130
    except Exception:
        LOGGER.error(f"{args.command} crashed:\n" + format_exc())
        return 1


if __name__ == '__main__':
    code = main()
    logging.shutdown()
    sys.exit(code)
