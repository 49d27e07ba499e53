from pydantic import ValidationError

from Supervision.commands import read_model
from Supervision.config import Prep
from Supervision.helper.container import encode_array
from Supervision.helper.exceptions import InvalidInput
from Supervision.helper.modal import AnnotationsFile, PgipSettings
from Supervision.helper.pgip import HeadSpec, pgip_targets
from Supervision.logger import LOGGER


def register(subparsers):
    parser = subparsers.add_parser("pgip", help="Build an instance-perception target map for one head")
    parser.add_argument("--annotations", required=True)
    parser.add_argument("--stride", type=int, required=True)
    parser.add_argument("--eta", type=float, default=Prep.DEFAULT_ETA)
    parser.add_argument("--mode", choices=("adaptive", "hard", "truncated"), default="adaptive")
    parser.add_argument("--tau", type=float, default=0.0, help="Global threshold of the truncated mode")
    parser.add_argument("--out", default=None)
    parser.set_defaults(func=pgip)


def pgip(args) -> int:
    annotations = read_model(AnnotationsFile, args.annotations)
    head = HeadSpec.for_image(args.stride, annotations.height, annotations.width)
    try:
        settings = PgipSettings(strides=[args.stride], eta=args.eta, mode=args.mode, global_tau=args.tau)
    except ValidationError as e:
        raise InvalidInput(str(e))
    target = pgip_targets(annotations.instances, head, settings)
    LOGGER.info(
        f"{args.mode} target at stride {args.stride}: {target.positives} of "
        f"{head.map_height * head.map_width} cells positive"
    )
    if args.out:
        with open(args.out, "wb") as f:
            f.write(encode_array(target.values.astype("float32")))
    else:
        for row in target.values:
            print("".join(str(int(v)) for v in row))
    return 0
