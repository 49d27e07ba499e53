from Supervision.helper.pgfe import RELATIVE_ERROR_METRIC, fuse_check as run_fuse_check
from Supervision.logger import LOGGER


def register(subparsers):
    parser = subparsers.add_parser("fuse-check", help="Verify fusion-block gradients against finite differences")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--instances", type=int, default=20)
    parser.add_argument("--window", type=int, default=2)
    parser.set_defaults(func=fuse_check)


def fuse_check(args) -> int:
    report = run_fuse_check(args.seed, args.instances, args.window)
    print(f"max relative error: {report.max_rel_error:.3e} ({RELATIVE_ERROR_METRIC})")
    LOGGER.info(
        f"fuse-check over {report.instances} instances: worst {report.worst_field}, "
        f"bypass exact={report.bypass_exact}, softmax deviation {report.softmax_deviation:.1e}"
    )
    if not report.passed:
        LOGGER.error("Fusion gradient check failed")
        return 1
    return 0
