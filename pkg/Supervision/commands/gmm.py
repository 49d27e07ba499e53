from Supervision.commands import emit, read_model
from Supervision.helper.mixture import fit_gmm_traced
from Supervision.helper.modal import MixtureConfig, ScatterPointSet
from Supervision.logger import LOGGER


def register(subparsers):
    parser = subparsers.add_parser("gmm", help="Fit the structure distribution of a point set")
    parser.add_argument("--points", required=True)
    parser.add_argument("--k", type=int, default=MixtureConfig().K)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None)
    parser.set_defaults(func=gmm)


def gmm(args) -> int:
    points = read_model(ScatterPointSet, args.points)
    mixture, trace = fit_gmm_traced(points, MixtureConfig(K=args.k, seed=args.seed))
    LOGGER.info(
        f"EM stopped after {trace.iterations} iterations (converged={trace.converged}), "
        f"log-likelihood {trace.log_likelihoods[-1]:.6f}, "
        f"{sum(c.singular for c in mixture.components)} singular components"
    )
    emit(mixture.to_json(), args.out)
    return 0
