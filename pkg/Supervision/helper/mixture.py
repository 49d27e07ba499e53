"""Structure distribution of a target: a K-component Gaussian mixture over
scattering-point coordinates.

Means are (x, y) in pixels. EM is unweighted over coordinates; responses
only pick the centre of singular components.
"""
from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from Supervision.helper.exceptions import (
    EmptyPointSet, NotPositiveDefinite, SingularComponentError, TooFewPoints
)
from Supervision.helper.modal import ComponentSchema, MixtureConfig, MixtureSchema, ScatterPointSet
from Supervision.helper.rng import SplitMix64

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: Tuple[float, float]
    cov: Tuple[Tuple[float, float], Tuple[float, float]]
    count: int = 0
    singular: bool = False

    @property
    def mean_vec(self) -> np.ndarray:
        return np.array(self.mean, dtype=np.float64)

    @property
    def cov_mat(self) -> np.ndarray:
        return np.array(self.cov, dtype=np.float64)

    @classmethod
    def from_arrays(cls, weight, mean, cov, count=0, singular=False) -> "GaussianComponent":
        mean = np.asarray(mean, dtype=np.float64)
        cov = np.asarray(cov, dtype=np.float64)
        return cls(
            weight=float(weight),
            mean=(float(mean[0]), float(mean[1])),
            cov=((float(cov[0, 0]), float(cov[0, 1])), (float(cov[1, 0]), float(cov[1, 1]))),
            count=int(count),
            singular=bool(singular),
        )


@dataclass(frozen=True)
class GaussianMixture:
    components: Tuple[GaussianComponent, ...]

    @property
    def K(self) -> int:
        return len(self.components)

    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components], dtype=np.float64)

    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components], dtype=np.float64)

    def covariances(self) -> np.ndarray:
        return np.array([c.cov for c in self.components], dtype=np.float64)

    def to_json(self) -> str:
        return MixtureSchema(components=[
            ComponentSchema(weight=c.weight, mean=c.mean, cov=c.cov, count=c.count, singular=c.singular)
            for c in self.components
        ]).model_dump_json()

    @classmethod
    def from_json(cls, text) -> "GaussianMixture":
        schema = MixtureSchema.model_validate_json(text)
        return cls(tuple(
            GaussianComponent(weight=c.weight, mean=c.mean, cov=c.cov, count=c.count, singular=c.singular)
            for c in schema.components
        ))


@dataclass
class EMTrace:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihoods: List[float]
    iterations: int
    converged: bool


# ---------------------------
# EM core
# ---------------------------
def _log_densities(X: np.ndarray, means: np.ndarray, covs: np.ndarray) -> np.ndarray:
    """N x K matrix of ln N(x_n | mu_k, Sigma_k)."""
    out = np.empty((X.shape[0], len(means)), dtype=np.float64)
    for k, (mu, cov) in enumerate(zip(means, covs)):
        try:
            L = linalg.cholesky(cov, lower=True)
        except linalg.LinAlgError:
            raise NotPositiveDefinite(f"Component {k} covariance is not positive-definite: {cov.tolist()}")
        z = linalg.solve_triangular(L, (X - mu).T, lower=True)
        out[:, k] = -0.5 * np.sum(z * z, axis=0) - np.sum(np.log(np.diag(L))) - LOG_2PI
    return out


def _weighted_log_densities(X, weights, means, covs) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return _log_densities(X, means, covs) + log_w


def _e_step(X, weights, means, covs):
    joint = _weighted_log_densities(X, weights, means, covs)
    norm = logsumexp(joint, axis=1)
    return joint - norm[:, None], float(np.sum(norm))


def _floor_eigenvalues(cov: np.ndarray, eps: float) -> np.ndarray:
    # maximiser of the Gaussian M-step objective over {Sigma : eigenvalues >= eps}
    lam, U = np.linalg.eigh(cov)
    if lam.min() >= eps:
        return cov
    floored = (U * np.maximum(lam, eps)) @ U.T
    return 0.5 * (floored + floored.T)


def _m_step(X, resp, prev_means, prev_covs, reg_eps):
    N = X.shape[0]
    nk = resp.sum(axis=0)
    weights = nk / N
    weights = weights / weights.sum()
    means = prev_means.copy()
    covs = prev_covs.copy()
    for k in range(resp.shape[1]):
        if nk[k] <= np.finfo(np.float64).tiny:
            continue
        means[k] = resp[:, k] @ X / nk[k]
        diff = X - means[k]
        scatter = (resp[:, k, None] * diff).T @ diff / nk[k]
        covs[k] = _floor_eigenvalues(0.5 * (scatter + scatter.T), reg_eps)
    return weights, means, covs


def kmeans_plus_plus(X: np.ndarray, K: int, rng: SplitMix64) -> np.ndarray:
    """Indices of K seeding points; first uniform, then D^2-weighted."""
    chosen = [rng.below(len(X))]
    d2 = np.sum((X - X[chosen[0]]) ** 2, axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total <= 0:
            idx = rng.below(len(X))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.uniform() * total, side="right"))
            idx = min(idx, len(X) - 1)
        chosen.append(idx)
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(chosen, dtype=np.int64)


def expectation_maximization(X: np.ndarray, cfg: MixtureConfig) -> EMTrace:
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[0]
    if N == 0:
        raise EmptyPointSet()
    if N < cfg.K:
        raise TooFewPoints(f"{N} points cannot support K={cfg.K} components")

    centers = X[kmeans_plus_plus(X, cfg.K, SplitMix64(cfg.seed))]
    # start from the nearest-centre partition
    labels = np.argmin(((X[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    resp = np.zeros((N, cfg.K), dtype=np.float64)
    resp[np.arange(N), labels] = 1.0
    spread = np.cov(X.T, bias=True) if N > 1 else np.zeros((2, 2))
    init_cov = _floor_eigenvalues(np.atleast_2d(spread), cfg.reg_eps)
    weights, means, covs = _m_step(X, resp, centers.copy(), np.repeat(init_cov[None], cfg.K, axis=0), cfg.reg_eps)

    log_resp, ll = _e_step(X, weights, means, covs)
    history = [ll]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        weights, means, covs = _m_step(X, np.exp(log_resp), means, covs, cfg.reg_eps)
        log_resp, new_ll = _e_step(X, weights, means, covs)
        history.append(new_ll)
        if new_ll - ll < cfg.tol:
            converged = True
            break
        ll = new_ll

    return EMTrace(weights, means, covs, history, iterations, converged)


# ---------------------------
# Public operations
# ---------------------------
def hard_assign(mixture: GaussianMixture, points: ScatterPointSet) -> np.ndarray:
    """Max-posterior component per point (ties go to the lower index)."""
    if len(points) == 0:
        return np.zeros(0, dtype=np.int64)
    joint = _weighted_log_densities(points.coordinates(), mixture.weights(), mixture.means(), mixture.covariances())
    return np.argmax(joint, axis=1)


def log_likelihood(mixture: GaussianMixture, points: ScatterPointSet) -> float:
    if len(points) == 0:
        raise EmptyPointSet()
    joint = _weighted_log_densities(points.coordinates(), mixture.weights(), mixture.means(), mixture.covariances())
    return float(np.sum(logsumexp(joint, axis=1)))


def claim_orphans(mixture: GaussianMixture, points: ScatterPointSet, labels: np.ndarray) -> np.ndarray:
    """Give every component at least one hard-assigned point.

    An empty component takes the point it finds most likely among
    components that own more than one point. Needs K <= len(points).
    """
    labels = labels.copy()
    counts = np.bincount(labels, minlength=mixture.K)
    if counts.min() > 0:
        return labels
    log_dens = _log_densities(points.coordinates(), mixture.means(), mixture.covariances())
    for k in np.flatnonzero(counts == 0):
        donors = np.flatnonzero(counts[labels] > 1)
        if donors.size == 0:
            raise SingularComponentError(int(k))
        chosen = donors[np.argmax(log_dens[donors, k])]
        counts[labels[chosen]] -= 1
        labels[chosen] = k
        counts[k] = 1
    return labels


def apply_singular_rule(mixture: GaussianMixture, points: ScatterPointSet,
                        threshold: int = 4, singular_cov: float = 2.0, labels=None) -> GaussianMixture:
    """Replace components with fewer than `threshold` hard-assigned points.

    The replacement is centred on the strongest assigned point with
    covariance diag(singular_cov, singular_cov); the weight is kept.
    """
    if labels is None:
        labels = hard_assign(mixture, points)
    components = []
    for k, comp in enumerate(mixture.components):
        if comp.count >= threshold:
            components.append(comp)
            continue
        members = [p for p, label in zip(points.points, labels) if label == k]
        if not members:
            raise SingularComponentError(k)
        # points are kept sorted by strength
        strongest = members[0]
        components.append(replace(
            comp,
            mean=(float(strongest.x), float(strongest.y)),
            cov=((singular_cov, 0.0), (0.0, singular_cov)),
            singular=True,
        ))
    return GaussianMixture(tuple(components))


def sort_by_weight(mixture: GaussianMixture) -> GaussianMixture:
    return GaussianMixture(tuple(sorted(
        mixture.components, key=lambda c: (-c.weight, c.mean[0], c.mean[1])
    )))


def fit_gmm(points: ScatterPointSet, cfg: MixtureConfig = MixtureConfig()) -> GaussianMixture:
    mixture, _ = fit_gmm_traced(points, cfg)
    return mixture


def fit_gmm_traced(points: ScatterPointSet, cfg: MixtureConfig = MixtureConfig()):
    if len(points) == 0:
        raise EmptyPointSet()
    trace = expectation_maximization(points.coordinates(), cfg)
    fitted = GaussianMixture(tuple(
        GaussianComponent.from_arrays(w, mu, cov)
        for w, mu, cov in zip(trace.weights, trace.means, trace.covariances)
    ))
    labels = claim_orphans(fitted, points, hard_assign(fitted, points))
    counts = np.bincount(labels, minlength=cfg.K)
    fitted = GaussianMixture(tuple(
        replace(c, count=int(n)) for c, n in zip(fitted.components, counts)
    ))
    fitted = apply_singular_rule(fitted, points, cfg.singular_threshold, cfg.singular_cov, labels)
    return sort_by_weight(fitted), trace
