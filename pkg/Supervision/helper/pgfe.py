"""Physics-guided feature enhancement: cross-attention of pooled physics
features (queries) over pooled neck features (keys and values), followed by
linear and feed-forward residual paths.

Layout conventions:
  * feature maps are C x H x W
  * tokens are T x C with T = ceil(H / window) * ceil(W / window), row-major
  * Linear and FFN act per position over channels: y = x @ W + b with W
    stored (in x out)
  * bilinear resampling uses half-pixel centres (align_corners=False):
        src = (dst + 0.5) * (in / out) - 0.5, clamped to [0, in - 1]
  * max pooling routes its gradient to the first maximal element of the
    window scanned row-major; the rectifier derivative is 0 at 0
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Tuple

import numpy as np

from Supervision.helper.exceptions import ChannelMismatch, InvalidInput, NonFiniteInput, ShapeMismatch
from Supervision.helper.rng import derive_seed

SCALAR_FIELDS = ("lam", "alpha", "beta", "gamma", "delta")
MATRIX_FIELDS = ("W_q", "W_lin", "b_lin", "W1", "b1", "W2", "b2")


@dataclass(frozen=True)
class FeatureMap:
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 3 or min(values.shape) < 1:
            raise ShapeMismatch(f"Feature map must be C x H x W with positive dims, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput()
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class FusionParams:
    lam: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    W_q: np.ndarray
    W_lin: np.ndarray
    b_lin: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in SCALAR_FIELDS:
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in MATRIX_FIELDS:
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=np.float64))
        C, Ch = self.W_lin.shape[0], self.W1.shape[1] if self.W1.ndim == 2 else 0
        expected = {
            "W_q": (self.W_q.shape[0] if self.W_q.ndim == 2 else -1, C),
            "W_lin": (C, C),
            "b_lin": (C,),
            "W1": (C, Ch),
            "b1": (Ch,),
            "W2": (Ch, C),
            "b2": (C,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape or min(shape) < 1:
                raise ShapeMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        values = [getattr(self, n) for n in SCALAR_FIELDS] + [getattr(self, n) for n in MATRIX_FIELDS]
        if not all(np.all(np.isfinite(v)) for v in values):
            raise NonFiniteInput("Fusion parameters must be finite")

    @property
    def channels(self) -> int:
        return self.W_lin.shape[0]

    @property
    def physics_channels(self) -> int:
        return self.W_q.shape[0]

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    @property
    def clamped_lam(self) -> float:
        return min(max(self.lam, 0.0), 1.0)

    @classmethod
    def initialize(cls, channels: int, physics_channels: int, seed: int = 0, hidden: int = None) -> "FusionParams":
        """Start close to the residual bypass so enhancement is learned on top of it."""
        hidden = hidden or 2 * channels
        rng = np.random.default_rng(seed)

        def dense(n_in, n_out):
            return rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, n_out))

        return cls(
            lam=0.5, alpha=1.0, beta=0.1, gamma=1.0, delta=1.0,
            W_q=dense(physics_channels, channels),
            W_lin=dense(channels, channels), b_lin=np.zeros(channels),
            W1=dense(channels, hidden), b1=np.zeros(hidden),
            W2=dense(hidden, channels), b2=np.zeros(channels),
        )


@dataclass
class FusionGradients:
    lam: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    W_q: np.ndarray
    W_lin: np.ndarray
    b_lin: np.ndarray
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    f_n: np.ndarray
    f_p: np.ndarray


# ---------------------------
# Building blocks
# ---------------------------
def _values(f) -> np.ndarray:
    return f.values if isinstance(f, FeatureMap) else np.asarray(f, dtype=np.float64)


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    R = np.zeros((n_out, n_in))
    src = np.clip((np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    rows = np.arange(n_out)
    np.add.at(R, (rows, i0), 1.0 - frac)
    np.add.at(R, (rows, i1), frac)
    return R


def _resample(x: np.ndarray, height: int, width: int) -> np.ndarray:
    _, h, w = x.shape
    if (h, w) == (height, width):
        return x.copy()
    return _interp_matrix(h, height) @ x @ _interp_matrix(w, width).T


def _resample_back(grad: np.ndarray, height: int, width: int) -> np.ndarray:
    _, h, w = grad.shape
    if (h, w) == (height, width):
        return grad
    return _interp_matrix(height, h).T @ grad @ _interp_matrix(width, w)


def resample_features(f, target_h: int, target_w: int) -> FeatureMap:
    if target_h < 1 or target_w < 1:
        raise ShapeMismatch(f"Target dims must be positive, got {target_h}x{target_w}")
    return FeatureMap(_resample(_values(f), target_h, target_w))


@dataclass
class _PoolCache:
    window: int
    grid: Tuple[int, int]
    argmax: np.ndarray
    count: np.ndarray
    offset: np.ndarray


def _pool(x: np.ndarray, lam: float, window: int):
    C, H, W = x.shape
    gh, gw = -(-H // window), -(-W // window)
    pad = ((0, gh * window - H), (0, gw * window - W))
    valid = np.pad(np.ones((H, W), dtype=bool), pad)
    padded = np.pad(x, ((0, 0),) + pad, constant_values=-np.inf)

    blocks = padded.reshape(C, gh, window, gw, window).transpose(0, 1, 3, 2, 4).reshape(C, gh, gw, -1)
    mask = valid.reshape(gh, window, gw, window).transpose(0, 2, 1, 3).reshape(gh, gw, -1)
    argmax = blocks.argmax(axis=-1)
    peak = np.take_along_axis(blocks, argmax[..., None], axis=-1)[..., 0]
    count = mask.sum(axis=-1)
    # mean - max, exact zero on flat windows
    offset = np.where(mask, blocks - peak[..., None], 0.0).sum(axis=-1) / count

    if lam == 1.0:
        pooled = np.where(offset == 0.0, peak, np.where(mask, blocks, 0.0).sum(axis=-1) / count)
    else:
        pooled = peak + lam * offset
    tokens = pooled.reshape(C, gh * gw).T
    return tokens, _PoolCache(window, (gh, gw), argmax, count, offset)


def _pool_back(d_tokens: np.ndarray, lam: float, cache: _PoolCache, height: int, width: int):
    C = d_tokens.shape[1]
    gh, gw = cache.grid
    w = cache.window
    g = d_tokens.T.reshape(C, gh, gw)
    d_lam = float(np.sum(g * cache.offset))

    spread = lam * g / cache.count
    dx = np.repeat(np.repeat(spread, w, axis=1), w, axis=2)[:, :height, :width].copy()
    ci, gi, gj = np.indices((C, gh, gw))
    rows = gi * w + cache.argmax // w
    cols = gj * w + cache.argmax % w
    np.add.at(dx, (ci, rows, cols), (1.0 - lam) * g)
    return dx, d_lam


def pooled_compress(f, lam: float, window: int) -> np.ndarray:
    """lam * window mean + (1 - lam) * window max per channel, as T x C tokens."""
    if window < 1:
        raise InvalidInput(f"window must be >= 1, got {window}")
    tokens, _ = _pool(_values(f), min(max(lam, 0.0), 1.0), window)
    return tokens


def attention_weights(Q: np.ndarray, K: np.ndarray, d_k: float) -> np.ndarray:
    scores = Q @ K.T / np.sqrt(d_k)
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_attention(Q, K, V, d_k: float) -> np.ndarray:
    Q, K, V = (np.asarray(a, dtype=np.float64) for a in (Q, K, V))
    if Q.shape[1] != K.shape[1] or K.shape[0] != V.shape[0]:
        raise ShapeMismatch(f"Inconsistent attention shapes Q{Q.shape} K{K.shape} V{V.shape}")
    if d_k <= 0:
        raise InvalidInput(f"d_k must be positive, got {d_k}")
    return attention_weights(Q, K, d_k) @ V


# ---------------------------
# Fusion block
# ---------------------------
def _check_inputs(f_n: FeatureMap, f_p: FeatureMap, params: FusionParams, window: int):
    if window < 1:
        raise InvalidInput(f"window must be >= 1, got {window}")
    if f_n.channels != params.channels:
        raise ChannelMismatch(f"Neck features have {f_n.channels} channels, parameters expect {params.channels}")
    if f_p.channels != params.physics_channels:
        raise ChannelMismatch(
            f"Physics features have {f_p.channels} channels, projection expects {params.physics_channels}"
        )


def _forward(f_n, f_p, params: FusionParams, window: int):
    f_n = f_n if isinstance(f_n, FeatureMap) else FeatureMap(f_n)
    f_p = f_p if isinstance(f_p, FeatureMap) else FeatureMap(f_p)
    _check_inputs(f_n, f_p, params, window)
    C, H, W = f_n.values.shape
    lam = params.clamped_lam

    resampled = _resample(f_p.values, H, W)
    proj = np.einsum("pc,phw->chw", params.W_q, resampled)
    q, q_cache = _pool(proj, lam, window)
    kv, n_cache = _pool(f_n.values, lam, window)
    weights = attention_weights(q, kv, C)
    z_att = weights @ kv

    gh, gw = n_cache.grid
    up = _resample(z_att.T.reshape(C, gh, gw), H, W).reshape(C, -1).T
    x_n = f_n.values.reshape(C, -1).T
    lin = up @ params.W_lin + params.b_lin
    z_temp = params.beta * lin + params.alpha * x_n
    pre = z_temp @ params.W1 + params.b1
    act = np.maximum(pre, 0.0)
    ffn = act @ params.W2 + params.b2
    out = params.delta * ffn + params.gamma * z_temp

    cache = dict(
        f_n=f_n, f_p=f_p, lam=lam, resampled=resampled, q=q, q_cache=q_cache, kv=kv, n_cache=n_cache,
        weights=weights, up=up, x_n=x_n, lin=lin, z_temp=z_temp, pre=pre, act=act, ffn=ffn,
    )
    return out.T.reshape(C, H, W), cache


def pgfe_forward(f_n, f_p, params: FusionParams, window: int = 2) -> FeatureMap:
    out, _ = _forward(f_n, f_p, params, window)
    return FeatureMap(out)


def pgfe_grad(f_n, f_p, params: FusionParams, window: int, upstream) -> FusionGradients:
    out, c = _forward(f_n, f_p, params, window)
    g_out = _values(upstream)
    if g_out.shape != out.shape:
        raise ShapeMismatch(f"Upstream gradient {g_out.shape} does not match output {out.shape}")
    C, H, W = out.shape
    G = g_out.reshape(C, -1).T
    lam, kv, q, weights = c["lam"], c["kv"], c["q"], c["weights"]

    d_delta = float(np.sum(G * c["ffn"]))
    d_gamma = float(np.sum(G * c["z_temp"]))
    d_ffn = params.delta * G
    d_z = params.gamma * G

    dW2 = c["act"].T @ d_ffn
    db2 = d_ffn.sum(axis=0)
    d_pre = (d_ffn @ params.W2.T) * (c["pre"] > 0)
    dW1 = c["z_temp"].T @ d_pre
    db1 = d_pre.sum(axis=0)
    d_z = d_z + d_pre @ params.W1.T

    d_beta = float(np.sum(d_z * c["lin"]))
    d_alpha = float(np.sum(d_z * c["x_n"]))
    d_lin = params.beta * d_z
    dW_lin = c["up"].T @ d_lin
    db_lin = d_lin.sum(axis=0)
    d_up = (d_lin @ params.W_lin.T).T.reshape(C, H, W)

    gh, gw = c["n_cache"].grid
    d_att = _resample_back(d_up, gh, gw).reshape(C, -1).T
    d_weights = d_att @ kv.T
    d_kv = weights.T @ d_att
    d_scores = weights * (d_weights - np.sum(d_weights * weights, axis=1, keepdims=True))
    scale = 1.0 / np.sqrt(C)
    d_q = d_scores @ kv * scale
    d_kv = d_kv + d_scores.T @ q * scale

    d_fn_pool, d_lam_n = _pool_back(d_kv, lam, c["n_cache"], H, W)
    d_proj, d_lam_q = _pool_back(d_q, lam, c["q_cache"], H, W)
    d_lam = d_lam_n + d_lam_q if 0.0 <= params.lam <= 1.0 else 0.0

    dW_q = np.einsum("phw,chw->pc", c["resampled"], d_proj)
    d_resampled = np.einsum("pc,chw->phw", params.W_q, d_proj)
    f_p = c["f_p"]
    d_fp = _resample_back(d_resampled, f_p.height, f_p.width)
    d_fn = (params.alpha * d_z).T.reshape(C, H, W) + d_fn_pool

    return FusionGradients(
        lam=d_lam, alpha=d_alpha, beta=d_beta, gamma=d_gamma, delta=d_delta,
        W_q=dW_q, W_lin=dW_lin, b_lin=db_lin, W1=dW1, b1=db1, W2=dW2, b2=db2,
        f_n=d_fn, f_p=d_fp,
    )


def add_fusion(f_n, f_p) -> FeatureMap:
    """Parameter-free baseline: resample physics features and add."""
    f_n, f_p = FeatureMap(_values(f_n)), FeatureMap(_values(f_p))
    if f_n.channels != f_p.channels:
        raise ChannelMismatch(f"Cannot add {f_p.channels}-channel features to {f_n.channels}-channel features")
    return FeatureMap(f_n.values + _resample(f_p.values, f_n.height, f_n.width))


@dataclass(frozen=True)
class NinParams:
    """Per-position two-layer MLP over concatenated neck and physics channels."""
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "b2"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=np.float64))
        if self.W1.ndim != 2 or self.W2.ndim != 2:
            raise ShapeMismatch(f"NIN weights must be matrices, got {self.W1.shape} and {self.W2.shape}")
        hidden, out = self.W1.shape[1], self.W2.shape[1]
        if self.b1.shape != (hidden,) or self.W2.shape[0] != hidden or self.b2.shape != (out,):
            raise ShapeMismatch(
                f"Inconsistent NIN shapes W1{self.W1.shape} b1{self.b1.shape} W2{self.W2.shape} b2{self.b2.shape}"
            )
        if not all(np.all(np.isfinite(getattr(self, n))) for n in ("W1", "b1", "W2", "b2")):
            raise NonFiniteInput("NIN parameters must be finite")

    @property
    def in_channels(self) -> int:
        return self.W1.shape[0]

    @property
    def channels(self) -> int:
        return self.W2.shape[1]

    @classmethod
    def initialize(cls, channels: int, physics_channels: int, seed: int = 0, hidden: int = None) -> "NinParams":
        hidden = hidden or 2 * channels
        rng = np.random.default_rng(seed)
        n_in = channels + physics_channels
        return cls(
            W1=rng.normal(0.0, 1.0 / np.sqrt(n_in), size=(n_in, hidden)), b1=np.zeros(hidden),
            W2=rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, channels)), b2=np.zeros(channels),
        )


def nin_fusion(f_n, f_p, params: NinParams) -> FeatureMap:
    """Concatenate resampled physics features with neck features, then a 1x1 MLP per position."""
    f_n, f_p = FeatureMap(_values(f_n)), FeatureMap(_values(f_p))
    if f_n.channels + f_p.channels != params.in_channels:
        raise ChannelMismatch(
            f"{f_n.channels}+{f_p.channels} concatenated channels, NIN expects {params.in_channels}"
        )
    if params.channels != f_n.channels:
        raise ChannelMismatch(f"NIN outputs {params.channels} channels, neck features have {f_n.channels}")
    stacked = np.concatenate([f_n.values, _resample(f_p.values, f_n.height, f_n.width)], axis=0)
    x = stacked.reshape(params.in_channels, -1).T
    hidden = np.maximum(x @ params.W1 + params.b1, 0.0)
    out = hidden @ params.W2 + params.b2
    return FeatureMap(out.T.reshape(f_n.channels, f_n.height, f_n.width))


# ---------------------------
# Gradient verification
# ---------------------------
@dataclass
class GradientCheck:
    seed: int
    max_rel_error: float
    per_field: Dict[str, float] = field(default_factory=dict)


@dataclass
class FuseCheckReport:
    seed: int
    instances: int
    max_rel_error: float
    worst_field: str
    bypass_exact: bool
    softmax_deviation: float
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < 1e-4 and self.bypass_exact and self.softmax_deviation <= 1e-12


RELATIVE_ERROR_METRIC = "|analytic - numeric| / max(1, |analytic|, |numeric|)"


def relative_error(analytic, numeric) -> float:
    """Relative error with a unit floor on the denominator; entries below 1 are compared absolutely."""
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def random_instance(seed: int, channels=3, height=4, width=4, physics_channels=2, physics_height=3, physics_width=3):
    rng = np.random.default_rng(seed)
    f_n = FeatureMap(rng.normal(size=(channels, height, width)))
    f_p = FeatureMap(rng.normal(size=(physics_channels, physics_height, physics_width)))
    base = FusionParams.initialize(channels, physics_channels, seed=int(rng.integers(2 ** 32)))
    params = replace(
        base,
        lam=rng.uniform(0.2, 0.8), alpha=rng.uniform(0.5, 1.5), beta=rng.uniform(0.5, 1.5),
        gamma=rng.uniform(0.5, 1.5), delta=rng.uniform(0.5, 1.5),
        b_lin=rng.normal(0.0, 0.1, size=channels), b1=rng.normal(0.0, 0.1, size=base.hidden),
        b2=rng.normal(0.0, 0.1, size=channels),
    )
    upstream = rng.normal(size=(channels, height, width))
    return f_n, f_p, params, upstream


def gradient_check(seed: int, window: int = 2, step: float = 1e-5, **dims) -> GradientCheck:
    """Compare pgfe_grad against central differences of sum(upstream * output)."""
    f_n, f_p, params, upstream = random_instance(seed, **dims)
    grads = pgfe_grad(f_n, f_p, params, window, upstream)

    def objective(fn, fp, p):
        out, _ = _forward(fn, fp, p, window)
        return float(np.sum(upstream * out))

    per_field = {}
    for name in SCALAR_FIELDS:
        value = getattr(params, name)
        plus = objective(f_n, f_p, replace(params, **{name: value + step}))
        minus = objective(f_n, f_p, replace(params, **{name: value - step}))
        per_field[name] = relative_error(getattr(grads, name), (plus - minus) / (2 * step))

    def sweep(array, rebuild, analytic):
        worst = 0.0
        for idx in np.ndindex(array.shape):
            plus, minus = array.copy(), array.copy()
            plus[idx] += step
            minus[idx] -= step
            numeric = (objective(*rebuild(plus)) - objective(*rebuild(minus))) / (2 * step)
            worst = max(worst, relative_error(analytic[idx], numeric))
        return worst

    for name in MATRIX_FIELDS:
        per_field[name] = sweep(
            getattr(params, name), lambda a, n=name: (f_n, f_p, replace(params, **{n: a})), getattr(grads, name)
        )
    per_field["f_n"] = sweep(f_n.values, lambda a: (FeatureMap(a), f_p, params), grads.f_n)
    per_field["f_p"] = sweep(f_p.values, lambda a: (f_n, FeatureMap(a), params), grads.f_p)

    return GradientCheck(seed=seed, max_rel_error=max(per_field.values()), per_field=per_field)


def fuse_check(seed: int, instances: int = 20, window: int = 2) -> FuseCheckReport:
    checks = []
    bypass_exact = True
    softmax_deviation = 0.0
    for i in range(instances):
        instance_seed = derive_seed(seed, f"fuse-check/{i}")
        checks.append(gradient_check(instance_seed, window=window))

        f_n, f_p, params, _ = random_instance(instance_seed)
        bypass = replace(params, alpha=1.0, gamma=1.0, beta=0.0, delta=0.0)
        bypass_exact &= bool(np.array_equal(pgfe_forward(f_n, f_p, bypass, window).values, f_n.values))

        _, cache = _forward(f_n, f_p, params, window)
        softmax_deviation = max(softmax_deviation, float(np.max(np.abs(cache["weights"].sum(axis=1) - 1.0))))

    worst = max(checks, key=lambda c: c.max_rel_error)
    worst_field = max(worst.per_field, key=worst.per_field.get)
    return FuseCheckReport(
        seed=seed, instances=instances, max_rel_error=worst.max_rel_error,
        worst_field=f"{worst_field} (instance seed {worst.seed})",
        bypass_exact=bypass_exact, softmax_deviation=softmax_deviation, checks=checks,
    )
