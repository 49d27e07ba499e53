import math
from dataclasses import dataclass
from typing import List, Tuple, Union

import numpy as np

from Supervision.helper.exceptions import InvalidInput, NotPositiveDefinite, ShapeMismatch
from Supervision.helper.mixture import GaussianComponent, GaussianMixture, sort_by_weight

# squared Mahalanobis radius of the support (three sigma, inclusive)
SUPPORT_D2 = 9.0


@dataclass
class HeatmapStack:
    """K x H x W targets, channel k is component k of the weight-sorted mixture."""
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ShapeMismatch(f"Heatmap stack must be K x H x W, got shape {self.values.shape}")

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def _precision(cov) -> Tuple[float, float, float]:
    a, b, c = float(cov[0][0]), float(cov[0][1]), float(cov[1][1])
    det = a * c - b * b
    if b != float(cov[1][0]) or a <= 0 or det <= 0 or not math.isfinite(det):
        raise NotPositiveDefinite(f"Covariance {cov} is not symmetric positive-definite")
    return c / det, -b / det, a / det


def mahalanobis_sq(cov, dx, dy):
    """(dx, dy) Sigma^-1 (dx, dy)^T with dx along columns and dy along rows."""
    ia, ib, ic = _precision(cov)
    return ia * dx * dx + 2.0 * ib * dx * dy + ic * dy * dy


def component_heatmap(component: GaussianComponent, height: int, width: int) -> np.ndarray:
    """exp(-d^2 / 2) on integer pixel centres, zero where d^2 > 9."""
    mu_x, mu_y = component.mean
    rows, cols = np.indices((height, width), dtype=np.float64)
    d2 = np.maximum(mahalanobis_sq(component.cov, cols - mu_x, rows - mu_y), 0.0)
    values = np.exp(-0.5 * d2)
    values[d2 > SUPPORT_D2] = 0.0
    return values


def _downscale(component: GaussianComponent, stride: int) -> GaussianComponent:
    s = float(stride)
    (a, b), (_, c) = component.cov
    return GaussianComponent(
        weight=component.weight,
        mean=(component.mean[0] / s, component.mean[1] / s),
        cov=((a / (s * s), b / (s * s)), (b / (s * s), c / (s * s))),
        count=component.count,
        singular=component.singular,
    )


def heatmap_stack(mixture: GaussianMixture, height: int, width: int, stride: int = 1) -> HeatmapStack:
    if stride < 1:
        raise InvalidInput(f"stride must be >= 1, got {stride}")
    out_h, out_w = -(-height // stride), -(-width // stride)
    channels = []
    for comp in sort_by_weight(mixture).components:
        if stride != 1:
            comp = _downscale(comp, stride)
        channels.append(component_heatmap(comp, out_h, out_w))
    return HeatmapStack(np.stack(channels))


def channel_peaks(stack: HeatmapStack) -> List[Tuple[int, int, float]]:
    """(row, col, value) of the first maximum of each channel."""
    peaks = []
    for channel in stack.values:
        r, c = np.unravel_index(int(np.argmax(channel)), channel.shape)
        peaks.append((int(r), int(c), float(channel[r, c])))
    return peaks


def pgssl_loss(target: Union[HeatmapStack, np.ndarray], prediction: Union[HeatmapStack, np.ndarray]) -> float:
    """Mean over channels of the per-channel pixel MSE."""
    t = target.values if isinstance(target, HeatmapStack) else np.asarray(target, dtype=np.float64)
    p = prediction.values if isinstance(prediction, HeatmapStack) else np.asarray(prediction, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 3:
        raise ShapeMismatch(f"Target {t.shape} and prediction {p.shape} differ")
    return float(np.mean(np.mean((t - p) ** 2, axis=(1, 2))))
