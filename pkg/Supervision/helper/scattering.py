import numpy as np
from scipy import ndimage

from Supervision.helper.exceptions import InvalidInput
from Supervision.helper.imaging import ImageChip
from Supervision.helper.modal import HarrisConfig, ScatterPoint, ScatterPointSet, point_order


def _gradients(values: np.ndarray):
    # central differences, replicate border
    padded = np.pad(values, 1, mode="edge")
    ix = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    iy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return ix, iy


def _harris(values: np.ndarray, sigma: float, k: float) -> np.ndarray:
    ix, iy = _gradients(values)
    sxx = ndimage.gaussian_filter(ix * ix, sigma, mode="nearest")
    syy = ndimage.gaussian_filter(iy * iy, sigma, mode="nearest")
    sxy = ndimage.gaussian_filter(ix * iy, sigma, mode="nearest")
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def harris_response(chip: ImageChip, sigma: float, k: float = 0.04) -> np.ndarray:
    """det(M) - k * trace(M)^2 of the Gaussian-weighted structure tensor."""
    if sigma <= 0:
        raise InvalidInput(f"sigma must be positive, got {sigma}")
    return _harris(chip.values, sigma, k)


def local_maxima(response: np.ndarray) -> np.ndarray:
    """Boolean mask of strictly positive 3x3 local maxima."""
    peak = ndimage.maximum_filter(response, size=3, mode="nearest")
    return (response == peak) & (response > 0)


def select_scales(values: np.ndarray, scales) -> np.ndarray:
    """Per-pixel index into `scales` maximising |sigma^2 * LoG|; ties keep the finer scale."""
    laplace = np.stack([
        np.abs(s * s * ndimage.gaussian_laplace(values, s, mode="nearest")) for s in scales
    ])
    return np.argmax(laplace, axis=0)


def suppress(candidates: list, radius: float, limit: int) -> list:
    """Greedy NMS in (-response, y, x) order; a point within `radius` of a kept one is dropped."""
    kept = []
    r2 = radius * radius
    for p in sorted(candidates, key=point_order):
        if all((p.x - q.x) ** 2 + (p.y - q.y) ** 2 > r2 for q in kept):
            kept.append(p)
            if len(kept) == limit:
                break
    return kept


def extract_points(chip: ImageChip, cfg: HarrisConfig = HarrisConfig()) -> ScatterPointSet:
    values = chip.values
    if values.max() == values.min():
        return ScatterPointSet()

    responses = np.stack([_harris(values, s, cfg.k) for s in cfg.scales])
    maxima = np.stack([local_maxima(r) for r in responses])
    selected = select_scales(values, cfg.scales)[None]

    response = np.take_along_axis(responses, selected, axis=0)[0]
    is_candidate = np.take_along_axis(maxima, selected, axis=0)[0]
    if not is_candidate.any():
        return ScatterPointSet()

    floor = cfg.response_floor * response[is_candidate].max()
    rows, cols = np.nonzero(is_candidate & (response >= floor))
    candidates = [
        ScatterPoint(x=int(c), y=int(r), response=float(response[r, c]), scale=float(cfg.scales[selected[0, r, c]]))
        for r, c in zip(rows, cols)
    ]
    return ScatterPointSet(points=suppress(candidates, cfg.nms_radius, cfg.max_points))


def points_within(points: ScatterPointSet, bbox) -> ScatterPointSet:
    x_min, y_min, x_max, y_max = bbox
    return ScatterPointSet(points=[
        p for p in points.points if x_min <= p.x <= x_max and y_min <= p.y <= y_max
    ])
