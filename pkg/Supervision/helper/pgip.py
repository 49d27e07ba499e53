from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from Supervision.helper.exceptions import InvalidInput, ShapeMismatch
from Supervision.helper.modal import FocalConfig, InstanceAnnotation, PgipSettings
from Supervision.logger import LOGGER

STRIDES = (4, 8, 16, 32)


@dataclass(frozen=True)
class HeadSpec:
    stride: int
    map_height: int
    map_width: int
    image_height: int
    image_width: int

    @classmethod
    def for_image(cls, stride: int, height: int, width: int) -> "HeadSpec":
        if stride not in STRIDES:
            raise InvalidInput(f"Head stride must be one of {STRIDES}, got {stride}")
        return cls(stride, -(-height // stride), -(-width // stride), height, width)

    def cell(self, x: float, y: float) -> Tuple[int, int]:
        r = min(max(int(y // self.stride), 0), self.map_height - 1)
        c = min(max(int(x // self.stride), 0), self.map_width - 1)
        return r, c

    def centres(self) -> Tuple[np.ndarray, np.ndarray]:
        """Cell centres (x, y) in image pixels; edge cells are clipped to the image first."""
        s = self.stride
        cols = np.arange(self.map_width)
        rows = np.arange(self.map_height)
        cx = (cols * s + np.minimum((cols + 1) * s, self.image_width)) / 2.0
        cy = (rows * s + np.minimum((rows + 1) * s, self.image_height)) / 2.0
        return cx, cy


@dataclass(frozen=True)
class BinaryTargetMap:
    values: np.ndarray
    empty_instances: Tuple[int, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values)
        if not np.isin(values, (0, 1)).all():
            raise InvalidInput("Binary target map entries must be 0 or 1")
        object.__setattr__(self, "values", values.astype(np.uint8))

    @property
    def positives(self) -> int:
        return int(self.values.sum())


def _pooled(instance: InstanceAnnotation, head: HeadSpec):
    """Per-cell max response of one instance, -inf where no point falls."""
    pooled = np.full((head.map_height, head.map_width), -np.inf)
    for p in instance.points.points:
        r, c = head.cell(p.x, p.y)
        pooled[r, c] = max(pooled[r, c], p.response)
    return pooled


def _threshold_targets(instances, head, threshold_of) -> BinaryTargetMap:
    out = np.zeros((head.map_height, head.map_width), dtype=np.uint8)
    empty = []
    for j, instance in enumerate(instances):
        if len(instance.points) == 0:
            LOGGER.warning(f"Instance {j} with bbox {instance.bbox} has no scattering points")
            empty.append(j)
            continue
        pooled = _pooled(instance, head)
        out[pooled >= threshold_of(instance)] = 1
    return BinaryTargetMap(out, tuple(empty))


def pgip_target_adaptive(instances: Sequence[InstanceAnnotation], head: HeadSpec, eta: float) -> BinaryTargetMap:
    """Cells whose pooled response reaches eta times the instance maximum."""
    if not 0.0 <= eta <= 1.0:
        raise InvalidInput(f"eta must lie in [0, 1], got {eta}")
    return _threshold_targets(instances, head, lambda inst: eta * inst.points.responses().max())


def pgip_target_truncated(instances: Sequence[InstanceAnnotation], head: HeadSpec, global_tau: float) -> BinaryTargetMap:
    if global_tau < 0:
        raise InvalidInput(f"global_tau must be >= 0, got {global_tau}")
    return _threshold_targets(instances, head, lambda inst: global_tau)


def pgip_target_hard(instances: Sequence[InstanceAnnotation], head: HeadSpec) -> BinaryTargetMap:
    out = np.zeros((head.map_height, head.map_width), dtype=np.uint8)
    cx, cy = head.centres()
    for instance in instances:
        x_min, y_min, x_max, y_max = instance.bbox
        inside_x = (cx >= x_min) & (cx <= x_max)
        inside_y = (cy >= y_min) & (cy <= y_max)
        out[np.ix_(inside_y, inside_x)] = 1
    return BinaryTargetMap(out)


def pgip_targets(instances, head: HeadSpec, settings: PgipSettings) -> BinaryTargetMap:
    if settings.mode == "hard":
        return pgip_target_hard(instances, head)
    if settings.mode == "truncated":
        return pgip_target_truncated(instances, head, settings.global_tau)
    return pgip_target_adaptive(instances, head, settings.eta)


def focal_loss(prediction, target: Union[BinaryTargetMap, np.ndarray], cfg: FocalConfig = FocalConfig()) -> float:
    """Mean of -alpha_t * (1 - p_t)^gamma * ln(p_t) over cells."""
    t = target.values if isinstance(target, BinaryTargetMap) else np.asarray(target)
    p = np.asarray(prediction, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeMismatch(f"Prediction {p.shape} and target {t.shape} differ")
    p = np.clip(p, cfg.epsilon, 1.0 - cfg.epsilon)
    p_t = np.where(t == 1, p, 1.0 - p)
    return float(np.mean(-cfg.alpha_t * (1.0 - p_t) ** cfg.gamma * np.log(p_t)))


def pgip_loss(per_head: List[tuple], cfg: FocalConfig = FocalConfig()) -> float:
    if not per_head:
        raise InvalidInput("pgip_loss needs at least one head")
    return float(sum(focal_loss(prediction, target, cfg) for prediction, target in per_head))
