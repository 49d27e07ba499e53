from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from Supervision.config import Prep
from Supervision.helper.exceptions import InvalidConfig

SPLITS = ("train", "val", "test")

# SAR-AIRcraft-1.0 categories; sidecar labels may also be free-form strings.
AIRCRAFT_CLASSES = ("A220", "A320/321", "A330", "ARJ21", "Boeing737", "Boeing787", "other")


# ---------------------------
# Scattering Point Schema
# ---------------------------
class ScatterPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: int = Field(ge=0)
    y: int = Field(ge=0)
    response: float = Field(ge=0.0)
    scale: float = Field(default=0.0, ge=0.0)


def point_order(point: ScatterPoint) -> tuple:
    return (-point.response, point.y, point.x)


class ScatterPointSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    points: List[ScatterPoint] = Field(default_factory=list)

    @field_validator("points")
    @classmethod
    def _sorted(cls, points: List[ScatterPoint]) -> List[ScatterPoint]:
        return sorted(points, key=point_order)

    def __len__(self) -> int:
        return len(self.points)

    def coordinates(self) -> np.ndarray:
        """N x 2 float64 array of (x, y)."""
        if not self.points:
            return np.zeros((0, 2), dtype=np.float64)
        return np.array([[p.x, p.y] for p in self.points], dtype=np.float64)

    def responses(self) -> np.ndarray:
        return np.array([p.response for p in self.points], dtype=np.float64)


# ---------------------------
# Detector Settings
# ---------------------------
class HarrisConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: float = Field(default=0.04, ge=0.02, le=0.15)
    scales: List[float] = Field(default_factory=lambda: [1.0, 1.6, 2.56, 4.1], min_length=1)
    nms_radius: float = Field(default=3.0, ge=0.0)
    response_floor: float = Field(default=0.01, gt=0.0, lt=1.0)
    max_points: int = Field(default=64, ge=1)

    @field_validator("scales")
    @classmethod
    def _ascending(cls, scales: List[float]) -> List[float]:
        if any(s <= 0 for s in scales):
            raise ValueError("scales must be positive")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError("scales must be strictly ascending")
        return scales


class MixtureConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    K: int = Field(default=Prep.DEFAULT_K, ge=1)
    max_iters: int = Field(default=200, ge=1)
    tol: float = Field(default=1e-6, gt=0.0)
    reg_eps: float = Field(default=1e-3, gt=0.0)
    singular_threshold: int = Field(default=4, ge=1)
    singular_cov: float = Field(default=2.0, gt=0.0)
    seed: int = Field(default=0, ge=0)


class FocalConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    alpha_t: float = Field(default=0.25, gt=0.0, le=1.0)
    gamma: float = Field(default=2.0, ge=0.0)
    epsilon: float = Field(default=1e-7, gt=0.0, le=1e-3)


class AugmentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    copies: int = Field(default=0, ge=0)
    noise_sigma: float = Field(default=0.02, ge=0.0)
    max_shift: int = Field(default=8, ge=0)
    flip_prob: float = Field(default=0.5, ge=0.0, le=1.0)
    max_rotation_deg: float = Field(default=15.0, ge=0.0, le=180.0)


class HeatmapPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    stride: int = Field(default=1, ge=1)


class PgipSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    strides: List[Literal[4, 8, 16, 32]] = Field(default_factory=lambda: [8, 16, 32], min_length=1)
    eta: float = Field(default=Prep.DEFAULT_ETA, ge=0.0, le=1.0)
    mode: Literal["adaptive", "hard", "truncated"] = "adaptive"
    global_tau: float = Field(default=0.0, ge=0.0)


class SplitRatios(BaseModel):
    model_config = ConfigDict(frozen=True)

    train: float = Field(default=0.75, ge=0.0)
    val: float = Field(default=0.15, ge=0.0)
    test: float = Field(default=0.10, ge=0.0)

    @model_validator(mode="after")
    def _simplex(self):
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")
        return self


class PipelineConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    harris: HarrisConfig = Field(default_factory=HarrisConfig)
    mixture: MixtureConfig = Field(default_factory=MixtureConfig)
    heatmap: HeatmapPolicy = Field(default_factory=HeatmapPolicy)
    pgip: PgipSettings = Field(default_factory=PgipSettings)
    focal: FocalConfig = Field(default_factory=FocalConfig)
    augment: AugmentConfig = Field(default_factory=AugmentConfig)
    split: SplitRatios = Field(default_factory=SplitRatios)
    workers: int = Field(default=Prep.WORKERS, ge=1)
    output_dir: str = Prep.OUTPUT_DIR
    seed: int = Field(default=Prep.SEED, ge=0)


# ---------------------------
# Mixture Schema
# ---------------------------
class ComponentSchema(BaseModel):
    weight: float = Field(ge=0.0, le=1.0)
    mean: Tuple[float, float]
    cov: Tuple[Tuple[float, float], Tuple[float, float]]
    count: int = Field(ge=0)
    singular: bool = False


class MixtureSchema(BaseModel):
    components: List[ComponentSchema] = Field(min_length=1)


# ---------------------------
# Annotation Schema
# ---------------------------
class ObjectAnnotation(BaseModel):
    model_config = ConfigDict(frozen=True)

    bbox: Tuple[float, float, float, float]
    label: str = "other"

    @field_validator("bbox")
    @classmethod
    def _ordered(cls, bbox):
        x_min, y_min, x_max, y_max = bbox
        if not (x_min < x_max and y_min < y_max):
            raise ValueError(f"bbox must satisfy x_min < x_max and y_min < y_max, got {bbox}")
        return bbox


class Sidecar(BaseModel):
    split: Optional[Literal["train", "val", "test"]] = None
    objects: List[ObjectAnnotation] = Field(default_factory=list)


class InstanceAnnotation(BaseModel):
    model_config = ConfigDict(frozen=True)

    bbox: Tuple[float, float, float, float]
    points: ScatterPointSet = Field(default_factory=ScatterPointSet)

    @model_validator(mode="after")
    def _inside(self):
        x_min, y_min, x_max, y_max = self.bbox
        if not (x_min < x_max and y_min < y_max):
            raise ValueError(f"bbox must satisfy x_min < x_max and y_min < y_max, got {self.bbox}")
        for p in self.points.points:
            if not (x_min <= p.x <= x_max and y_min <= p.y <= y_max):
                raise ValueError(f"point ({p.x}, {p.y}) lies outside bbox {self.bbox}")
        return self


class AnnotationsFile(BaseModel):
    height: int = Field(ge=1)
    width: int = Field(ge=1)
    instances: List[InstanceAnnotation] = Field(default_factory=list)


# ---------------------------
# Manifest Schema
# ---------------------------
class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    chip_path: str
    annotations: Optional[List[ObjectAnnotation]] = None
    split: Literal["train", "val", "test"] = "train"


class Manifest(BaseModel):
    model_config = ConfigDict(frozen=True)

    root: str
    entries: List[ManifestEntry] = Field(default_factory=list)


# ---------------------------
# Report Schema
# ---------------------------
class ChipRecord(BaseModel):
    kind: Literal["chip"] = "chip"
    chip: str
    split: str
    ok: bool
    points: int = 0
    stages: dict = Field(default_factory=dict)
    artifacts: List[str] = Field(default_factory=list)


class SummaryRecord(BaseModel):
    kind: Literal["summary"] = "summary"
    total: int
    succeeded: int
    failed: int
    stage_failures: dict = Field(default_factory=dict)
    wall_time: float


def load_pipeline_config(path=None) -> PipelineConfig:
    """Parse a JSON document mirroring PipelineConfig; no path gives the defaults."""
    if path is None:
        return PipelineConfig()
    try:
        with open(path, "rb") as f:
            return PipelineConfig.model_validate_json(f.read())
    except OSError as e:
        raise InvalidConfig(f"Cannot read config {path}: {e}")
    except ValidationError as e:
        raise InvalidConfig(f"Invalid config {path}: {e}")
