import math
from dataclasses import dataclass, field
from io import BytesIO
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage
from skimage.draw import disk, line, polygon

from Supervision.helper.exceptions import (
    ChipNotFound, EmptyRaster, GeometryOutOfBounds, InvalidInput, UnsupportedRaster
)
from Supervision.helper.modal import AugmentConfig, ScatterPoint, ScatterPointSet

MIN_SIDE = 8
DEFAULT_HEIGHT = 256
DEFAULT_WIDTH = 192

GRAY_MODES = {"L", "I", "I;16", "I;16B", "I;16L", "I;16N"}
RASTER_FORMATS = {"PPM", "PNG"}


@dataclass(frozen=True)
class ImageChip:
    """Single-channel amplitude chip, values in [0, 1], row-major (H x W)."""
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise InvalidInput(f"Chip must be 2D, got shape {values.shape}")
        if values.size == 0:
            raise EmptyRaster()
        if values.shape[0] < MIN_SIDE or values.shape[1] < MIN_SIDE:
            raise InvalidInput(f"Chip must be at least {MIN_SIDE}x{MIN_SIDE}, got {values.shape}")
        if not np.all(np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
            raise InvalidInput("Chip values must be finite and lie in [0, 1]")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def normalize(values) -> np.ndarray:
    """Per-chip min-max to [0, 1]; constant input maps to all-zeros."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def load_chip(path) -> ImageChip:
    path = Path(path)
    if not path.is_file():
        raise ChipNotFound(f"Chip file not found: {path}")
    try:
        with Image.open(path) as img:
            if img.format not in RASTER_FORMATS or img.mode not in GRAY_MODES:
                raise UnsupportedRaster(f"{path}: expected 8/16-bit grayscale PGM or PNG, got {img.format} {img.mode}")
            raw = np.asarray(img)
    except UnidentifiedImageError:
        raise UnsupportedRaster(f"{path}: not a recognised raster")
    except (OSError, SyntaxError, ValueError) as e:
        raise UnsupportedRaster(f"{path}: {e}")
    if raw.size == 0:
        raise EmptyRaster(f"{path}: zero-sized image")
    return ImageChip(normalize(raw))


def encode_pgm(chip: ImageChip) -> bytes:
    """8-bit binary PGM (P5) bytes, values rounded from [0, 1] to 0..255."""
    pixels = np.rint(chip.values * 255.0).astype(np.uint8)
    buffer = BytesIO()
    Image.fromarray(pixels).save(buffer, format="PPM")
    return buffer.getvalue()


def save_chip(path, chip: ImageChip) -> None:
    Path(path).write_bytes(encode_pgm(chip))


# ---------------------------
# Synthetic chips
# ---------------------------
@dataclass(frozen=True)
class Segment:
    x0: float
    y0: float
    x1: float
    y1: float
    intensity: float
    width: float = 1.0

    def corners(self) -> list:
        if self.width <= 1.0:
            return [(self.x0, self.y0), (self.x1, self.y1)]
        dx, dy = self.x1 - self.x0, self.y1 - self.y0
        length = math.hypot(dx, dy) or 1.0
        # unit normal scaled to half the width
        nx, ny = -dy / length * self.width / 2.0, dx / length * self.width / 2.0
        return [
            (self.x0 + nx, self.y0 + ny),
            (self.x1 + nx, self.y1 + ny),
            (self.x1 - nx, self.y1 - ny),
            (self.x0 - nx, self.y0 - ny),
        ]


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float
    intensity: float


@dataclass(frozen=True)
class SynthSpec:
    height: int = DEFAULT_HEIGHT
    width: int = DEFAULT_WIDTH
    fuselage: Optional[Segment] = None
    wings: Tuple[Segment, ...] = ()
    engines: Tuple[Disk, ...] = ()
    clutter_sigma: float = 0.0
    seed: int = 0
    extra: Tuple[Segment, ...] = field(default=())

    def segments(self) -> Tuple[Segment, ...]:
        head = (self.fuselage,) if self.fuselage is not None else ()
        return head + tuple(self.wings) + tuple(self.extra)


def _check_spec(spec: SynthSpec) -> None:
    if spec.height < MIN_SIDE or spec.width < MIN_SIDE:
        raise GeometryOutOfBounds(f"Chip must be at least {MIN_SIDE}x{MIN_SIDE}")
    if spec.clutter_sigma < 0:
        raise InvalidInput("clutter_sigma must be >= 0")

    def inside(x, y):
        return 0 <= x <= spec.width - 1 and 0 <= y <= spec.height - 1

    for seg in spec.segments():
        if not 0 < seg.intensity <= 1:
            raise InvalidInput(f"Segment intensity must lie in (0, 1], got {seg.intensity}")
        for x, y in seg.corners():
            if not inside(x, y):
                raise GeometryOutOfBounds(f"Segment corner ({x:.1f}, {y:.1f}) outside {spec.width}x{spec.height}")
    for d in spec.engines:
        if not 0 < d.intensity <= 1:
            raise InvalidInput(f"Disk intensity must lie in (0, 1], got {d.intensity}")
        if not (inside(d.cx - d.radius, d.cy - d.radius) and inside(d.cx + d.radius, d.cy + d.radius)):
            raise GeometryOutOfBounds(f"Disk at ({d.cx}, {d.cy}) r={d.radius} outside {spec.width}x{spec.height}")


def synth_chip(spec: SynthSpec) -> Tuple[ImageChip, ScatterPointSet]:
    """Render a synthetic airplane chip and its ground-truth scatterers.

    Shapes are composited by maximum; clutter is additive Gaussian noise
    clamped to [0, 1]. Ground truth holds segment corners and disk centres
    with the final chip intensity at that pixel as the response.
    """
    _check_spec(spec)
    shape = (spec.height, spec.width)
    canvas = np.zeros(shape, dtype=np.float64)

    for seg in spec.segments():
        if seg.width <= 1.0:
            rr, cc = line(int(round(seg.y0)), int(round(seg.x0)), int(round(seg.y1)), int(round(seg.x1)))
        else:
            xs, ys = zip(*seg.corners())
            rr, cc = polygon(np.array(ys), np.array(xs), shape=shape)
        canvas[rr, cc] = np.maximum(canvas[rr, cc], seg.intensity)

    for d in spec.engines:
        rr, cc = disk((d.cy, d.cx), d.radius, shape=shape)
        canvas[rr, cc] = np.maximum(canvas[rr, cc], d.intensity)
        # the centre pixel is always lit, even for sub-pixel radii
        canvas[int(round(d.cy)), int(round(d.cx))] = max(canvas[int(round(d.cy)), int(round(d.cx))], d.intensity)

    if spec.clutter_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        canvas = np.clip(canvas + rng.normal(0.0, spec.clutter_sigma, size=shape), 0.0, 1.0)

    truth = []
    for seg in spec.segments():
        for x, y in seg.corners():
            xi, yi = int(round(x)), int(round(y))
            truth.append(ScatterPoint(x=xi, y=yi, response=float(canvas[yi, xi]), scale=seg.width))
    for d in spec.engines:
        xi, yi = int(round(d.cx)), int(round(d.cy))
        truth.append(ScatterPoint(x=xi, y=yi, response=float(canvas[yi, xi]), scale=d.radius))

    return ImageChip(canvas), ScatterPointSet(points=truth)


def synth_airplane(seed: int, height: int = DEFAULT_HEIGHT, width: int = DEFAULT_WIDTH,
                   clutter_sigma: float = 0.05) -> SynthSpec:
    """Random airplane-like layout: fuselage, wings, engines and tail plane."""
    rng = np.random.default_rng(seed)
    margin = 6.0
    cx = width / 2.0 + rng.uniform(-0.08, 0.08) * width
    cy = height / 2.0 + rng.uniform(-0.08, 0.08) * height
    theta = math.radians(rng.uniform(-20.0, 20.0))
    # fuselage direction (nose up) and wing direction
    ux, uy = math.sin(theta), -math.cos(theta)
    vx, vy = math.cos(theta), math.sin(theta)

    def clamp(x, y):
        return (min(max(x, margin), width - 1 - margin), min(max(y, margin), height - 1 - margin))

    def at(s, t):
        return clamp(cx + s * ux + t * vx, cy + s * uy + t * vy)

    half_len = rng.uniform(0.28, 0.36) * height
    half_span = min(rng.uniform(0.30, 0.40) * width, half_len)
    wing_root = rng.uniform(0.0, 0.15) * half_len
    sweep = rng.uniform(0.05, 0.2) * half_len

    nose, tail = at(half_len, 0.0), at(-half_len, 0.0)
    fuselage = Segment(*nose, *tail, intensity=float(rng.uniform(0.5, 0.7)), width=3.0)

    wings = []
    for side in (-1.0, 1.0):
        root = at(wing_root, 0.0)
        tip = at(wing_root - sweep, side * half_span)
        wings.append(Segment(*root, *tip, intensity=float(rng.uniform(0.6, 0.9))))

    tail_span = half_span * 0.35
    extra = []
    for side in (-1.0, 1.0):
        root = at(-half_len * 0.85, 0.0)
        tip = at(-half_len * 0.95, side * tail_span)
        extra.append(Segment(*root, *tip, intensity=float(rng.uniform(0.5, 0.8))))

    engines = []
    per_side = int(rng.integers(1, 3))
    for side in (-1.0, 1.0):
        for n in range(per_side):
            t = side * half_span * (0.35 + 0.3 * n)
            ex, ey = at(wing_root - sweep * abs(t) / half_span + 4.0, t)
            radius = float(rng.uniform(2.0, 3.0))
            ex, ey = clamp(ex, ey)
            ex = min(max(ex, radius + 1), width - 2 - radius)
            ey = min(max(ey, radius + 1), height - 2 - radius)
            engines.append(Disk(round(ex), round(ey), radius, float(rng.uniform(0.85, 1.0))))

    return SynthSpec(
        height=height, width=width, fuselage=fuselage, wings=tuple(wings), engines=tuple(engines),
        clutter_sigma=clutter_sigma, seed=seed, extra=tuple(extra)
    )


# ---------------------------
# Augmentation
# ---------------------------
def _keep_inside(coords: list, height: int, width: int) -> list:
    return [p for p in coords if 0 <= p.x < width and 0 <= p.y < height]


def augment_chip(chip: ImageChip, points: ScatterPointSet, cfg: AugmentConfig, seed: int):
    """Mirror, rotate, translate and add noise; points follow the geometry.

    Rotation is about the chip centre with bilinear resampling; points that
    leave the chip are dropped.
    """
    rng = np.random.default_rng(seed)
    h, w = chip.height, chip.width
    values = chip.values.copy()
    pts = list(points.points)

    if rng.uniform() < cfg.flip_prob:
        values = values[:, ::-1]
        pts = [p.model_copy(update={"x": w - 1 - p.x}) for p in pts]
    if rng.uniform() < cfg.flip_prob:
        values = values[::-1, :]
        pts = [p.model_copy(update={"y": h - 1 - p.y}) for p in pts]

    angle = math.radians(rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg))
    if angle != 0.0:
        c, s = math.cos(angle), math.sin(angle)
        centre = np.array([(h - 1) / 2.0, (w - 1) / 2.0])
        # (row, col) inverse map of the forward rotation below
        matrix = np.array([[c, -s], [s, c]])
        offset = centre - matrix @ centre
        values = ndimage.affine_transform(values, matrix, offset=offset, order=1, mode="constant", cval=0.0)
        cy, cx = centre
        rotated = []
        for p in pts:
            dx, dy = p.x - cx, p.y - cy
            rotated.append(p.model_copy(update={
                "x": int(round(c * dx - s * dy + cx)),
                "y": int(round(s * dx + c * dy + cy)),
            }))
        pts = [p for p in rotated if p.x >= 0 and p.y >= 0]

    tx = int(rng.integers(-cfg.max_shift, cfg.max_shift + 1))
    ty = int(rng.integers(-cfg.max_shift, cfg.max_shift + 1))
    if tx or ty:
        shifted = np.zeros_like(values)
        src_y, dst_y = slice(max(0, -ty), min(h, h - ty)), slice(max(0, ty), min(h, h + ty))
        src_x, dst_x = slice(max(0, -tx), min(w, w - tx)), slice(max(0, tx), min(w, w + tx))
        shifted[dst_y, dst_x] = values[src_y, src_x]
        values = shifted
        moved = []
        for p in pts:
            nx, ny = p.x + tx, p.y + ty
            if nx >= 0 and ny >= 0:
                moved.append(p.model_copy(update={"x": nx, "y": ny}))
        pts = moved

    if cfg.noise_sigma > 0:
        values = values + rng.normal(0.0, cfg.noise_sigma, size=values.shape)

    return ImageChip(np.clip(values, 0.0, 1.0)), ScatterPointSet(points=_keep_inside(pts, h, w))
