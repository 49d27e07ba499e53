import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from Supervision.helper.exceptions import ShapeMismatch
from Supervision.helper.heatmap import HeatmapStack, channel_peaks
from Supervision.helper.imaging import ImageChip


def _to_chip_grid(overlay: np.ndarray, height: int, width: int) -> np.ndarray:
    h, w = overlay.shape
    if (h, w) == (height, width):
        return overlay
    stride = -(-height // h)
    if -(-width // stride) != w or -(-height // stride) != h:
        raise ShapeMismatch(f"Heatmap {h}x{w} does not tile a {height}x{width} chip")
    return np.repeat(np.repeat(overlay, stride, axis=0), stride, axis=1)[:height, :width]


def render_overlay(chip: ImageChip, stack: HeatmapStack, out_path, alpha: float = 0.45, dpi: int = 100) -> None:
    """Chip in gray with the channel-wise max of the heatmap blended on top; peaks marked per channel."""
    overlay = _to_chip_grid(stack.values.max(axis=0), chip.height, chip.width)
    scale = chip.height / stack.height

    fig, ax = plt.subplots(figsize=(chip.width / dpi * 3, chip.height / dpi * 3), dpi=dpi)
    try:
        ax.imshow(chip.values, cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
        ax.imshow(np.ma.masked_where(overlay <= 0, overlay), cmap="jet", vmin=0.0, vmax=1.0,
                  alpha=alpha, interpolation="nearest")
        for k, (r, c, value) in enumerate(channel_peaks(stack)):
            if value <= 0:
                continue
            ax.plot(c * scale, r * scale, marker="+", color="white", markersize=8)
            ax.annotate(str(k), (c * scale, r * scale), color="white", fontsize=7,
                        xytext=(3, 3), textcoords="offset points")
        ax.set_axis_off()
        fig.savefig(out_path, format="png", bbox_inches="tight", pad_inches=0)
    finally:
        plt.close(fig)
