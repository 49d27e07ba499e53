import numpy as np
import pytest

from Supervision.helper.imaging import Disk, ImageChip, SynthSpec, save_chip, synth_airplane, synth_chip
from Supervision.helper.modal import ObjectAnnotation, ScatterPoint, ScatterPointSet, Sidecar

DISK_CENTRES = ((16, 16), (48, 16), (16, 48), (48, 48))


def make_points(*triples) -> ScatterPointSet:
    return ScatterPointSet(points=[ScatterPoint(x=x, y=y, response=r) for x, y, r in triples])


def four_disk_spec(centres=DISK_CENTRES, size=64, radius=2.0) -> SynthSpec:
    return SynthSpec(
        height=size, width=size,
        engines=tuple(Disk(cx, cy, radius, 1.0) for cx, cy in centres),
    )


@pytest.fixture
def four_disk_chip() -> ImageChip:
    chip, _ = synth_chip(four_disk_spec())
    return chip


@pytest.fixture
def chip_tree(tmp_path):
    """Three synthetic airplanes, the first one annotated, plus a blank chip."""
    root = tmp_path / "chips"
    root.mkdir()
    for i in range(3):
        chip, truth = synth_chip(synth_airplane(seed=100 + i))
        save_chip(root / f"plane_{i}.pgm", chip)
        if i == 0:
            coords = truth.coordinates()
            x0, y0 = coords.min(axis=0)
            x1, y1 = coords.max(axis=0)
            sidecar = Sidecar(split="train", objects=[ObjectAnnotation(bbox=(x0, y0, x1, y1), label="A320/321")])
            (root / f"plane_{i}.json").write_text(sidecar.model_dump_json())
    save_chip(root / "blank.pgm", ImageChip(np.zeros((32, 32))))
    return root
