from pathlib import Path

from pydantic import ValidationError

from Supervision.config import Prep
from Supervision.helper.exceptions import ManifestError
from Supervision.helper.modal import Manifest, ManifestEntry, Sidecar, SplitRatios
from Supervision.helper.rng import SplitMix64, derive_seed
from Supervision.logger import LOGGER

CHIP_SUFFIXES = {".pgm", ".png"}


def assign_split(chip_path: str, seed: int = Prep.SEED, ratios: SplitRatios = SplitRatios()) -> str:
    """Deterministic split for chips whose sidecar names none."""
    u = SplitMix64(derive_seed(seed, chip_path)).uniform()
    if u < ratios.train:
        return "train"
    if u < ratios.train + ratios.val:
        return "val"
    return "test"


def sidecar_path(chip: Path) -> Path:
    return chip.with_suffix(".json")


def read_sidecar(chip: Path):
    path = sidecar_path(chip)
    if not path.is_file():
        return None
    try:
        return Sidecar.model_validate_json(path.read_bytes())
    except ValidationError as e:
        raise ManifestError(f"Malformed sidecar {path}: {e}")
    except OSError as e:
        raise ManifestError(f"Unreadable sidecar {path}: {e}")


def build_manifest(root, seed: int = Prep.SEED, ratios: SplitRatios = SplitRatios()) -> Manifest:
    root = Path(root)
    if not root.is_dir():
        raise ManifestError(f"Manifest root is not a directory: {root}")
    try:
        chips = sorted(
            (p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in CHIP_SUFFIXES),
            key=lambda p: p.relative_to(root).as_posix(),
        )
    except OSError as e:
        raise ManifestError(f"Cannot scan {root}: {e}")

    entries = []
    for chip in chips:
        rel = chip.relative_to(root).as_posix()
        sidecar = read_sidecar(chip)
        split = sidecar.split if sidecar and sidecar.split else assign_split(rel, seed, ratios)
        entries.append(ManifestEntry(
            chip_path=rel,
            annotations=list(sidecar.objects) if sidecar else None,
            split=split,
        ))

    LOGGER.info(f"Manifest of {root}: {len(entries)} chips, {sum(e.annotations is not None for e in entries)} annotated")
    return Manifest(root=str(root), entries=entries)
