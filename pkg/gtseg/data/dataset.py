from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from gtseg.data.folds import FoldSplit, load_folds, save_folds
from gtseg.data.pgm import load_image, load_mask, save_mask, save_pgm
from gtseg.data.sample import Sample

IMAGES_DIR = "images"
MASKS_DIR = "masks"
FOLDS_FILE = "folds.txt"


def save_dataset(root: Path, samples: Sequence[Sample], split: Optional[FoldSplit] = None) -> Path:
    """
    Writes ``<root>/images/<id>.pgm``, ``<root>/masks/<id>.pgm`` and, when a
    split is given, ``<root>/folds.txt``.
    """
    root = Path(root)
    (root / IMAGES_DIR).mkdir(parents=True, exist_ok=True)
    (root / MASKS_DIR).mkdir(parents=True, exist_ok=True)
    for sample in samples:
        save_pgm(root / IMAGES_DIR / f"{sample.id}.pgm", sample.image)
        save_mask(root / MASKS_DIR / f"{sample.id}.pgm", sample.mask)
    if split is not None:
        save_folds(root / FOLDS_FILE, split)
    return root


def load_dataset(root: Path) -> Tuple[List[Sample], Optional[FoldSplit]]:
    """
    Reads a dataset directory. Samples come back sorted by id; the split is
    None when ``folds.txt`` is absent.
    """
    root = Path(root)
    images_dir, masks_dir = root / IMAGES_DIR, root / MASKS_DIR
    if not images_dir.is_dir() or not masks_dir.is_dir():
        raise FileNotFoundError(f"{root} must contain {IMAGES_DIR}/ and {MASKS_DIR}/ directories")

    image_ids = {p.stem for p in images_dir.glob("*.pgm")}
    mask_ids = {p.stem for p in masks_dir.glob("*.pgm")}
    if image_ids != mask_ids:
        missing = sorted(image_ids ^ mask_ids)
        raise ValueError(f"{root}: images and masks do not pair up, unmatched ids {missing[:5]}")
    if not image_ids:
        raise ValueError(f"{root}: no .pgm samples found")

    samples = [
        Sample(
            image=load_image(images_dir / f"{sample_id}.pgm"),
            mask=load_mask(masks_dir / f"{sample_id}.pgm"),
            id=sample_id,
        )
        for sample_id in sorted(image_ids)
    ]

    split = None
    folds_path = root / FOLDS_FILE
    if folds_path.exists():
        split = load_folds(folds_path)
        unknown = set(split.assignments) ^ image_ids
        if unknown:
            raise ValueError(f"{folds_path} does not match the sample ids: {sorted(unknown)[:5]}")
    return samples, split
