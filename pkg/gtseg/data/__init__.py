"""
Data pipeline: synthetic generation, augmentation, patches, folds and PGM I/O.
"""
from gtseg.data.augment import IDENTITY, AugmentPolicy, augment, hflip, rotate90
from gtseg.data.dataset import load_dataset, save_dataset
from gtseg.data.folds import FoldSplit, kfold_split, load_folds, save_folds
from gtseg.data.patches import patch_sample
from gtseg.data.pgm import PGMFormatError, load_mask, load_pgm, save_mask, save_pgm
from gtseg.data.sample import Sample
from gtseg.data.synth import synth_generate

__all__ = [
    "IDENTITY",
    "AugmentPolicy",
    "FoldSplit",
    "PGMFormatError",
    "Sample",
    "augment",
    "hflip",
    "kfold_split",
    "load_dataset",
    "load_folds",
    "load_mask",
    "load_pgm",
    "patch_sample",
    "rotate90",
    "save_dataset",
    "save_folds",
    "save_mask",
    "save_pgm",
    "synth_generate",
]
