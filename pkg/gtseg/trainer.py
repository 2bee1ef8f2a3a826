from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from gtseg.config import RunConfig
from gtseg.data.augment import augment
from gtseg.data.dataset import load_dataset
from gtseg.data.folds import FoldSplit, kfold_split
from gtseg.data.patches import patch_sample
from gtseg.data.sample import Sample
from gtseg.data.synth import synth_generate
from gtseg.engine.optim import Adam
from gtseg.engine.tensor import Tensor, no_grad
from gtseg.loss.fd_loss import bce, fd_loss
from gtseg.metrics.segmentation import STD_SCOPE, confusion, report
from gtseg.model.gt_unet import GTUNet
from gtseg.storage.checkpoint import save_checkpoint
from gtseg.storage.reports import write_csv_atomic
from gtseg.utils.helpers import log_progress, log_success, write_json_atomic

LOG_COLUMNS = ["fold", "epoch", "train_loss", "train_bce", "val_dice"]
LOG_FILE = "train_log.csv"
SUMMARY_FILE = "summary.json"
THRESHOLD = 0.5
# seed stream reserved for the fixed validation patch draw
VALIDATION_STREAM = 2 ** 20


@dataclass
class FoldResult:
    fold: int
    best_epoch: int
    best_val_dice: Optional[float]
    checkpoint: Path
    history: List[Dict[str, Any]] = field(default_factory=list)


# -------------------------------------------------------------------
# Internal helpers
# -------------------------------------------------------------------
def derive_seed(*parts: int) -> int:
    return int(np.random.default_rng([int(p) for p in parts]).integers(0, 2 ** 31 - 1))


def stack_batch(samples: Sequence[Sample]) -> Tuple[np.ndarray, np.ndarray]:
    images = np.stack([s.image for s in samples])[:, None, :, :]
    masks = np.stack([s.mask for s in samples])[:, None, :, :].astype(np.float64)
    return images, masks


def predict_probs(model: GTUNet, images: np.ndarray, batch_size: int) -> np.ndarray:
    """Eval-mode forward over (N, 1, H, W) images without recording a tape."""
    was_training = model.training
    model.eval()
    outputs = []
    with no_grad():
        for start in range(0, len(images), batch_size):
            outputs.append(model(Tensor(images[start:start + batch_size])).data)
    model.train(was_training)
    return np.concatenate(outputs, axis=0)


def pooled_dice(model: GTUNet, samples: Sequence[Sample], batch_size: int) -> float:
    images, masks = stack_batch(samples)
    probs = predict_probs(model, images, batch_size)
    counts = confusion((probs >= THRESHOLD).astype(np.uint8), masks.astype(np.uint8))
    return report(counts).dice


def load_samples(config: RunConfig, seed: int) -> Tuple[List[Sample], Optional[FoldSplit]]:
    data = config.data
    if data.source == "synth":
        return synth_generate(seed, data.count, data.size), None
    samples, split = load_dataset(Path(data.path))
    wrong = [s.id for s in samples if s.shape != (data.size, data.size)]
    if wrong:
        raise ValueError(
            f"{len(wrong)} samples in {data.path} are not {data.size}×{data.size} (first: {wrong[0]})"
        )
    return samples, split


# -------------------------------------------------------------------
# Trainer
# -------------------------------------------------------------------
class FoldTrainer:
    """
    k-fold cross-validation: each fold trains a fresh GT U-Net on the other
    folds and keeps the weights with the best validation DICE in
    ``<out>/fold<i>.ckpt``. Every random draw derives from (seed, fold, epoch).
    """

    def __init__(self, config: RunConfig, out_dir: Path, seed: int, workers: int = 1, verbose: bool = True):
        if workers < 1:
            raise ValueError(f"workers must be >= 1, got {workers}")
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.config = config
        self.out_dir = Path(out_dir)
        self.seed = int(seed)
        self.workers = workers
        self.verbose = verbose

    def _log(self, message: str) -> None:
        if self.verbose:
            log_progress(message)

    # -----------------------
    # Data
    # -----------------------
    def _train_pool(self, samples: Sequence[Sample], fold: int, epoch: int) -> List[Sample]:
        patch = self.config.data.patch
        if patch is None:
            return list(samples)
        pool: List[Sample] = []
        for index, sample in enumerate(samples):
            seed = derive_seed(self.seed, fold, epoch, index)
            pool.extend(patch_sample(sample, patch.size, patch.per_image, seed))
        return pool

    def _validation_pool(self, samples: Sequence[Sample], fold: int) -> List[Sample]:
        patch = self.config.data.patch
        if patch is None:
            return list(samples)
        pool: List[Sample] = []
        for index, sample in enumerate(samples):
            # fixed draw so every epoch is scored on the same patches
            seed = derive_seed(self.seed, fold, VALIDATION_STREAM, index)
            pool.extend(patch_sample(sample, patch.size, patch.per_image, seed))
        return pool

    # -----------------------
    # One fold
    # -----------------------
    def _loss(self, pred: Tensor, target: np.ndarray) -> Tuple[Tensor, float]:
        training = self.config.training
        if training.loss == "fd":
            loss, details = fd_loss(
                pred, target, beta=training.beta, k=training.descriptor_k,
                n_points=training.descriptor_n, return_details=True,
            )
            return loss, details.bce
        loss = bce(pred, target)
        return loss, loss.item()

    def train_fold(self, fold: int, train: Sequence[Sample], val: Sequence[Sample]) -> FoldResult:
        cfg = self.config
        model = GTUNet(cfg.model.model_copy(update={"seed": derive_seed(self.seed, fold)}))
        model.train()
        optimizer = Adam(
            model.parameters(),
            lr=cfg.optimizer.learning_rate,
            beta1=cfg.optimizer.beta1,
            beta2=cfg.optimizer.beta2,
        )
        checkpoint = self.out_dir / f"fold{fold}.ckpt"
        val_pool = self._validation_pool(val, fold)
        batch_size = cfg.training.batch_size
        result = FoldResult(fold=fold, best_epoch=0, best_val_dice=None, checkpoint=checkpoint)

        if cfg.training.epochs == 0:
            save_checkpoint(checkpoint, model, {"fold": fold, "epoch": 0, "val_dice": None, "seed": self.seed})
            return result

        for epoch in range(1, cfg.training.epochs + 1):
            rng = np.random.default_rng([self.seed, fold, epoch])
            pool = self._train_pool(train, fold, epoch)
            order = rng.permutation(len(pool))
            aug_seeds = rng.integers(0, 2 ** 31 - 1, size=len(pool))
            losses, bces = [], []
            for start in range(0, len(pool), batch_size):
                picked = order[start:start + batch_size]
                batch = [
                    augment(pool[j], int(aug_seeds[j])) if cfg.training.augment else pool[j]
                    for j in picked
                ]
                images, masks = stack_batch(batch)
                optimizer.zero_grad()
                pred = model(Tensor(images))
                loss, batch_bce = self._loss(pred, masks)
                loss.backward()
                optimizer.step()
                losses.append(loss.item())
                bces.append(batch_bce)

            val_dice = pooled_dice(model, val_pool, batch_size)
            row = {
                "fold": fold,
                "epoch": epoch,
                "train_loss": float(np.mean(losses)),
                "train_bce": float(np.mean(bces)),
                "val_dice": val_dice,
            }
            result.history.append(row)
            self._log(
                f"fold {fold} epoch {epoch}/{cfg.training.epochs} "
                f"loss={row['train_loss']:.4f} val_dice={val_dice:.4f}"
            )
            if result.best_val_dice is None or val_dice > result.best_val_dice:
                result.best_val_dice = val_dice
                result.best_epoch = epoch
                save_checkpoint(
                    checkpoint, model, {"fold": fold, "epoch": epoch, "val_dice": val_dice, "seed": self.seed}
                )
        return result

    # -----------------------
    # All folds
    # -----------------------
    def run(self, samples: Sequence[Sample], split: Optional[FoldSplit] = None) -> List[FoldResult]:
        folds = self.config.training.folds
        if split is None or split.fold_count != folds:
            split = kfold_split([s.id for s in samples], folds, self.seed)
        by_id = {s.id: s for s in samples}
        self.out_dir.mkdir(parents=True, exist_ok=True)

        def job(fold: int) -> FoldResult:
            train = [by_id[i] for i in split.train_ids(fold)]
            val = [by_id[i] for i in split.fold_ids(fold)]
            self._log(f"fold {fold}: {len(train)} training / {len(val)} validation samples")
            return self.train_fold(fold, train, val)

        if self.workers == 1:
            results = [job(f) for f in range(folds)]
        else:
            # one model per worker thread; results come back in fold order
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(job, range(folds)))

        self._write_outputs(results)
        return results

    def _write_outputs(self, results: Sequence[FoldResult]) -> None:
        rows = [row for r in results for row in r.history]
        frame = pd.DataFrame(rows, columns=LOG_COLUMNS)
        write_csv_atomic(self.out_dir / LOG_FILE, frame)
        scored = [r.best_val_dice for r in results if r.best_val_dice is not None]
        summary = {
            "seed": self.seed,
            "config": self.config.model_dump(mode="json"),
            "folds": [
                {
                    "fold": r.fold,
                    "best_epoch": r.best_epoch,
                    "best_val_dice": r.best_val_dice,
                    "checkpoint": r.checkpoint.name,
                }
                for r in results
            ],
            "val_dice_mean": float(np.mean(scored)) if scored else None,
            "val_dice_std": float(np.std(scored)) if scored else None,
            "std_scope": STD_SCOPE,
        }
        write_json_atomic(self.out_dir / SUMMARY_FILE, summary)
        if scored:
            log_success(f"{len(results)} folds trained, mean best val DICE {summary['val_dice_mean']:.4f}")
        else:
            log_success(f"{len(results)} folds checkpointed with initial weights")
