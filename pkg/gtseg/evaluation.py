from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from gtseg.data.pgm import save_mask
from gtseg.data.sample import Sample
from gtseg.metrics.segmentation import MetricsReport, confusion, report
from gtseg.model.config import size_problems
from gtseg.model.gt_unet import GTUNet
from gtseg.storage.checkpoint import CheckpointError
from gtseg.storage.reports import write_metrics_reports
from gtseg.trainer import THRESHOLD, predict_probs, stack_batch

EVAL_STEM = "eval"


@dataclass
class SampleEvaluation:
    sample_id: str
    report: MetricsReport
    predicted_mask: np.ndarray


def check_compatible(model: GTUNet, samples: Sequence[Sample]) -> None:
    """
    The network accepts any input whose sides satisfy its divisibility rule,
    so a patch-trained checkpoint can score full images.
    """
    for sample in samples:
        problems = size_problems(model.config, *sample.shape)
        if problems:
            raise CheckpointError(f"sample {sample.id!r} does not fit the checkpoint: " + "; ".join(problems))


def evaluate_samples(
    model: GTUNet,
    samples: Sequence[Sample],
    batch_size: int = 4,
    threshold: float = THRESHOLD,
) -> List[SampleEvaluation]:
    """
    Per-sample metrics at ``threshold``. AUC is reported when the target has
    both classes; otherwise it is left empty and flagged.
    """
    check_compatible(model, samples)
    probs: List[np.ndarray] = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        if len({s.shape for s in chunk}) == 1:
            probs.extend(predict_probs(model, stack_batch(chunk)[0], batch_size)[:, 0])
        else:
            probs.extend(predict_probs(model, s.image[None, None], 1)[0, 0] for s in chunk)
    results = []
    for sample, prob in zip(samples, probs):
        pred = (prob >= threshold).astype(np.uint8)
        counts = confusion(pred, sample.mask)
        both_classes = 0 < int(sample.mask.sum()) < sample.mask.size
        rep = report(counts, prob, sample.mask) if both_classes else report(counts)
        if not both_classes:
            rep = replace(rep, flags=tuple(sorted(rep.flags + ("auc",))))
        results.append(SampleEvaluation(sample.id, rep, pred))
    return results


def write_evaluation(
    out_dir: Path,
    results: Sequence[SampleEvaluation],
    meta: Dict[str, object],
    dump_masks: bool = False,
) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    paths = write_metrics_reports(
        out_dir,
        EVAL_STEM,
        [r.sample_id for r in results],
        [r.report for r in results],
        label_column="sample",
        meta={**meta, "std_scope": "population std over samples"},
    )
    if dump_masks:
        for r in results:
            save_mask(out_dir / "pred_masks" / f"{r.sample_id}.pgm", r.predicted_mask)
        paths["masks"] = out_dir / "pred_masks"
    return paths


def mean_dice(results: Sequence[SampleEvaluation]) -> Optional[float]:
    if not results:
        return None
    return float(np.mean([r.report.dice for r in results]))
