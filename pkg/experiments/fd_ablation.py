from pathlib import Path
from tempfile import TemporaryDirectory

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from gtseg.config import RunConfig
from gtseg.data.folds import kfold_split
from gtseg.data.synth import synth_generate
from gtseg.evaluation import evaluate_samples
from gtseg.metrics.segmentation import aggregate_folds, report
from gtseg.storage.checkpoint import load_checkpoint
from gtseg.trainer import FoldTrainer

METRICS = ["dice", "acc", "se", "sp"]


def fold_reports(results, samples, folds, seed):
    """Pooled validation report per fold, from the best checkpoint."""
    split = kfold_split([s.id for s in samples], folds, seed)
    by_id = {s.id: s for s in samples}
    reports = []
    for result in results:
        model, _ = load_checkpoint(result.checkpoint)
        val = [by_id[i] for i in split.fold_ids(result.fold)]
        evaluated = evaluate_samples(model, val)
        counts = np.sum([[r.report.tp, r.report.fp, r.report.tn, r.report.fn] for r in evaluated], axis=0)
        reports.append(report(counts))
    return reports


def run_fd_ablation(count=48, size=64, epochs=30, seed=0, workers=3):
    samples = synth_generate(seed, count, size)
    rows = []

    print("Running BCE vs FD loss ablation...\n")

    with TemporaryDirectory() as tmp:
        for loss in ["bce", "fd"]:
            config = RunConfig.model_validate(
                {"data": {"size": size, "count": count}, "training": {"epochs": epochs, "loss": loss}}
            )
            # same seed, so both losses see the same folds and initial weights
            results = FoldTrainer(config, Path(tmp) / loss, seed, workers=workers, verbose=False).run(samples)
            stats = aggregate_folds(fold_reports(results, samples, config.training.folds, seed))
            row = {"loss": loss}
            for name in METRICS:
                row[name] = stats[name]["mean"]
                row[f"{name}_std"] = stats[name]["std"]
            rows.append(row)
            print(
                f"Loss: {loss:<3} | "
                + " | ".join(f"{name.upper()}: {row[name]:.4f}±{row[f'{name}_std']:.4f}" for name in METRICS)
            )

    table = pd.DataFrame(rows).set_index("loss")
    print()
    print(table[METRICS].to_string(float_format=lambda v: f"{v:.4f}"))

    fig, ax = plt.subplots()
    positions = np.arange(len(METRICS))
    for offset, loss in zip((-0.2, 0.2), table.index):
        ax.bar(
            positions + offset,
            table.loc[loss, METRICS],
            width=0.4,
            yerr=table.loc[loss, [f"{m}_std" for m in METRICS]],
            label=loss.upper(),
        )
    ax.set_xticks(positions)
    ax.set_xticklabels([m.upper() for m in METRICS])
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel("Validation score (mean over folds)")
    ax.set_title("GT U-Net trained with BCE and with FD loss")
    ax.legend()
    ax.grid(True, axis="y")
    plt.show()


if __name__ == "__main__":
    run_fd_ablation()
