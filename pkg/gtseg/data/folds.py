from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np


@dataclass(frozen=True)
class FoldSplit:
    fold_count: int
    assignments: Dict[str, int]

    def __post_init__(self) -> None:
        if self.fold_count < 2:
            raise ValueError(f"fold_count must be >= 2, got {self.fold_count}")
        bad = {i: f for i, f in self.assignments.items() if not 0 <= f < self.fold_count}
        if bad:
            raise ValueError(f"fold indices outside [0, {self.fold_count}): {bad}")

    def fold_ids(self, fold: int) -> List[str]:
        return [i for i, f in self.assignments.items() if f == fold]

    def train_ids(self, fold: int) -> List[str]:
        return [i for i, f in self.assignments.items() if f != fold]

    def sizes(self) -> List[int]:
        return [len(self.fold_ids(f)) for f in range(self.fold_count)]


def kfold_split(ids: Sequence[str], k: int, seed: int) -> FoldSplit:
    """Deterministic shuffle of ``ids`` then round-robin assignment to k folds."""
    ids = [str(i) for i in ids]
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if len(set(ids)) != len(ids):
        raise ValueError("sample ids must be unique")
    if len(ids) < k:
        raise ValueError(f"cannot split {len(ids)} ids into {k} folds")
    order = np.random.default_rng(seed).permutation(len(ids))
    assignments = {ids[index]: position % k for position, index in enumerate(order)}
    return FoldSplit(fold_count=k, assignments={i: assignments[i] for i in ids})


# -------------------------------------------------------------------
# folds.txt
# -------------------------------------------------------------------
def save_folds(path: Path, split: FoldSplit) -> None:
    lines = [f"{sample_id} {fold}" for sample_id, fold in split.assignments.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_folds(path: Path) -> FoldSplit:
    assignments: Dict[str, int] = {}
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{number}: expected '<id> <fold>', got {raw!r}")
        sample_id, fold = parts
        if sample_id in assignments:
            raise ValueError(f"{path}:{number}: duplicate id {sample_id!r}")
        try:
            assignments[sample_id] = int(fold)
        except ValueError as exc:
            raise ValueError(f"{path}:{number}: fold must be an integer, got {fold!r}") from exc
    if not assignments:
        raise ValueError(f"{path} holds no fold assignments")
    return FoldSplit(fold_count=max(assignments.values()) + 1, assignments=assignments)
