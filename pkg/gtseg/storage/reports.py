from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Dict, Sequence

import pandas as pd

from gtseg.metrics.segmentation import MetricsReport, aggregate_folds, reports_frame
from gtseg.utils.helpers import write_json_atomic


def write_csv_atomic(path: Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    frame.to_csv(tmp_path, index=False, lineterminator="\n", float_format="%.10g")
    os.replace(tmp_path, path)
    return path


def write_metrics_reports(
    out_dir: Path,
    stem: str,
    labels: Sequence[str],
    reports: Sequence[MetricsReport],
    label_column: str,
    meta: Dict[str, Any],
) -> Dict[str, Path]:
    """
    ``<stem>.csv``: one row per report and a mean±std row.
    ``<stem>.json``: the same rows plus the aggregate and run metadata.
    """
    out_dir = Path(out_dir)
    csv_path = write_csv_atomic(out_dir / f"{stem}.csv", reports_frame(labels, reports, label_column))
    payload = {
        "meta": meta,
        "rows": [{label_column: label, **rep.as_dict()} for label, rep in zip(labels, reports)],
        "aggregate": aggregate_folds(reports),
    }
    json_path = out_dir / f"{stem}.json"
    write_json_atomic(json_path, payload)
    return {"csv": csv_path, "json": json_path}
