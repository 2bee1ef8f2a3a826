from gtseg.storage.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from gtseg.storage.reports import write_csv_atomic, write_metrics_reports

__all__ = [
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "write_csv_atomic",
    "write_metrics_reports",
]
