from gtseg.metrics.segmentation import (
    MetricsReport,
    aggregate_folds,
    auc,
    confusion,
    report,
    reports_frame,
)

__all__ = ["MetricsReport", "aggregate_folds", "auc", "confusion", "report", "reports_frame"]
