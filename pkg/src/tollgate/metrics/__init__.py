"""Detection-quality metrics (IoU matching, AP/AR with area buckets) and log smoothing."""

from tollgate.metrics.evaluation import (
    AREA_BUCKETS,
    IOU_THRESHOLDS,
    MetricsReport,
    NoGroundTruthError,
    average_precision,
    average_recall_at_k,
    evaluate,
    iou,
    match_detections,
    mean_ap,
)
from tollgate.metrics.smoothing import LogSeries, ema_smooth, final_smoothed
from tollgate.metrics.serialize import (
    load_boxes_json,
    report_table,
    report_to_json,
    load_series_csv,
)

__all__ = [
    "AREA_BUCKETS",
    "IOU_THRESHOLDS",
    "MetricsReport",
    "NoGroundTruthError",
    "average_precision",
    "average_recall_at_k",
    "evaluate",
    "iou",
    "match_detections",
    "mean_ap",
    "LogSeries",
    "ema_smooth",
    "final_smoothed",
    "load_boxes_json",
    "report_table",
    "report_to_json",
    "load_series_csv",
]
