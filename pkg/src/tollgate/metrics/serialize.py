"""Interchange formats for the metrics layer.

* boxes JSON: array of {image_id, boxes: [{xmin, ymin, xmax, ymax, score?}]};
  entries with scores load as detections, without as ground truth.
* series CSV: header `step,value`.
* report: JSON dict with eight fields (null for absent) plus a plain-text table.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from tollgate.geometry import BoundingBox, DetectionResult
from tollgate.metrics.evaluation import MetricsReport
from tollgate.metrics.smoothing import LogSeries


def load_boxes_json(path: str | Path) -> tuple[dict[str, list], bool]:
    """Returns ({image_id: boxes}, scored) where scored says boxes carry scores."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    out: dict[str, list] = {}
    scored = False
    for entry in entries:
        boxes = []
        for b in entry["boxes"]:
            box = BoundingBox(int(b["xmin"]), int(b["ymin"]), int(b["xmax"]), int(b["ymax"]))
            if "score" in b:
                scored = True
                boxes.append(DetectionResult(box=box, score=float(b["score"])))
            else:
                boxes.append(box)
        out[entry["image_id"]] = boxes
    return out, scored


def dump_boxes_json(by_image: dict[str, list], path: str | Path) -> None:
    entries = []
    for image_id in sorted(by_image):
        boxes = []
        for b in by_image[image_id]:
            if isinstance(b, DetectionResult):
                boxes.append({"xmin": b.box.xmin, "ymin": b.box.ymin,
                              "xmax": b.box.xmax, "ymax": b.box.ymax, "score": b.score})
            else:
                boxes.append({"xmin": b.xmin, "ymin": b.ymin, "xmax": b.xmax, "ymax": b.ymax})
        entries.append({"image_id": image_id, "boxes": boxes})
    Path(path).write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report.as_dict(), indent=2) + "\n"


_ROWS = [
    ("Average Precision (area = all)", "ap_all"),
    ("Average Precision (area = small)", "ap_small"),
    ("Average Precision (area = medium)", "ap_medium"),
    ("Average Precision (area = large)", "ap_large"),
    ("Average Recall (area = all)", "ar1_all"),
    ("Average Recall (area = small)", "ar1_small"),
    ("Average Recall (area = medium)", "ar1_medium"),
    ("Average Recall (area = large)", "ar1_large"),
]


def report_table(report: MetricsReport) -> str:
    values = report.as_dict()
    lines = []
    for label, key in _ROWS:
        v = values[key]
        lines.append(f"{label:<38}{'n/a' if v is None else f'{v:.3f}'}")
    return "\n".join(lines) + "\n"


def load_series_csv(path: str | Path, name: str | None = None) -> LogSeries:
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["step", "value"]:
        raise ValueError(f"expected header 'step,value', got {reader.fieldnames}")
    pairs = [(int(row["step"]), float(row["value"])) for row in reader]
    return LogSeries.from_pairs(name or Path(path).stem, pairs)


def dump_series_csv(series: LogSeries, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "value"])
        for step, value in series.points:
            writer.writerow([step, repr(value)])
