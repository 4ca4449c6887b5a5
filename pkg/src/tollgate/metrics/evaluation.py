"""Single-class detection evaluation in the COCO style.

Conventions, fixed here and mirrored by the brute-force oracle in the tests:

* IoU thresholds 0.50:0.05:0.95 (ten values, built from integers so 0.75 is
  exact); AP samples the monotonized precision at 101 recall points.
* Detections rank by (-score, image_id, xmin, ymin); matching is greedy per
  image against the unmatched truth of highest IoU at or above the threshold.
* Area buckets partition truths: small < 32^2 <= medium <= 96^2 < large.
  Detections that fail to match a bucket truth but do match an out-of-bucket
  truth are ignored (neither TP nor FP); fully unmatched detections always
  count as false positives. Hence restricting to a bucket that contains every
  truth reproduces the unrestricted result exactly.
* A bucket with no truths has no defined metric: that is reported as absent
  (None), never as 0.0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from tollgate.geometry import BoundingBox, DetectionResult

IOU_THRESHOLDS: tuple[float, ...] = tuple(i / 100 for i in range(50, 100, 5))
RECALL_POINTS: tuple[float, ...] = tuple(i / 100 for i in range(101))

AREA_BUCKETS: dict[str, tuple[int, int]] = {
    "all": (0, 1 << 62),
    "small": (0, 32 * 32),          # area < 1024
    "medium": (32 * 32, 96 * 96 + 1),  # 1024 <= area <= 9216
    "large": (96 * 96 + 1, 1 << 62),   # area > 9216
}

GroundTruthSet = Mapping[str, Sequence[BoundingBox]]
DetectionSet = Mapping[str, Sequence[DetectionResult]]


class NoGroundTruthError(ValueError):
    """The requested metric has no ground truth to evaluate against."""


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two half-open pixel boxes; 0 when disjoint."""
    inter = a.intersection_area(b)
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def _in_bucket(box: BoundingBox, bucket: str) -> bool:
    lo, hi = AREA_BUCKETS[bucket]
    return lo <= box.area < hi


def _rank(dets: Sequence[DetectionResult]) -> list[DetectionResult]:
    return sorted(dets, key=lambda d: (-d.score, d.box.xmin, d.box.ymin))


def _greedy_labels(
    dets: Sequence[DetectionResult],
    truths: Sequence[BoundingBox],
    ignored: Sequence[BoundingBox],
    thresh: float,
    max_dets: Optional[int] = None,
) -> list[tuple[DetectionResult, Optional[int], bool]]:
    """Per-image greedy matching in rank order.

    Returns (det, matched_truth_index_or_None, ignore_flag) per ranked
    detection. A detection is tried against unmatched bucket truths first and
    the out-of-bucket (ignored) truths second; matching an ignored truth sets
    the ignore flag.
    """
    ranked = _rank(dets)
    if max_dets is not None:
        ranked = ranked[:max_dets]
    free = [True] * len(truths)
    free_ign = [True] * len(ignored)
    out: list[tuple[DetectionResult, Optional[int], bool]] = []
    for det in ranked:
        best_j, best_v = -1, 0.0
        for j, truth in enumerate(truths):
            if not free[j]:
                continue
            v = iou(det.box, truth)
            if v >= thresh and v > best_v:
                best_j, best_v = j, v
        if best_j >= 0:
            free[best_j] = False
            out.append((det, best_j, False))
            continue
        hit_ignored = False
        for j, truth in enumerate(ignored):
            if free_ign[j] and iou(det.box, truth) >= thresh:
                free_ign[j] = False
                hit_ignored = True
                break
        out.append((det, None, hit_ignored))
    return out


def match_detections(
    dets: Sequence[DetectionResult],
    truths: Sequence[BoundingBox],
    iou_thresh: float,
    max_dets: int,
) -> list[tuple[DetectionResult, Optional[BoundingBox]]]:
    """Rank, truncate to max_dets, and greedily match one-to-one against truths."""
    if not 0.0 < iou_thresh <= 1.0:
        raise ValueError("iou_thresh must be in (0, 1]")
    if max_dets < 1:
        raise ValueError("max_dets must be >= 1")
    labels = _greedy_labels(dets, truths, (), iou_thresh, max_dets)
    return [(det, truths[j] if j is not None else None) for det, j, _ in labels]


def _ap_at_threshold(
    dets_by_image: DetectionSet,
    truths_by_image: Mapping[str, Sequence[BoundingBox]],
    ignored_by_image: Mapping[str, Sequence[BoundingBox]],
    thresh: float,
) -> float:
    n_truth = sum(len(v) for v in truths_by_image.values())
    if n_truth == 0:
        raise NoGroundTruthError("no ground truth at this threshold/bucket")

    pooled: list[tuple[float, str, int, int, bool]] = []
    for image_id in sorted(set(dets_by_image) | set(truths_by_image)):
        labels = _greedy_labels(
            dets_by_image.get(image_id, ()),
            truths_by_image.get(image_id, ()),
            ignored_by_image.get(image_id, ()),
            thresh,
        )
        for det, j, ign in labels:
            if ign:
                continue
            pooled.append((-det.score, image_id, det.box.xmin, det.box.ymin, j is not None))
    pooled.sort()

    tp = fp = 0
    recalls: list[float] = []
    precisions: list[float] = []
    for *_, is_tp in pooled:
        if is_tp:
            tp += 1
        else:
            fp += 1
        recalls.append(tp / n_truth)
        precisions.append(tp / (tp + fp))
    for i in range(len(precisions) - 2, -1, -1):  # monotone from the right
        precisions[i] = max(precisions[i], precisions[i + 1])

    total = 0.0
    idx = 0
    for r in RECALL_POINTS:
        while idx < len(recalls) and recalls[idx] < r:
            idx += 1
        if idx < len(precisions):
            total += precisions[idx]
    return total / len(RECALL_POINTS)


def average_precision(
    dets_by_image: DetectionSet,
    truths_by_image: GroundTruthSet,
    iou_thresh: float,
) -> float:
    """101-point interpolated AP at one IoU threshold, pooled over images."""
    return _ap_at_threshold(dets_by_image, truths_by_image, {}, iou_thresh)


def _split_bucket(
    truths_by_image: GroundTruthSet, bucket: str
) -> tuple[dict[str, list[BoundingBox]], dict[str, list[BoundingBox]]]:
    inside: dict[str, list[BoundingBox]] = {}
    outside: dict[str, list[BoundingBox]] = {}
    for image_id, truths in truths_by_image.items():
        inside[image_id] = [t for t in truths if _in_bucket(t, bucket)]
        outside[image_id] = [t for t in truths if not _in_bucket(t, bucket)]
    return inside, outside


def mean_ap(
    dets_by_image: DetectionSet,
    truths_by_image: GroundTruthSet,
    area_bucket: str = "all",
) -> float:
    """AP averaged over the ten IoU thresholds, restricted to one area bucket."""
    if area_bucket not in AREA_BUCKETS:
        raise ValueError(f"unknown bucket {area_bucket!r}")
    inside, outside = _split_bucket(truths_by_image, area_bucket)
    if sum(len(v) for v in inside.values()) == 0:
        raise NoGroundTruthError(f"no truths with area in bucket {area_bucket!r}")
    total = 0.0
    for thresh in IOU_THRESHOLDS:
        total += _ap_at_threshold(dets_by_image, inside, outside, thresh)
    return total / len(IOU_THRESHOLDS)


def average_recall_at_k(
    dets_by_image: DetectionSet,
    truths_by_image: GroundTruthSet,
    k: int = 1,
    area_bucket: str = "all",
) -> float:
    """Recall using only the top-k detections per image, averaged over IoU thresholds."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if area_bucket not in AREA_BUCKETS:
        raise ValueError(f"unknown bucket {area_bucket!r}")
    inside, outside = _split_bucket(truths_by_image, area_bucket)
    n_truth = sum(len(v) for v in inside.values())
    if n_truth == 0:
        raise NoGroundTruthError(f"no truths with area in bucket {area_bucket!r}")

    total = 0.0
    for thresh in IOU_THRESHOLDS:
        matched = 0
        for image_id in sorted(set(dets_by_image) | set(inside)):
            labels = _greedy_labels(
                dets_by_image.get(image_id, ()),
                inside.get(image_id, ()),
                outside.get(image_id, ()),
                thresh,
                max_dets=k,
            )
            matched += sum(1 for _, j, _ in labels if j is not None)
        total += matched / n_truth
    return total / len(IOU_THRESHOLDS)


@dataclass(frozen=True)
class MetricsReport:
    """The eight headline numbers; None marks a bucket with no ground truth."""

    ap_all: Optional[float]
    ap_small: Optional[float]
    ap_medium: Optional[float]
    ap_large: Optional[float]
    ar1_all: Optional[float]
    ar1_small: Optional[float]
    ar1_medium: Optional[float]
    ar1_large: Optional[float]

    def as_dict(self) -> dict[str, Optional[float]]:
        return {
            "ap_all": self.ap_all,
            "ap_small": self.ap_small,
            "ap_medium": self.ap_medium,
            "ap_large": self.ap_large,
            "ar1_all": self.ar1_all,
            "ar1_small": self.ar1_small,
            "ar1_medium": self.ar1_medium,
            "ar1_large": self.ar1_large,
        }


def evaluate(dets_by_image: DetectionSet, truths_by_image: GroundTruthSet) -> MetricsReport:
    """Fill the full report; buckets without truths come back as None."""
    if sum(len(v) for v in truths_by_image.values()) == 0:
        raise NoGroundTruthError("empty ground truth set")

    def maybe(fn, *args) -> Optional[float]:
        try:
            return fn(*args)
        except NoGroundTruthError:
            return None

    return MetricsReport(
        ap_all=maybe(mean_ap, dets_by_image, truths_by_image, "all"),
        ap_small=maybe(mean_ap, dets_by_image, truths_by_image, "small"),
        ap_medium=maybe(mean_ap, dets_by_image, truths_by_image, "medium"),
        ap_large=maybe(mean_ap, dets_by_image, truths_by_image, "large"),
        ar1_all=maybe(average_recall_at_k, dets_by_image, truths_by_image, 1, "all"),
        ar1_small=maybe(average_recall_at_k, dets_by_image, truths_by_image, 1, "small"),
        ar1_medium=maybe(average_recall_at_k, dets_by_image, truths_by_image, 1, "medium"),
        ar1_large=maybe(average_recall_at_k, dets_by_image, truths_by_image, 1, "large"),
    )
