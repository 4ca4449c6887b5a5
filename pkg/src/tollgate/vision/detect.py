"""Plate localisation: glyph components merged into row boxes, scored by shape plausibility."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from tollgate.geometry import BoundingBox, DetectionResult
from tollgate.imaging import GrayBitmap
from tollgate.vision.binarize import binarize
from tollgate.vision.components import Component, connected_components


class NoPlateFoundError(Exception):
    pass


@dataclass(frozen=True)
class DetectParams:
    min_area: int = 80
    aspect_min: float = 1.5
    aspect_max: float = 12.0
    # components below this pixel count are treated as noise before merging
    min_component_pixels: int = 8


DEFAULT_PARAMS = DetectParams()

_FILL_PEAK = 0.35  # typical ink density of a glyph row


def _vertical_overlap(a: BoundingBox, b: BoundingBox) -> float:
    overlap = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if overlap <= 0:
        return 0.0
    return overlap / min(a.height, b.height)


def _merge_rows(comps: list[Component], median_w: float) -> list[list[Component]]:
    """Greedy left-to-right clustering of glyph components into text rows."""
    clusters: list[dict] = []
    for comp in sorted(comps, key=lambda c: (c.box.xmin, c.box.ymin)):
        placed = False
        for cluster in clusters:
            bbox: BoundingBox = cluster["bbox"]
            gap = comp.box.xmin - bbox.xmax
            if gap <= 2 * median_w and _vertical_overlap(comp.box, bbox) >= 0.6:
                cluster["members"].append(comp)
                cluster["bbox"] = BoundingBox(
                    min(bbox.xmin, comp.box.xmin),
                    min(bbox.ymin, comp.box.ymin),
                    max(bbox.xmax, comp.box.xmax),
                    max(bbox.ymax, comp.box.ymax),
                )
                placed = True
                break
        if not placed:
            clusters.append({"members": [comp], "bbox": comp.box})
    return [c["members"] for c in clusters]


def _pad_for(members: list[Component]) -> int:
    """Plates carry a paper border around the glyph row; the inter-glyph gap is
    the best local estimate of its width."""
    if len(members) < 2:
        return 0
    boxes = sorted((m.box for m in members), key=lambda b: b.xmin)
    gaps = [max(0, nxt.xmin - cur.xmax) for cur, nxt in zip(boxes, boxes[1:])]
    return int(statistics.median(gaps))


def detect_plate(
    scene: GrayBitmap, params: DetectParams = DEFAULT_PARAMS
) -> list[DetectionResult]:
    """Candidate plate boxes, best first.

    Score is the geometric mean of an aspect-ratio fit and an ink fill-ratio
    plausibility, both in [0, 1]; candidates failing the hard min_area /
    aspect bounds are dropped.
    """
    binary = binarize(scene)
    comps = [c for c in connected_components(binary)
             if c.pixel_count >= params.min_component_pixels]
    if not comps:
        return []
    median_w = statistics.median(c.box.width for c in comps)

    ideal_aspect = math.sqrt(params.aspect_min * params.aspect_max)
    log_span = math.log(params.aspect_max / ideal_aspect)
    results = []
    for members in _merge_rows(comps, median_w):
        boxes = [m.box for m in members]
        union = BoundingBox(
            min(b.xmin for b in boxes),
            min(b.ymin for b in boxes),
            max(b.xmax for b in boxes),
            max(b.ymax for b in boxes),
        )
        pad = _pad_for(members)
        box = BoundingBox(
            max(0, union.xmin - pad),
            max(0, union.ymin - pad),
            min(scene.width, union.xmax + pad),
            min(scene.height, union.ymax + pad),
        )
        aspect = box.width / box.height
        if box.area < params.min_area or not params.aspect_min <= aspect <= params.aspect_max:
            continue
        aspect_fit = max(0.0, 1.0 - abs(math.log(aspect / ideal_aspect)) / log_span)
        fill = sum(m.pixel_count for m in members) / union.area
        fill_fit = max(0.0, 1.0 - abs(fill - _FILL_PEAK) / _FILL_PEAK)
        score = math.sqrt(aspect_fit * fill_fit)
        results.append(DetectionResult(box=box, score=score))

    results.sort(key=lambda r: (-r.score, r.box.xmin, r.box.ymin))
    return results


def best_plate(scene: GrayBitmap, params: DetectParams = DEFAULT_PARAMS) -> DetectionResult:
    candidates = detect_plate(scene, params)
    if not candidates:
        raise NoPlateFoundError("no plate candidate in scene")
    return candidates[0]
