"""Character segmentation, template classification and the full recognition chain."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from tollgate.corpus import font
from tollgate.geometry import BoundingBox, DetectionResult
from tollgate.imaging import GrayBitmap
from tollgate.vision.binarize import binarize, otsu_threshold
from tollgate.vision.components import connected_components
from tollgate.vision.detect import DetectParams, DEFAULT_PARAMS, best_plate

DIGITS = frozenset("0123456789")


class VisionError(Exception):
    pass


class NoGlyphsError(VisionError):
    pass


@dataclass(frozen=True)
class PlateReading:
    image_id: str
    raw_text: str
    filtered_text: str
    mean_char_score: float
    detection: DetectionResult


def filter_whitelist(raw: str, whitelist: frozenset[str] | set[str] = DIGITS) -> str:
    """Subsequence of `raw` keeping only whitelisted characters; may be empty."""
    return "".join(c for c in raw if c in whitelist)


def segment_chars(
    plate_crop: GrayBitmap,
    threshold: int | None = None,
    min_component_pixels: int = 8,
) -> list[BoundingBox]:
    """Left-to-right glyph boxes inside a plate crop.

    Components under min_component_pixels are dropped first (salt-and-pepper
    specks would otherwise dominate the median height); components shorter
    than half the median remaining height are then discarded; boxes
    overlapping more than 50% in x are merged (split strokes).
    """
    binary = binarize(plate_crop, threshold)
    comps = [c for c in connected_components(binary)
             if c.pixel_count >= min_component_pixels]
    if not comps:
        raise NoGlyphsError("no ink components in crop")
    median_h = statistics.median(c.box.height for c in comps)
    boxes = sorted(
        (c.box for c in comps if c.box.height >= 0.5 * median_h),
        key=lambda b: (b.xmin, b.ymin),
    )
    if not boxes:
        raise NoGlyphsError("no components survive the height filter")

    merged = True
    while merged:
        merged = False
        out: list[BoundingBox] = []
        for box in boxes:
            if out:
                prev = out[-1]
                overlap = min(prev.xmax, box.xmax) - max(prev.xmin, box.xmin)
                if overlap > 0.5 * min(prev.width, box.width):
                    out[-1] = BoundingBox(
                        min(prev.xmin, box.xmin), min(prev.ymin, box.ymin),
                        max(prev.xmax, box.xmax), max(prev.ymax, box.ymax),
                    )
                    merged = True
                    continue
            out.append(box)
        boxes = out
    return boxes


def _resample_to_template(ink: np.ndarray) -> np.ndarray:
    """Majority-vote downsample of an ink mask onto the 5x7 template grid.

    Uses the same floor index map as the renderer's upsampling, so a cleanly
    rendered cell reproduces its template exactly.
    """
    h, w = ink.shape
    row_idx = (np.arange(h) * font.GLYPH_H) // h
    col_idx = (np.arange(w) * font.GLYPH_W) // w
    flat = row_idx[:, None] * font.GLYPH_W + col_idx[None, :]
    cells = font.GLYPH_H * font.GLYPH_W
    ink_counts = np.bincount(flat.ravel(), weights=ink.ravel(), minlength=cells)
    totals = np.bincount(flat.ravel(), minlength=cells)
    grid = (2 * ink_counts) >= totals  # ties count as ink
    return grid.reshape(font.GLYPH_H, font.GLYPH_W)


def classify_char(
    cell: GrayBitmap,
    templates: dict[str, np.ndarray] | None = None,
    threshold: int | None = None,
) -> tuple[str, float]:
    """Best-matching font character and its agreement score over the 35-pixel grid.

    Ties break toward the lowest codepoint. With no explicit threshold, Otsu is
    used; a degenerate (single-level) cell falls back to mid-gray 128 so an
    all-dark cell still reads as ink.
    """
    arr = cell.to_array()
    t = otsu_threshold(arr) if threshold is None else threshold
    if t == 0:
        t = 128
    grid = _resample_to_template(arr < t)

    if templates is None:
        chars, stack = font.template_stack()
        agreements = (stack == grid.ravel()[None, :]).sum(axis=1)
        best = int(np.argmax(agreements))  # chars sorted, argmax takes the first max
        return chars[best], float(agreements[best]) / stack.shape[1]

    best_char, best_score = "", -1.0
    for char in sorted(templates):
        score = float(np.mean(grid == templates[char]))
        if score > best_score:
            best_char, best_score = char, score
    return best_char, best_score


def recognize(
    scene: GrayBitmap,
    image_id: str = "scene",
    params: DetectParams = DEFAULT_PARAMS,
    whitelist: frozenset[str] | set[str] = DIGITS,
) -> PlateReading:
    """Full chain: locate the plate, segment its glyphs, classify, whitelist-filter."""
    detection = best_plate(scene, params)
    b = detection.box
    crop_arr = scene.to_array()[b.ymin : b.ymax, b.xmin : b.xmax]
    crop = GrayBitmap.from_array(crop_arr)
    t = otsu_threshold(crop_arr)
    if t == 0:
        t = 128
    cells = segment_chars(crop, threshold=t)

    chars: list[str] = []
    scores: list[float] = []
    for cell_box in cells:
        cell = GrayBitmap.from_array(
            crop_arr[cell_box.ymin : cell_box.ymax, cell_box.xmin : cell_box.xmax]
        )
        char, score = classify_char(cell, threshold=t)
        chars.append(char)
        scores.append(score)

    raw = "".join(chars)
    return PlateReading(
        image_id=image_id,
        raw_text=raw,
        filtered_text=filter_whitelist(raw, whitelist),
        mean_char_score=sum(scores) / len(scores),
        detection=detection,
    )
