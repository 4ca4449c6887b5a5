"""Classical plate-reading pipeline: binarize, locate, segment, template-match, filter."""

from tollgate.vision.binarize import BinaryImage, binarize, otsu_threshold
from tollgate.vision.components import Component, connected_components
from tollgate.vision.detect import DetectParams, detect_plate, best_plate, NoPlateFoundError
from tollgate.vision.ocr import (
    DIGITS,
    NoGlyphsError,
    PlateReading,
    VisionError,
    classify_char,
    filter_whitelist,
    recognize,
    segment_chars,
)
from tollgate.vision.csvlog import append_csv, CSV_HEADER

__all__ = [
    "BinaryImage",
    "binarize",
    "otsu_threshold",
    "Component",
    "connected_components",
    "DetectParams",
    "detect_plate",
    "best_plate",
    "NoPlateFoundError",
    "DIGITS",
    "NoGlyphsError",
    "PlateReading",
    "VisionError",
    "classify_char",
    "filter_whitelist",
    "recognize",
    "segment_chars",
    "append_csv",
    "CSV_HEADER",
]
