"""Deterministic synthetic plate rendering and scene composition.

A plate is rows of 5x7 font glyphs scaled with nearest-neighbour indexing
(target pixel (y, x) reads template pixel (y*7//char_h, x*5//char_w)); the
vision layer downsamples cells with the same index map, which is what makes
zero-noise recognition exact rather than merely likely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tollgate.corpus import font
from tollgate.geometry import BoundingBox
from tollgate.imaging import GrayBitmap, salt_pepper
from tollgate.model import PlateString, normalize_plate

# Canvas shade sits strictly between ink and paper so the scene histogram
# stays bimodal around the ink class for Otsu.
CANVAS_SHADE = 160
_JITTER = 8  # max brightness wobble applied per pixel


class OutOfBoundsError(ValueError):
    """Plate does not fit on the canvas at the requested offset."""


@dataclass(frozen=True)
class PlateStyle:
    char_w: int = 10
    char_h: int = 14
    margin: int = 2
    ink: int = 30
    paper_shade: int = 230

    def __post_init__(self) -> None:
        if self.char_w < font.GLYPH_W or self.char_h < font.GLYPH_H:
            raise ValueError(f"glyph cells must be at least {font.GLYPH_W}x{font.GLYPH_H}")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if not (0 <= self.ink < self.paper_shade <= 255):
            raise ValueError("need 0 <= ink < paper_shade <= 255")

    @property
    def gap(self) -> int:
        """Paper columns between adjacent glyph cells."""
        return max(1, self.char_w // 5)

    def plate_size(self, n_chars: int) -> tuple[int, int]:
        w = 2 * self.margin + n_chars * self.char_w + (n_chars - 1) * self.gap
        h = 2 * self.margin + self.char_h
        return w, h


DEFAULT_STYLE = PlateStyle()


@dataclass(frozen=True)
class AnnotatedScene:
    image_id: str
    image: GrayBitmap
    truth: BoundingBox
    plate_text: PlateString

    def __post_init__(self) -> None:
        if not self.truth.within(self.image.width, self.image.height):
            raise ValueError("truth box outside image bounds")


def _scaled_glyph(char: str, char_w: int, char_h: int) -> np.ndarray:
    g = font.glyph(char)
    rows = (np.arange(char_h) * font.GLYPH_H) // char_h
    cols = (np.arange(char_w) * font.GLYPH_W) // char_w
    return g[rows][:, cols]


def render_plate(text: str | PlateString, style: PlateStyle = DEFAULT_STYLE, seed: int = 0) -> GrayBitmap:
    """Draw `text` on a paper-shaded plaque. Deterministic in (text, style, seed)."""
    plate = text if isinstance(text, PlateString) else normalize_plate(text)
    chars = plate.normalized
    if len(chars) > 16:
        raise ValueError("plate text longer than 16 characters")
    missing = set(chars) - font.SUPPORTED_CHARS
    if missing:
        raise font.UnsupportedCharError(f"no glyphs for {sorted(missing)}")

    w, h = style.plate_size(len(chars))
    ink_mask = np.zeros((h, w), dtype=bool)
    x = style.margin
    for c in chars:
        cell = _scaled_glyph(c, style.char_w, style.char_h)
        ink_mask[style.margin : style.margin + style.char_h, x : x + style.char_w] = cell
        x += style.char_w + style.gap

    base = np.where(ink_mask, style.ink, style.paper_shade).astype(np.int16)
    rng = np.random.default_rng(seed)
    jitter = rng.integers(-_JITTER, _JITTER + 1, size=base.shape, dtype=np.int16)
    return GrayBitmap.from_array(np.clip(base + jitter, 0, 255).astype(np.uint8))


def compose_scene(
    plate: GrayBitmap,
    canvas_w: int,
    canvas_h: int,
    offset: tuple[int, int],
    salt_pepper_rate: float = 0.0,
    noise_seed: int = 0,
    *,
    image_id: str = "scene",
    plate_text: str | PlateString = "0",
) -> AnnotatedScene:
    """Blit the plate onto a mid-gray canvas; the truth box is exactly the blit rectangle."""
    ox, oy = offset
    if ox < 0 or oy < 0 or ox + plate.width > canvas_w or oy + plate.height > canvas_h:
        raise OutOfBoundsError(
            f"plate {plate.width}x{plate.height} at {offset} exceeds canvas {canvas_w}x{canvas_h}"
        )
    canvas = np.full((canvas_h, canvas_w), CANVAS_SHADE, dtype=np.uint8)
    canvas[oy : oy + plate.height, ox : ox + plate.width] = plate.to_array()
    image = salt_pepper(GrayBitmap.from_array(canvas), salt_pepper_rate, noise_seed)
    text = plate_text if isinstance(plate_text, PlateString) else normalize_plate(plate_text)
    truth = BoundingBox(ox, oy, ox + plate.width, oy + plate.height)
    return AnnotatedScene(image_id=image_id, image=image, truth=truth, plate_text=text)
