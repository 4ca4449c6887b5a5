"""Built-in 5x7 bitmap font for `0-9A-Z`.

The glyph set doubles as the OCR template table, so its shape is contractual:

* every glyph is a single 4-connected ink component (diagonal-only strokes are
  drawn as two-pixel staircases), which is why the vision layer can use
  4-connectivity throughout;
* every glyph has ink in its top row, bottom row, leftmost column and rightmost
  column, so the tight bounding box of a rendered glyph is exactly its design
  cell and nearest-neighbour scaling round-trips losslessly.

See docs/font.md for the rendered table and the validation rules.
"""

from __future__ import annotations

import numpy as np

FONT_VERSION = "1"

GLYPH_W = 5
GLYPH_H = 7

# fmt: off
_GLYPHS: dict[str, tuple[str, ...]] = {
    "0": ("#####",
          "#...#",
          "#..##",
          "#.###",
          "##..#",
          "#...#",
          "#####"),
    "1": ("..#..",
          ".##..",
          "..#..",
          "..#..",
          "..#..",
          "..#..",
          "#####"),
    "2": ("#####",
          "....#",
          "....#",
          "#####",
          "#....",
          "#....",
          "#####"),
    "3": ("#####",
          "....#",
          "....#",
          ".####",
          "....#",
          "....#",
          "#####"),
    "4": ("#..#.",
          "#..#.",
          "#..#.",
          "#####",
          "...#.",
          "...#.",
          "...##"),
    "5": ("####.",
          "#....",
          "#....",
          "#####",
          "....#",
          "....#",
          ".####"),
    "6": ("####.",
          "#....",
          "#....",
          "#####",
          "#...#",
          "#...#",
          "#####"),
    "7": ("#####",
          "....#",
          "...##",
          "...#.",
          "..##.",
          "..#..",
          ".##.."),
    "8": ("#####",
          "#...#",
          "#...#",
          "#####",
          "#...#",
          "#...#",
          "#####"),
    "9": ("#####",
          "#...#",
          "#...#",
          "#####",
          "....#",
          "....#",
          ".####"),
    "A": ("#####",
          "#...#",
          "#...#",
          "#####",
          "#...#",
          "#...#",
          "#...#"),
    "B": ("####.",
          "#..##",
          "#...#",
          "####.",
          "#...#",
          "#..##",
          "####."),
    "C": ("#####",
          "#....",
          "#....",
          "#....",
          "#....",
          "#....",
          "#####"),
    "D": ("####.",
          "#..##",
          "#...#",
          "#...#",
          "#...#",
          "#..##",
          "####."),
    "E": ("#####",
          "#....",
          "#....",
          "####.",
          "#....",
          "#....",
          "#####"),
    "F": ("#####",
          "#....",
          "#....",
          "####.",
          "#....",
          "#....",
          "#...."),
    "G": ("#####",
          "#....",
          "#....",
          "#.###",
          "#...#",
          "#...#",
          "#####"),
    "H": ("#...#",
          "#...#",
          "#...#",
          "#####",
          "#...#",
          "#...#",
          "#...#"),
    "I": ("#####",
          "..#..",
          "..#..",
          "..#..",
          "..#..",
          "..#..",
          "#####"),
    "J": ("#####",
          "...#.",
          "...#.",
          "...#.",
          "...#.",
          "#..#.",
          "####."),
    "K": ("#..##",
          "#.##.",
          "###..",
          "##...",
          "###..",
          "#.##.",
          "#..##"),
    "L": ("#....",
          "#....",
          "#....",
          "#....",
          "#....",
          "#....",
          "#####"),
    "M": ("#...#",
          "##.##",
          "#####",
          "#...#",
          "#...#",
          "#...#",
          "#...#"),
    "N": ("#...#",
          "##..#",
          "###.#",
          "#.#.#",
          "#.###",
          "#..##",
          "#...#"),
    "O": ("#####",
          "#...#",
          "#...#",
          "#...#",
          "#...#",
          "#...#",
          "#####"),
    "P": ("#####",
          "#...#",
          "#...#",
          "#####",
          "#....",
          "#....",
          "#...."),
    "Q": ("#####",
          "#...#",
          "#...#",
          "#...#",
          "#.#.#",
          "#.###",
          "####."),
    "R": ("#####",
          "#...#",
          "#...#",
          "#####",
          "###..",
          "#.##.",
          "#..##"),
    "S": (".####",
          "##...",
          "##...",
          ".###.",
          "...##",
          "...##",
          "####."),
    "T": ("#####",
          "..#..",
          "..#..",
          "..#..",
          "..#..",
          "..#..",
          "..#.."),
    "U": ("#...#",
          "#...#",
          "#...#",
          "#...#",
          "#...#",
          "#...#",
          "#####"),
    "V": ("#...#",
          "#...#",
          "#...#",
          "##.##",
          ".#.#.",
          ".###.",
          "..#.."),
    "W": ("#...#",
          "#...#",
          "#...#",
          "#.#.#",
          "#####",
          "##.##",
          "#...#"),
    "X": ("#...#",
          "##.##",
          ".###.",
          "..#..",
          ".###.",
          "##.##",
          "#...#"),
    "Y": ("#...#",
          "##.##",
          ".###.",
          "..#..",
          "..#..",
          "..#..",
          "..#.."),
    "Z": ("#####",
          "...##",
          "..##.",
          "..#..",
          ".##..",
          "##...",
          "#####"),
}
# fmt: on

SUPPORTED_CHARS = frozenset(_GLYPHS)


class UnsupportedCharError(ValueError):
    """Raised when text contains a character outside the built-in font."""


def _build_glyph(char: str) -> np.ndarray:
    rows = _GLYPHS.get(char)
    if rows is None:
        raise UnsupportedCharError(f"no glyph for {char!r}")
    mask = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
    mask.setflags(write=False)
    return mask


_GLYPH_CACHE: dict[str, np.ndarray] = {}


def glyph(char: str) -> np.ndarray:
    """7x5 boolean ink mask for one character (shared read-only array)."""
    cached = _GLYPH_CACHE.get(char)
    if cached is None:
        cached = _GLYPH_CACHE[char] = _build_glyph(char)
    return cached


_TEMPLATE_CACHE: dict[str, np.ndarray] | None = None


def templates() -> dict[str, np.ndarray]:
    """All glyph masks keyed by character, in codepoint order."""
    global _TEMPLATE_CACHE
    if _TEMPLATE_CACHE is None:
        _TEMPLATE_CACHE = {c: glyph(c) for c in sorted(_GLYPHS)}
    return _TEMPLATE_CACHE


_STACK_CACHE: tuple[tuple[str, ...], np.ndarray] | None = None


def template_stack() -> tuple[tuple[str, ...], np.ndarray]:
    """(chars in codepoint order, bool array of shape (n, GLYPH_H*GLYPH_W))."""
    global _STACK_CACHE
    if _STACK_CACHE is None:
        chars = tuple(sorted(_GLYPHS))
        stack = np.stack([glyph(c).ravel() for c in chars])
        stack.setflags(write=False)
        _STACK_CACHE = (chars, stack)
    return _STACK_CACHE


def ink_fraction(char: str) -> float:
    g = glyph(char)
    return float(g.sum()) / g.size
