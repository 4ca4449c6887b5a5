"""Grayscale thresholding. A pixel is ink iff its value is strictly below the threshold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tollgate.imaging import GrayBitmap


@dataclass(eq=False)
class BinaryImage:
    width: int
    height: int
    mask: np.ndarray  # bool, True = ink

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "BinaryImage":
        return cls(width=mask.shape[1], height=mask.shape[0], mask=mask.astype(bool))


def otsu_threshold(img: GrayBitmap | np.ndarray) -> int:
    """Threshold maximizing between-class variance of the 256-bin histogram.

    Returns the smallest maximizing value; a uniform image yields 0, which
    classifies every pixel as background.
    """
    arr = img.to_array() if isinstance(img, GrayBitmap) else img
    hist = np.bincount(arr.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    levels = np.arange(256, dtype=np.float64)
    cum_n = np.cumsum(hist)
    cum_sum = np.cumsum(hist * levels)

    # class split at t: ink = [0, t), background = [t, 255]
    w0 = np.concatenate(([0.0], cum_n[:-1]))
    s0 = np.concatenate(([0.0], cum_sum[:-1]))
    w1 = total - w0
    valid = (w0 > 0) & (w1 > 0)
    sigma = np.zeros(256)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu0 = np.where(valid, s0 / w0, 0.0)
        mu1 = np.where(valid, (cum_sum[-1] - s0) / w1, 0.0)
        sigma[valid] = (w0 * w1 * (mu0 - mu1) ** 2)[valid]
    if not valid.any():
        return 0
    return int(np.argmax(sigma))


def binarize(img: GrayBitmap, threshold: int | None = None) -> BinaryImage:
    """Fixed threshold when given, Otsu otherwise."""
    arr = img.to_array()
    t = otsu_threshold(arr) if threshold is None else threshold
    return BinaryImage.from_mask(arr < t)
