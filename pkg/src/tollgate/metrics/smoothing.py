"""Debiased exponential smoothing of (step, value) training-log series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class LogSeries:
    name: str
    points: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("series must hold at least one point")
        steps = [s for s, _ in self.points]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("steps must be strictly increasing")

    @classmethod
    def from_pairs(cls, name: str, pairs: Sequence[tuple[int, float]]) -> "LogSeries":
        return cls(name=name, points=tuple((int(s), float(v)) for s, v in pairs))

    def values(self) -> list[float]:
        return [v for _, v in self.points]


DEFAULT_WEIGHT = 0.6


def ema_smooth(series: LogSeries, weight: float = DEFAULT_WEIGHT) -> LogSeries:
    """dashboard-style smoothing: s_t = w*s_(t-1) + (1-w)*v_t from s_(-1) = 0,
    reported as s_t / (1 - w^(t+1)) so early values are unbiased.

    weight 0 is the identity; a constant series is a fixed point for any weight.
    """
    if not 0.0 <= weight < 1.0:
        raise ValueError("weight must be in [0, 1)")
    smoothed = []
    s = 0.0
    for t, (step, value) in enumerate(series.points):
        s = weight * s + (1.0 - weight) * value
        debias = 1.0 - weight ** (t + 1)
        smoothed.append((step, s / debias))
    return LogSeries.from_pairs(series.name, smoothed)


def final_smoothed(series: LogSeries, weight: float = DEFAULT_WEIGHT) -> float:
    """The smoothed value at the last logged step."""
    return ema_smooth(series, weight).points[-1][1]
