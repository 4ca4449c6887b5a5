"""4-connected component labelling via row runs and union-find.

Runs (maximal horizontal ink segments) are extracted with one vectorized pass,
then merged across adjacent rows where their column ranges overlap; this visits
runs rather than pixels, which keeps large scenes cheap in pure Python.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from tollgate.geometry import BoundingBox
from tollgate.vision.binarize import BinaryImage


@dataclass(frozen=True)
class Component:
    box: BoundingBox
    pixel_count: int


def _find(parent: list[int], i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:  # path compression
        parent[i], i = root, parent[i]
    return root


def _union(parent: list[int], a: int, b: int) -> None:
    ra, rb = _find(parent, a), _find(parent, b)
    if ra != rb:
        parent[max(ra, rb)] = min(ra, rb)


def connected_components(image: BinaryImage) -> list[Component]:
    """Tight boxes and pixel counts of all 4-connected ink components.

    Result is sorted by (ymin, xmin, xmax, ymax) for determinism.
    """
    mask = image.mask
    h, w = mask.shape
    padded = np.zeros((h, w + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    diff = np.diff(padded, axis=1)
    start_rows, start_cols = np.nonzero(diff == 1)
    end_rows, end_cols = np.nonzero(diff == -1)
    # starts and ends alternate within each row, so the k-th start pairs with the k-th end
    assert np.array_equal(start_rows, end_rows)
    runs_start: list[int] = start_cols.tolist()
    runs_end: list[int] = end_cols.tolist()
    runs_row: list[int] = start_rows.tolist()

    n = len(runs_row)
    if n == 0:
        return []
    parent = list(range(n))

    # [begin, end) index range of each row's runs; rows are emitted in order
    row_span: dict[int, tuple[int, int]] = {}
    begin = 0
    for idx in range(1, n + 1):
        if idx == n or runs_row[idx] != runs_row[begin]:
            row_span[runs_row[begin]] = (begin, idx)
            begin = idx

    for idx in range(n):
        span = row_span.get(runs_row[idx] - 1)
        if span is None:
            continue
        s, e = runs_start[idx], runs_end[idx]
        lo, hi = span
        # runs above are sorted and disjoint: both starts and ends increase,
        # so the overlapping ones form the contiguous window [first j with
        # end_j > s, last j with start_j < e]
        j = bisect.bisect_right(runs_end, s, lo, hi)
        while j < hi and runs_start[j] < e:
            _union(parent, idx, j)
            j += 1

    stats: dict[int, list[int]] = {}  # root -> [xmin, ymin, xmax, ymax, count]
    for idx in range(n):
        root = _find(parent, idx)
        r, s, e = runs_row[idx], runs_start[idx], runs_end[idx]
        st = stats.get(root)
        if st is None:
            stats[root] = [s, r, e, r + 1, e - s]
        else:
            st[0] = min(st[0], s)
            st[1] = min(st[1], r)
            st[2] = max(st[2], e)
            st[3] = max(st[3], r + 1)
            st[4] += e - s
    comps = [
        Component(box=BoundingBox(xmin, ymin, xmax, ymax), pixel_count=count)
        for xmin, ymin, xmax, ymax, count in stats.values()
    ]
    comps.sort(key=lambda c: (c.box.ymin, c.box.xmin, c.box.xmax, c.box.ymax))
    return comps
