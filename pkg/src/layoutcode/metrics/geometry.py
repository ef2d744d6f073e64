"""Box-level metrics: IoU, alignment and overlap."""

from __future__ import annotations

import numpy as np

from ..layout import CategoryVocab, Element, Layout, to_corners


def area(e: Element) -> float:
    return e.w * e.h


def intersection(a: Element, b: Element) -> float:
    al, at, ar, ab = to_corners(a)
    bl, bt, br, bb = to_corners(b)
    iw = min(ar, br) - max(al, bl)
    ih = min(ab, bb) - max(at, bt)
    return iw * ih if iw > 0 and ih > 0 else 0.0


def iou(a: Element, b: Element) -> float:
    inter = intersection(a, b)
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def _anchors(layout: Layout) -> np.ndarray:
    """(N, 6) array: left, x-center, right, top, y-center, bottom; canvas-normalized."""
    rows = []
    for e in layout.elements:
        left, top, right, bottom = to_corners(e)
        rows.append((left / layout.canvas_w, e.x / layout.canvas_w, right / layout.canvas_w,
                     top / layout.canvas_h, e.y / layout.canvas_h, bottom / layout.canvas_h))
    return np.asarray(rows, dtype=float).reshape(-1, 6)


def alignment_score(layout: Layout) -> float:
    """Mean distance from each element to its best-aligned neighbour, x100.

    For element i the gap is the smallest |anchor_i - anchor_j| over every
    other element j and each of the six anchor types (edges and centers,
    compared type-for-type).  Zero when every element shares some anchor
    with another one.
    """
    n = len(layout)
    if n < 2:
        return 0.0
    a = _anchors(layout)
    d = np.abs(a[:, None, :] - a[None, :, :]).min(axis=2)
    np.fill_diagonal(d, np.inf)
    return float(100.0 * d.min(axis=1).mean())


def overlap_score(layout: Layout, vocab: CategoryVocab | None = None) -> float:
    """Mean over non-underlay elements of summed overlap ratios, x100.

    Each element i contributes sum_j area(i & j) / area(i) over the other
    non-underlay elements j.
    """
    underlay = vocab.underlay_labels if vocab is not None else frozenset()
    elems = [e for e in layout.elements if e.category not in underlay]
    if not elems:
        return 0.0
    c = np.asarray([to_corners(e) for e in elems], dtype=float)
    iw = np.minimum(c[:, None, 2], c[None, :, 2]) - np.maximum(c[:, None, 0], c[None, :, 0])
    ih = np.minimum(c[:, None, 3], c[None, :, 3]) - np.maximum(c[:, None, 1], c[None, :, 1])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    np.fill_diagonal(inter, 0.0)
    areas = (c[:, 2] - c[:, 0]) * (c[:, 3] - c[:, 1])
    ratios = inter.sum(axis=1) / areas
    return float(100.0 * ratios.mean())
