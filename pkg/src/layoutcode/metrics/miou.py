"""Maximum-IoU matching between generated and reference layouts."""

from __future__ import annotations

from collections import Counter, defaultdict
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..layout import Layout
from .geometry import iou


def layout_pair_miou(g: Layout, r: Layout) -> float | None:
    """Mean IoU under the best same-category matching, or None if incomparable.

    Layouts are comparable only when their category multisets agree.
    """
    if Counter(g.categories) != Counter(r.categories) or len(g) == 0:
        return None
    groups_g, groups_r = defaultdict(list), defaultdict(list)
    for e in g.elements:
        groups_g[e.category].append(e)
    for e in r.elements:
        groups_r[e.category].append(e)
    total = 0.0
    for cat, ge in groups_g.items():
        re_ = groups_r[cat]
        m = np.array([[iou(a, b) for b in re_] for a in ge])
        rows, cols = linear_sum_assignment(m, maximize=True)
        total += float(m[rows, cols].sum())
    return total / len(g)


def collection_miou(generated: Sequence[Layout], reference: Sequence[Layout]) -> float:
    """Index-aligned mean of pair scores; incomparable pairs count as 0."""
    if len(generated) != len(reference):
        raise ValueError(f"length mismatch: {len(generated)} generated vs {len(reference)} reference")
    if not generated:
        raise ValueError("collections must be non-empty")
    scores = [layout_pair_miou(g, r) for g, r in zip(generated, reference)]
    return float(sum(s or 0.0 for s in scores) / len(scores))
