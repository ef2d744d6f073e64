"""Offline stand-in for a fine-tuned model.

Fills every masked value with an independent draw from the empirical,
Laplace-smoothed distribution of that field for the element's category.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from ..codec import MASK, MaskedCode, _split_instruction, parse_canvas
from ..layout import FIELDS, CategoryVocab, Layout
from ..quantizer import Quantizer

log = logging.getLogger(__name__)

_ATTR_FIELD = {"x": "x", "y": "y", "width": "w", "height": "h"}
_CATEGORY_RE = re.compile(r'data-category="([^"]*)"')
_MASKED_ATTR_RE = re.compile(r'\s(x|y|width|height)="' + re.escape(MASK) + '"')


class BaselineError(ValueError):
    pass


@dataclass(frozen=True)
class BaselineModel:
    """``dists[category][field]`` holds probabilities over ``bins[field]``."""

    bins: Mapping[str, np.ndarray]
    dists: Mapping[str, Mapping[str, np.ndarray]]
    smoothing: float = 1.0

    def distribution(self, category: str, field: str) -> np.ndarray:
        try:
            return self.dists[category][field]
        except KeyError:
            log.warning("category %r unknown to the baseline, sampling %s uniformly", category, field)
            n = len(self.bins[field])
            return np.full(n, 1.0 / n)

    def sample(self, category: str, field: str, rng: np.random.Generator,
               lo: float | None = None, hi: float | None = None) -> float:
        """Draw one value, restricted to ``[lo, hi]`` when some bin lies there."""
        values, p = self.bins[field], self.distribution(category, field)
        ok = np.ones(len(values), dtype=bool)
        if lo is not None:
            ok &= values >= lo
        if hi is not None:
            ok &= values <= hi
        if ok.any() and not ok.all():
            p = np.where(ok, p, 0.0)
            if p.sum() == 0:
                p = ok.astype(float)
            p = p / p.sum()
        return float(values[rng.choice(len(values), p=p)])


def fit_baseline(train_layouts: Iterable[Layout], q: Quantizer, vocab: CategoryVocab,
                 smoothing: float = 1.0) -> BaselineModel:
    layouts = list(train_layouts)
    if not layouts:
        raise BaselineError("cannot fit the baseline on an empty training split")
    bins = {f: np.asarray(q.bin_values(f)) for f in FIELDS}
    counts = {c: {f: np.zeros(len(bins[f])) for f in FIELDS} for c in vocab.labels}
    for layout in layouts:
        for e in q.quantize_layout(layout):
            if e.category not in counts:
                continue
            for f in FIELDS:
                counts[e.category][f][np.searchsorted(bins[f], e.get(f))] += 1
    dists = {
        c: {f: (n + smoothing) / (n.sum() + smoothing * len(n)) for f, n in per.items()}
        for c, per in counts.items()
    }
    return BaselineModel(bins, dists, smoothing)


def complete_baseline(prompt: str, masked: MaskedCode | None, model: BaselineModel, seed: int) -> str:
    """Return the code body with every ``<M>`` replaced by a sampled value."""
    body = masked.body if masked is not None else _split_instruction(prompt)[1]
    canvas = parse_canvas(body)
    limits = {"x": (0.0, canvas[0]), "y": (0.0, canvas[1])} if canvas else {}
    rng = np.random.default_rng(seed)
    lines = body.split("\n")
    for i, line in enumerate(lines):
        if MASK not in line or not line.lstrip().lower().startswith("<rect"):
            continue
        m = _CATEGORY_RE.search(line)
        category = m.group(1) if m else ""

        def fill(am: re.Match) -> str:
            field = _ATTR_FIELD[am.group(1)]
            lo, hi = limits.get(field, (1e-9, None))
            return f' {am.group(1)}="{model.sample(category, field, rng, lo, hi):.1f}"'

        lines[i] = _MASKED_ATTR_RE.sub(fill, line)
    return "\n".join(lines)
