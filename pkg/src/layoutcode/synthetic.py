"""Random document-like layouts for demos and tests."""

from __future__ import annotations

import numpy as np

from .layout import CategoryVocab, Element, Layout, PRESETS


def random_layout(rng: np.random.Generator, vocab: CategoryVocab, source_id: str,
                  canvas: tuple[float, float] = (120.0, 160.0), max_elements: int = 8) -> Layout:
    """Stack of one- or two-column rows with margins, like a document page."""
    W, H = canvas
    n_rows = int(rng.integers(1, max_elements + 1))
    margin = float(rng.uniform(4, 12))
    gap = float(rng.uniform(1, 4))
    row_h = (H - 2 * margin - gap * (n_rows - 1)) / n_rows
    labels = [c for c in vocab.labels if c not in vocab.underlay_labels] or list(vocab.labels)
    elements = []
    top = margin
    for _ in range(n_rows):
        h = float(rng.uniform(0.4, 1.0)) * row_h
        if rng.random() < 0.3 and len(elements) + 2 <= max_elements:
            col_w = (W - 2 * margin - gap) / 2
            for col in range(2):
                left = margin + col * (col_w + gap)
                elements.append(Element(str(rng.choice(labels)), left + col_w / 2, top + h / 2, col_w, h))
        elif len(elements) < max_elements:
            w = float(rng.uniform(0.5, 1.0)) * (W - 2 * margin)
            elements.append(Element(str(rng.choice(labels)), margin + w / 2, top + h / 2, w, h))
        top += row_h + gap
    return Layout(W, H, tuple(elements), source_id)


def make_corpus(n: int, seed: int = 0, vocab: CategoryVocab | None = None,
                canvas: tuple[float, float] = (120.0, 160.0), max_elements: int = 8) -> list[Layout]:
    vocab = vocab or PRESETS["publaynet"]
    rng = np.random.default_rng(seed)
    return [random_layout(rng, vocab, f"syn-{i:05d}", canvas, max_elements) for i in range(n)]
