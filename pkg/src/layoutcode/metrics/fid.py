"""Frechet distance over layout feature vectors, and a deterministic embedder."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..layout import CategoryVocab, Layout

EPS = 1e-6
HIST_BINS = 8


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.T) / 2.0)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def fid(features_a: Sequence[Sequence[float]] | np.ndarray,
        features_b: Sequence[Sequence[float]] | np.ndarray) -> float:
    """Frechet distance between Gaussian fits of two feature sets."""
    a = np.asarray(features_a, dtype=float)
    b = np.asarray(features_b, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"feature dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each feature set needs at least two vectors")
    d = a.shape[1]
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False).reshape(d, d) + EPS * np.eye(d)
    cov_b = np.cov(b, rowvar=False).reshape(d, d) + EPS * np.eye(d)
    root_a = _sqrtm_psd(cov_a)
    cross = np.linalg.eigvalsh(root_a @ cov_b @ root_a)
    tr_cross = float(np.sqrt(np.clip(cross, 0.0, None)).sum())
    diff = mu_a - mu_b
    value = float(diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * tr_cross)
    return max(value, 0.0)


class HistogramEmbedder:
    """Fixed, hand-built layout features.

    Per category: normalized 8-bin histograms of x, y, w and h (each scaled
    by the canvas to [0, 1]), divided by the element count.  Then the element
    count and the mean and variance of each scaled coordinate.  Optionally
    truncated or zero-padded to ``dim``.
    """

    def __init__(self, vocab: CategoryVocab, dim: int | None = None):
        self.vocab = vocab
        self.dim = dim

    @property
    def natural_dim(self) -> int:
        return len(self.vocab.labels) * 4 * HIST_BINS + 1 + 8

    def __call__(self, layout: Layout) -> np.ndarray:
        n_cat = len(self.vocab.labels)
        hist = np.zeros((n_cat, 4, HIST_BINS))
        coords = np.zeros((max(len(layout), 1), 4))
        for i, e in enumerate(layout.elements):
            scaled = np.clip([e.x / layout.canvas_w, e.y / layout.canvas_h,
                              e.w / layout.canvas_w, e.h / layout.canvas_h], 0.0, 1.0)
            coords[i] = scaled
            if e.category in self.vocab:
                c = self.vocab.index(e.category)
                idx = np.minimum((scaled * HIST_BINS).astype(int), HIST_BINS - 1)
                hist[c, np.arange(4), idx] += 1
        n = len(layout)
        if n:
            hist /= n
        stats = np.concatenate([[float(n)], coords.mean(axis=0), coords.var(axis=0)])
        v = np.concatenate([hist.ravel(), stats])
        if self.dim is not None:
            v = v[: self.dim] if len(v) >= self.dim else np.pad(v, (0, self.dim - len(v)))
        return v


class FeatureTable:
    """Embedder backed by precomputed vectors keyed by ``source_id``."""

    def __init__(self, table: Mapping[str, Sequence[float]]):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}

    def __call__(self, layout: Layout) -> np.ndarray:
        try:
            return self.table[layout.source_id]
        except KeyError:
            raise KeyError(f"no feature vector for source_id {layout.source_id!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> "FeatureTable":
        return cls(dict(read_features(path)))


def write_features(items: Iterable[tuple[str, Sequence[float]]], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for source_id, v in items:
            fh.write(json.dumps({"source_id": source_id, "v": [float(x) for x in v]}) + "\n")
            n += 1
    return n


def read_features(path: str | Path) -> list[tuple[str, list[float]]]:
    with open(path, encoding="utf-8") as fh:
        docs = [json.loads(line) for line in fh if line.strip()]
    return [(d["source_id"], d["v"]) for d in docs]
