"""Adaptive quantization of element positions and sizes.

Each of ``x``, ``y``, ``w`` and ``h`` is clustered independently with 1-D
k-means over every element of a corpus.  Encoding snaps a value to its
nearest centroid and rounds to one decimal place, which is the string form
embedded in layout code.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .layout import FIELDS, Layout

DEFAULT_K = 128
MAX_ITER = 300
# Above this many distinct values the exact solver is skipped for Lloyd.
EXACT_LIMIT = 5000


class QuantizerError(ValueError):
    pass


def round1(v: float) -> float:
    """Round to one decimal, halves away from zero."""
    r = float(Decimal(repr(float(v))).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))
    return r + 0.0  # drops the sign of -0.0


@dataclass(frozen=True)
class FieldBins:
    field: str
    centroids: tuple[float, ...]

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.centroids)
        object.__setattr__(self, "centroids", c)
        if not c:
            raise QuantizerError(f"{self.field}: at least one centroid required")
        if not all(math.isfinite(v) for v in c):
            raise QuantizerError(f"{self.field}: centroids must be finite")
        if any(b <= a for a, b in zip(c, c[1:])):
            raise QuantizerError(f"{self.field}: centroids must be strictly increasing")

    @cached_property
    def _array(self) -> np.ndarray:
        return np.asarray(self.centroids)

    @cached_property
    def rounded(self) -> tuple[float, ...]:
        return tuple(round1(c) for c in self.centroids)

    def nearest_index(self, v: float) -> int:
        c = self._array
        j = int(np.searchsorted(c, v))
        if j == 0:
            return 0
        if j == len(c):
            return len(c) - 1
        # equidistant values go to the smaller centroid
        return j - 1 if v - c[j - 1] <= c[j] - v else j


@dataclass(frozen=True)
class Quantizer:
    bins: Mapping[str, FieldBins]
    k: int
    seed: int = 0
    fit_stats: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        missing = [f for f in FIELDS if f not in self.bins]
        if missing:
            raise QuantizerError(f"quantizer missing fields {missing}")

    def encode_value(self, name: str, v: float) -> float:
        b = self.bins[name]
        return b.rounded[b.nearest_index(v)]

    def quantize_layout(self, layout: Layout) -> Layout:
        return layout.with_elements(
            e.replace(**{f: self.encode_value(f, e.get(f)) for f in FIELDS})
            for e in layout.elements
        )

    def bin_values(self, name: str) -> list[float]:
        """Distinct encoded values a field can take, ascending."""
        return sorted(set(self.bins[name].rounded))

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "fields": {
                f: {"centroids": list(self.bins[f].centroids), "sse": float(self.fit_stats.get(f, 0.0))}
                for f in FIELDS
            },
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Quantizer":
        try:
            fields = doc["fields"]
            bins = {f: FieldBins(f, fields[f]["centroids"]) for f in FIELDS}
            stats = {f: float(fields[f].get("sse", 0.0)) for f in FIELDS}
            return cls(bins, int(doc["k"]), int(doc.get("seed", 0)), stats)
        except (KeyError, TypeError) as exc:
            raise QuantizerError(f"malformed quantizer document: missing {exc}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Quantizer":
        return cls.from_dict(json.loads(Path(path).read_text()))


def encode_value(q: Quantizer, name: str, v: float) -> float:
    return q.encode_value(name, v)


def quantize_layout(q: Quantizer, layout: Layout) -> Layout:
    return q.quantize_layout(layout)


# -- 1-D k-means --------------------------------------------------------------

def weighted_sse(values: np.ndarray, weights: np.ndarray, labels: np.ndarray,
                 centroids: np.ndarray) -> float:
    d = values - centroids[labels]
    return float(np.sum(weights * d * d))


def _exact_boundaries(v: np.ndarray, c: np.ndarray, k: int) -> list[int]:
    """Optimal split of sorted distinct values ``v`` (weights ``c``) into k runs.

    Dynamic program over prefix sums; each layer is solved by divide and
    conquer over the monotone optimal split point.  Returns start indices of
    each run.
    """
    n = len(v)
    x = v - np.average(v, weights=c)
    s0 = np.concatenate([[0.0], np.cumsum(c)])
    s1 = np.concatenate([[0.0], np.cumsum(c * x)])
    s2 = np.concatenate([[0.0], np.cumsum(c * x * x)])

    def cost(i: np.ndarray | int, j: int) -> np.ndarray:
        # SSE of the run v[i..j] inclusive
        w = s0[j + 1] - s0[i]
        m = s1[j + 1] - s1[i]
        return np.maximum(s2[j + 1] - s2[i] - m * m / w, 0.0)

    prev = np.maximum(s2[1:] - s1[1:] ** 2 / s0[1:], 0.0)  # one run covering v[0..j]
    splits = np.zeros((k, n), dtype=np.int64)
    for m in range(1, k):
        cur = np.full(n, np.inf)
        arg = splits[m]

        stack = [(m, n - 1, m, n - 1)]
        while stack:
            jlo, jhi, ilo, ihi = stack.pop()
            if jlo > jhi:
                continue
            mid = (jlo + jhi) // 2
            cand = np.arange(max(ilo, m), min(ihi, mid) + 1)
            vals = prev[cand - 1] + cost(cand, mid)
            best = int(np.argmin(vals))
            cur[mid] = vals[best]
            arg[mid] = cand[best]
            stack.append((jlo, mid - 1, ilo, int(cand[best])))
            stack.append((mid + 1, jhi, int(cand[best]), ihi))
        prev = cur

    starts = [0] * k
    j = n - 1
    for m in range(k - 1, 0, -1):
        starts[m] = int(splits[m][j])
        j = starts[m] - 1
    return starts


def _kmeans_pp(v: np.ndarray, c: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [v[rng.choice(len(v), p=c / c.sum())]]
    d2 = (v - centers[0]) ** 2
    for _ in range(1, k):
        p = c * d2
        total = p.sum()
        if total <= 0:
            break
        nxt = v[rng.choice(len(v), p=p / total)]
        centers.append(nxt)
        d2 = np.minimum(d2, (v - nxt) ** 2)
    return np.unique(np.asarray(centers))


def _assign(v: np.ndarray, centers: np.ndarray) -> np.ndarray:
    mids = (centers[1:] + centers[:-1]) / 2.0
    # ties go to the lower centroid
    return np.searchsorted(mids, v, side="left")


def _lloyd(v: np.ndarray, c: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int = MAX_ITER) -> np.ndarray:
    centers = _kmeans_pp(v, c, k, rng)
    while len(centers) < k:  # k-means++ ran out of distinct picks
        centers = np.unique(np.concatenate([centers, v[rng.choice(len(v), size=1)]]))
    labels = _assign(v, centers)
    for _ in range(max_iter):
        counts = np.bincount(labels, weights=c, minlength=k)
        sums = np.bincount(labels, weights=c * v, minlength=k)
        empty = counts == 0
        centers = np.where(empty, centers, sums / np.where(empty, 1.0, counts))
        for e in np.flatnonzero(empty):
            # split the cluster with the largest SSE at its farthest point
            d = c * (v - centers[labels]) ** 2
            sse = np.bincount(labels, weights=d, minlength=k)
            worst = int(np.argmax(sse))
            members = np.flatnonzero(labels == worst)
            far = members[np.argmax(np.abs(v[members] - centers[worst]))]
            centers[e] = v[far]
            labels[far] = e
        order = np.argsort(centers, kind="stable")
        centers = centers[order]
        new_labels = _assign(v, centers)
        if np.array_equal(new_labels, labels) and not empty.any():
            break
        labels = new_labels
    return labels


def kmeans_1d(values: Sequence[float] | np.ndarray, k: int, seed: int = 0, *,
              method: str = "auto", max_iter: int = MAX_ITER,
              exact_limit: int = EXACT_LIMIT) -> tuple[np.ndarray, float]:
    """Cluster a 1-D multiset into at most ``k`` groups.

    ``method="exact"`` solves the problem to global optimality,
    ``method="lloyd"`` runs k-means++ seeded Lloyd iterations, and ``"auto"``
    picks exact unless there are more than ``exact_limit`` distinct values.

    Returns:
        Sorted centroids and the within-cluster sum of squares.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise QuantizerError("cannot cluster an empty value set")
    if k < 1:
        raise QuantizerError("k must be positive")
    v, counts = np.unique(arr, return_counts=True)
    c = counts.astype(float)
    if len(v) <= k:
        return v.copy(), 0.0
    if method == "auto":
        method = "exact" if len(v) <= exact_limit else "lloyd"
    if method == "exact":
        starts = _exact_boundaries(v, c, k)
        labels = np.zeros(len(v), dtype=np.int64)
        for m, s in enumerate(starts):
            labels[s:] = m
    elif method == "lloyd":
        labels = _lloyd(v, c, k, np.random.default_rng(seed), max_iter)
    else:
        raise QuantizerError(f"unknown method {method!r}")
    counts_k = np.bincount(labels, weights=c, minlength=k)
    keep = counts_k > 0
    sums = np.bincount(labels, weights=c * v, minlength=k)
    centroids = sums[keep] / counts_k[keep]
    remap = np.cumsum(keep) - 1
    labels = remap[labels]
    sse = weighted_sse(v, c, labels, centroids)
    order = np.argsort(centroids)
    return centroids[order], sse


def fit(layouts: Iterable[Layout], k: int = DEFAULT_K, seed: int = 0, *,
        method: str = "auto", exact_limit: int = EXACT_LIMIT) -> Quantizer:
    layouts = list(layouts)
    if not layouts:
        raise QuantizerError("cannot fit a quantizer on an empty collection")
    columns: dict[str, list[float]] = {f: [] for f in FIELDS}
    for layout in layouts:
        for e in layout.elements:
            for f in FIELDS:
                v = e.get(f)
                if not math.isfinite(v):
                    raise QuantizerError(f"non-finite {f} in layout {layout.source_id!r}")
                columns[f].append(v)
    bins, stats = {}, {}
    for i, f in enumerate(FIELDS):
        if not columns[f]:
            raise QuantizerError("collection has no elements")
        seq = np.random.SeedSequence([seed, i])
        centroids, sse = kmeans_1d(columns[f], k, int(seq.generate_state(1)[0]),
                                   method=method, exact_limit=exact_limit)
        bins[f] = FieldBins(f, tuple(centroids))
        stats[f] = sse
    return Quantizer(bins, k, seed, stats)
