"""Evaluation of generation records against reference layouts."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..generation.records import GenerationRecord
from ..layout import CategoryVocab, Layout
from .fid import fid
from .geometry import alignment_score, overlap_score
from .miou import layout_pair_miou

Embedder = Callable[[Layout], np.ndarray]


class EvaluationError(ValueError):
    pass


@dataclass
class EvalReport:
    miou: float | None
    fid: float | None
    align: float | None
    overlap: float | None
    fail_rate: float
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def evaluate(records: Sequence[GenerationRecord], reference: Sequence[Layout], embedder: Embedder,
             vocab: CategoryVocab | None = None,
             reference_embedder: Embedder | None = None, workers: int = 1) -> EvalReport:
    """Score one batch of generations.

    Records are matched to references by ``source_id``.  Failed records only
    count toward ``fail_rate``; the other metrics use survivors.  When
    nothing survives the metrics are None.  Per-layout scores run on
    ``workers`` threads; results keep record order so sums are reproducible.
    """
    by_id = {r.source_id: r for r in reference}
    for rec in records:
        if rec.source_id not in by_id:
            raise EvaluationError(f"record source_id {rec.source_id!r} has no reference layout")
    generated = len(records)
    survivors = [r for r in records if not r.failed and r.layout is not None]
    failed = generated - len(survivors)
    fail_rate = failed / generated if generated else 0.0
    counts = {"generated": generated, "failed": failed, "compared": len(survivors), "incomparable": 0}
    if not survivors:
        return EvalReport(None, None, None, None, 1.0 if generated else 0.0, counts)

    def score(rec: GenerationRecord) -> tuple[float | None, float, float]:
        return (layout_pair_miou(rec.layout, by_id[rec.source_id]),
                alignment_score(rec.layout), overlap_score(rec.layout, vocab))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score, survivors))
    else:
        scores = [score(r) for r in survivors]
    counts["incomparable"] = sum(s[0] is None for s in scores)
    miou = float(sum(s[0] or 0.0 for s in scores) / len(scores))
    align = float(np.mean([s[1] for s in scores]))
    overlap = float(np.mean([s[2] for s in scores]))

    fid_value = None
    ref_embed = reference_embedder or embedder
    if len(survivors) >= 2 and len(reference) >= 2:
        gen_feats = np.stack([embedder(r.layout) for r in survivors])
        ref_feats = np.stack([ref_embed(r) for r in reference])
        fid_value = fid(gen_feats, ref_feats)
    return EvalReport(miou, fid_value, align, overlap, fail_rate, counts)
