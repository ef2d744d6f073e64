"""Conditional task samples, element-order permutations, filtering and splits."""

from __future__ import annotations

import enum
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .codec import ATTRS, MASK, CodeTemplate, build_prompt, mask_fields, serialize
from .layout import FIELDS, CategoryVocab, Element, Layout
from .quantizer import Quantizer, round1

COMPLETION_MAX_RATIO = 0.8


class TaskKind(str, enum.Enum):
    C_TO_SP = "CToSP"
    CS_TO_P = "CSToP"
    COMPLETION = "Completion"

    @classmethod
    def parse(cls, value: "str | TaskKind") -> "TaskKind":
        if isinstance(value, TaskKind):
            return value
        for t in cls:
            if value in (t.value, t.name, t.arrow):
                return t
        raise ValueError(f"unknown task {value!r}")

    @property
    def arrow(self) -> str:
        return {"CToSP": "C->S+P", "CSToP": "C+S->P", "Completion": "Completion"}[self.value]


ALL_TASKS = (TaskKind.C_TO_SP, TaskKind.CS_TO_P, TaskKind.COMPLETION)

DEFAULT_CONDITIONS = {
    TaskKind.C_TO_SP: "categories",
    TaskKind.CS_TO_P: "categories and sizes",
    TaskKind.COMPLETION: "remaining values",
}


class TaskgenError(ValueError):
    pass


@dataclass(frozen=True)
class TaskSample:
    task: TaskKind
    permutation_index: int
    prompt: str
    target: str
    source_id: str
    mask_count: int

    def to_dict(self) -> dict:
        return {"source_id": self.source_id, "task": self.task.value,
                "perm": self.permutation_index, "prompt": self.prompt, "target": self.target}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TaskSample":
        return cls(TaskKind.parse(doc["task"]), int(doc["perm"]), doc["prompt"], doc["target"],
                   doc["source_id"], doc["prompt"].count(MASK))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.95
    max_elements: int = 25
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.train_fraction < 1:
            raise TaskgenError("train_fraction must lie in (0, 1)")
        if self.max_elements < 1:
            raise TaskgenError("max_elements must be >= 1")


@dataclass(frozen=True)
class TemplateConfig:
    """Domain name plus the task-condition phrase used for each task."""

    domain_name: str
    conditions: Mapping[TaskKind | str, str] = field(default_factory=dict)
    resample_completion_mask: bool = True

    def __post_init__(self) -> None:
        merged = dict(DEFAULT_CONDITIONS)
        merged.update({TaskKind.parse(k): v for k, v in self.conditions.items()})
        object.__setattr__(self, "conditions", merged)

    def template(self, task: TaskKind) -> CodeTemplate:
        return CodeTemplate(self.domain_name, self.conditions[task])


def filter_and_split(layouts: Iterable[Layout], spec: SplitSpec) -> tuple[list[Layout], list[Layout]]:
    kept = [l for l in layouts if 0 < len(l) <= spec.max_elements]
    if not kept:
        raise TaskgenError("no layouts left after filtering")
    order = np.random.default_rng(spec.seed).permutation(len(kept))
    n_train = math.ceil(spec.train_fraction * len(kept))
    shuffled = [kept[i] for i in order]
    return shuffled[:n_train], shuffled[n_train:]


def layout_rng(seed: int, source_id: str) -> np.random.Generator:
    """Per-layout generator, so output does not depend on processing order."""
    digest = int.from_bytes(hashlib.sha256(source_id.encode("utf-8")).digest()[:8], "big")
    return np.random.default_rng([seed, digest])


def mask_plan(task: TaskKind, layout: Layout, rng: np.random.Generator,
              ratio: float | None = None) -> dict[int, frozenset[str]]:
    """Choose which numeric fields of each element are hidden for ``task``.

    For the completion task a ratio is drawn from U[0, 0.8] (unless given)
    and each of the 4N fields is masked independently with that probability.
    """
    task = TaskKind.parse(task)
    n = len(layout)
    if task is TaskKind.C_TO_SP:
        return {i: frozenset(FIELDS) for i in range(n)}
    if task is TaskKind.CS_TO_P:
        return {i: frozenset(("x", "y")) for i in range(n)}
    r = rng.uniform(0.0, COMPLETION_MAX_RATIO) if ratio is None else ratio
    hits = rng.random((n, len(FIELDS))) < r
    return {i: frozenset(f for f, hit in zip(FIELDS, row) if hit) for i, row in enumerate(hits)}


def _snap_inside(e: Element, canvas_w: float, canvas_h: float) -> Element | None:
    """Shrink a quantized box onto the 0.1 grid so it lies inside the canvas."""
    out = {}
    for c, s, size in (("x", "w", canvas_w), ("y", "h", canvas_h)):
        lo, hi = e.get(c) - e.get(s) / 2, e.get(c) + e.get(s) / 2
        if lo >= 0 and hi <= size:
            out[c], out[s] = e.get(c), e.get(s)
            continue
        # work in tenths to keep every value representable with one decimal
        lo_t = max(math.ceil(round(lo * 10, 6)), 0)
        hi_t = min(math.floor(round(hi * 10, 6)), math.floor(round(size * 10, 6)))
        if (hi_t - lo_t) % 2:
            hi_t -= 1
        if hi_t - lo_t <= 0:
            return None
        out[c], out[s] = round1((lo_t + hi_t) / 20), round1((hi_t - lo_t) / 10)
    return e.replace(**out)


def prepare_target(q: Quantizer, layout: Layout) -> Layout | None:
    """Quantize ``layout`` and pull any box that spills off the canvas back in.

    Returns None when nothing survives.
    """
    quantized = q.quantize_layout(layout)
    kept = [s for s in (_snap_inside(e, layout.canvas_w, layout.canvas_h) for e in quantized) if s]
    return quantized.with_elements(kept) if kept else None


def build_samples(layout: Layout, q: Quantizer | None, config: TemplateConfig, K: int = 10,
                  tasks: Sequence[TaskKind | str] = ALL_TASKS, seed: int = 0,
                  vocab: CategoryVocab | None = None) -> list[TaskSample]:
    """All ``K * len(tasks)`` samples of one layout.

    Permutation 0 keeps the original element order.  ``q=None`` means the
    layout is already quantized.
    """
    if K < 1:
        raise TaskgenError("K must be >= 1")
    tasks = [TaskKind.parse(t) for t in tasks]
    target_layout = prepare_target(q, layout) if q is not None else layout
    if target_layout is None:
        raise TaskgenError(f"layout {layout.source_id!r} has no element left inside the canvas")
    rng = layout_rng(seed, layout.source_id)
    n = len(target_layout)
    perms = [np.arange(n)] + [rng.permutation(n) for _ in range(K - 1)]
    fixed_completion = None
    if not config.resample_completion_mask:
        fixed_completion = mask_plan(TaskKind.COMPLETION, target_layout, rng)

    samples = []
    for k, perm in enumerate(perms):
        ordered = target_layout.with_elements(target_layout.elements[i] for i in perm)
        code = serialize(ordered, vocab)
        for task in tasks:
            if task is TaskKind.COMPLETION and fixed_completion is not None:
                plan = {pos: fixed_completion[int(orig)] for pos, orig in enumerate(perm)}
            else:
                plan = mask_plan(task, ordered, rng)
            masked = mask_fields(code, plan)
            template = config.template(task)
            samples.append(TaskSample(
                task, k, build_prompt(template, masked), template.instruction() + "\n" + code,
                layout.source_id, masked.mask_count,
            ))
    return samples


def fill_masks(prompt: str, target: str) -> str:
    """Substitute each ``<M>`` in ``prompt`` with the value at that spot in ``target``."""
    out, t = [], 0
    parts = prompt.split(MASK)
    for i, part in enumerate(parts):
        if not target.startswith(part, t):
            raise TaskgenError("prompt and target diverge outside mask positions")
        out.append(part)
        t += len(part)
        if i < len(parts) - 1:
            end = target.index('"', t)
            out.append(target[t:end])
            t = end
    return "".join(out)


def export_corpus(samples: Iterable[TaskSample], path: str | Path) -> int:
    count = 0
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for s in samples:
                fh.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")
                count += 1
    except OSError as exc:
        raise OSError(f"cannot write corpus {path}: {exc.strerror}") from exc
    return count


def read_corpus(path: str | Path) -> list[TaskSample]:
    with open(path, encoding="utf-8") as fh:
        return [TaskSample.from_dict(json.loads(line)) for line in fh if line.strip()]


def numeric_attrs(code: str) -> list[str]:
    """Attribute values of every rect line, in order."""
    names = "|".join(ATTRS.values())
    return re.findall(rf'\s(?:{names})="([^"]*)"', "\n".join(l for l in code.split("\n") if l.startswith("<rect")))
