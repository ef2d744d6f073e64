"""Generation records: one per completed prompt, including failures."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..codec import ParseOutcome
from ..layout import Layout, layout_from_dict, layout_to_dict


@dataclass
class GenerationRecord:
    source_id: str
    task: str
    raw: str | None
    status: str
    repairs: list[str] = field(default_factory=list)
    clipped: int = 0
    layout: Layout | None = None
    prompt: str = ""
    error: str | None = None
    sample: int = 0

    @property
    def failed(self) -> bool:
        return self.status == "failed"

    @classmethod
    def from_outcome(cls, source_id: str, task: str, raw: str, outcome: ParseOutcome,
                     prompt: str = "", sample: int = 0) -> "GenerationRecord":
        layout = outcome.layout
        if layout is not None:
            layout = Layout(layout.canvas_w, layout.canvas_h, layout.elements, source_id)
        return cls(source_id, task, raw, outcome.status, list(outcome.repairs), outcome.clipped,
                   layout, prompt, None, sample)

    @classmethod
    def from_error(cls, source_id: str, task: str, error: str, prompt: str = "",
                   sample: int = 0) -> "GenerationRecord":
        return cls(source_id, task, None, "failed", [], 0, None, prompt, error, sample)

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "task": self.task,
            "sample": self.sample,
            "raw": self.raw,
            "status": self.status,
            "repairs": self.repairs,
            "clipped": self.clipped,
            "error": self.error,
            "prompt": self.prompt,
            "layout": layout_to_dict(self.layout) if self.layout is not None else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GenerationRecord":
        layout = layout_from_dict(doc["layout"]) if doc.get("layout") else None
        return cls(doc["source_id"], doc.get("task", ""), doc.get("raw"), doc["status"],
                   list(doc.get("repairs", [])), int(doc.get("clipped", 0)), layout,
                   doc.get("prompt", ""), doc.get("error"), int(doc.get("sample", 0)))


def write_records(records: Iterable[GenerationRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_records(path: str | Path) -> list[GenerationRecord]:
    with open(path, encoding="utf-8") as fh:
        return [GenerationRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
