"""Layout data model and the canonical JSON interchange format.

Elements are stored center-based, ``(category, x, y, w, h)`` in absolute
canvas units.  Corner boxes are derived on demand with :func:`to_corners`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

FIELDS = ("x", "y", "w", "h")


class LayoutFormatError(ValueError):
    """Raised when a canonical layout document cannot be read.

    ``offset`` is the byte offset of a JSON syntax error; ``path`` is the
    field path of a schema violation (e.g. ``elements[2].w``).
    """

    def __init__(self, message: str, *, offset: int | None = None, path: str | None = None):
        super().__init__(message)
        self.offset = offset
        self.path = path


@dataclass(frozen=True)
class Element:
    category: str
    x: float
    y: float
    w: float
    h: float

    def get(self, name: str) -> float:
        return getattr(self, name)

    def replace(self, **changes: Any) -> "Element":
        values = {"category": self.category, "x": self.x, "y": self.y, "w": self.w, "h": self.h}
        values.update(changes)
        return Element(**values)


@dataclass(frozen=True)
class Layout:
    canvas_w: float
    canvas_h: float
    elements: tuple[Element, ...] = ()
    source_id: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.elements, tuple):
            object.__setattr__(self, "elements", tuple(self.elements))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    @property
    def categories(self) -> list[str]:
        return [e.category for e in self.elements]

    def with_elements(self, elements: Iterable[Element]) -> "Layout":
        return Layout(self.canvas_w, self.canvas_h, tuple(elements), self.source_id)


@dataclass(frozen=True)
class CategoryVocab:
    """Category labels of one dataset domain.

    ``underlay_labels`` are background-like categories whose overlaps with
    other elements are expected and therefore ignored by the overlap metric.
    """

    domain_name: str
    labels: tuple[str, ...]
    underlay_labels: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "underlay_labels", frozenset(self.underlay_labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("category labels must be unique")
        missing = self.underlay_labels - set(self.labels)
        if missing:
            raise ValueError(f"underlay labels not in vocabulary: {sorted(missing)}")
        for label in self.labels:
            if not label or any(ch in label for ch in "\"'<>\n"):
                raise ValueError(f"invalid category label {label!r}")

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @classmethod
    def from_layouts(cls, domain_name: str, layouts: Iterable[Layout],
                     underlay_labels: Iterable[str] = ()) -> "CategoryVocab":
        labels = sorted({e.category for layout in layouts for e in layout})
        return cls(domain_name, tuple(labels), frozenset(underlay_labels))


# Category sets of the three public benchmarks.
RICO_LABELS = (
    "Text", "Image", "Icon", "Text Button", "List Item", "Input", "Background Image",
    "Card", "Web View", "Radio Button", "Drawer", "Checkbox", "Advertisement", "Modal",
    "Pager Indicator", "Slider", "On/Off Switch", "Button Bar", "Toolbar",
    "Number Stepper", "Multi-Tab", "Date Picker", "Map View", "Video", "Bottom Navigation",
)
PUBLAYNET_LABELS = ("text", "title", "list", "table", "figure")
MAGAZINE_LABELS = (
    "text", "image", "headline", "text-over-image", "headline-over-image", "background",
)

PRESETS = {
    "rico": CategoryVocab("mobile UI", RICO_LABELS, frozenset({"Background Image"})),
    "publaynet": CategoryVocab("document", PUBLAYNET_LABELS),
    "magazine": CategoryVocab("magazine", MAGAZINE_LABELS, frozenset({"background"})),
}


def to_corners(e: Element) -> tuple[float, float, float, float]:
    """Return ``(left, top, right, bottom)`` for a center-based element."""
    hw, hh = e.w / 2.0, e.h / 2.0
    return e.x - hw, e.y - hh, e.x + hw, e.y + hh


def from_corners(category: str, left: float, top: float, right: float, bottom: float) -> Element:
    return Element(category, (left + right) / 2.0, (top + bottom) / 2.0, right - left, bottom - top)


def _finite(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate_layout(layout: Layout, vocab: CategoryVocab | None = None) -> list[str]:
    """List every invariant violation in ``layout``; empty means valid.

    Never raises, whatever the field values are.
    """
    problems: list[str] = []
    for name in ("canvas_w", "canvas_h"):
        v = getattr(layout, name, None)
        if not _finite(v):
            problems.append(f"{name} must be a finite number")
        elif v <= 0:
            problems.append(f"{name} must be > 0")
    for i, e in enumerate(layout.elements):
        cat = getattr(e, "category", None)
        if not isinstance(cat, str) or not cat:
            problems.append(f"element {i}: category must be a non-empty string")
        elif vocab is not None and cat not in vocab:
            problems.append(f"element {i}: category {cat!r} not in vocabulary")
        for name in FIELDS:
            v = getattr(e, name, None)
            if not _finite(v):
                problems.append(f"element {i}: {name} must be a finite number")
            elif name in ("w", "h") and v <= 0:
                problems.append(f"element {i}: {name} must be > 0")
    return problems


# -- canonical JSON ---------------------------------------------------------

def layout_to_dict(layout: Layout) -> dict:
    return {
        "source_id": layout.source_id,
        "canvas_w": float(layout.canvas_w),
        "canvas_h": float(layout.canvas_h),
        "elements": [
            {"category": e.category, "x": float(e.x), "y": float(e.y),
             "w": float(e.w), "h": float(e.h)}
            for e in layout.elements
        ],
    }


def _number(obj: dict, key: str, path: str) -> float:
    if key not in obj:
        raise LayoutFormatError(f"missing field {path}{key!s}", path=f"{path}{key}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise LayoutFormatError(f"field {path}{key} must be a number", path=f"{path}{key}")
    return float(v)


def layout_from_dict(doc: Any) -> Layout:
    if not isinstance(doc, dict):
        raise LayoutFormatError("layout document must be a JSON object", path="")
    canvas_w = _number(doc, "canvas_w", "")
    canvas_h = _number(doc, "canvas_h", "")
    source_id = doc.get("source_id", "")
    if not isinstance(source_id, str):
        raise LayoutFormatError("field source_id must be a string", path="source_id")
    raw = doc.get("elements")
    if not isinstance(raw, list):
        raise LayoutFormatError("field elements must be a list", path="elements")
    elements = []
    for i, item in enumerate(raw):
        prefix = f"elements[{i}]."
        if not isinstance(item, dict):
            raise LayoutFormatError(f"{prefix[:-1]} must be an object", path=prefix[:-1])
        cat = item.get("category")
        if not isinstance(cat, str):
            raise LayoutFormatError(f"field {prefix}category must be a string",
                                    path=prefix + "category")
        elements.append(Element(cat, *(_number(item, f, prefix) for f in FIELDS)))
    return Layout(canvas_w, canvas_h, tuple(elements), source_id)


def write_canonical(layout: Layout) -> bytes:
    return json.dumps(layout_to_dict(layout), ensure_ascii=False).encode("utf-8")


def read_canonical(data: bytes | str) -> Layout:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise LayoutFormatError(f"malformed JSON at byte {offset}: {exc.msg}", offset=offset) from exc
    return layout_from_dict(doc)


def read_jsonl(path: str | Path) -> list[Layout]:
    layouts = []
    with open(path, "rb") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                layouts.append(read_canonical(line))
            except LayoutFormatError as exc:
                raise LayoutFormatError(f"{path}:{lineno}: {exc}", offset=exc.offset,
                                        path=exc.path) from exc
    return layouts


def write_jsonl(layouts: Sequence[Layout], path: str | Path) -> int:
    with open(path, "wb") as fh:
        for layout in layouts:
            fh.write(write_canonical(layout) + b"\n")
    return len(layouts)
