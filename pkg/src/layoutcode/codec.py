"""Layout <-> HTML code serialization, masking, prompting and tolerant parsing."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .layout import CategoryVocab, Element, Layout, to_corners, from_corners

log = logging.getLogger(__name__)

MASK = "<M>"
HEADER = '<html><body><svg width="{W}" height="{H}">'
FOOTER = "</svg></body></html>"
RECT = '<rect data-category="{c}" x="{x}" y="{y}" width="{w}" height="{h}">'
INSTRUCTION = ("I want to generate layout in {domain} style. "
               "Please generate the layout according to the {condition} I provide:")

# field name -> rect attribute name
ATTRS = {"x": "x", "y": "y", "w": "width", "h": "height"}
CLIP_TOL = 1e-9


class CodecError(ValueError):
    pass


@dataclass(frozen=True)
class CodeTemplate:
    domain_name: str
    task_condition: str

    def __post_init__(self) -> None:
        if not self.domain_name or not self.task_condition:
            raise CodecError("domain name and task condition must be non-empty")

    def instruction(self) -> str:
        return INSTRUCTION.format(domain=self.domain_name, condition=self.task_condition)


@dataclass(frozen=True)
class MaskedCode:
    instruction: str
    body: str
    mask_count: int


@dataclass
class ParseOutcome:
    status: str  # "ok" | "repaired" | "failed"
    layout: Layout | None
    repairs: list[str] = field(default_factory=list)
    clipped: int = 0

    @property
    def failed(self) -> bool:
        return self.status == "failed"


def fmt1(v: float) -> str:
    s = f"{v:.1f}"
    return "0.0" if s == "-0.0" else s


def serialize(layout: Layout, vocab: CategoryVocab | None = None) -> str:
    lines = [HEADER.format(W=fmt1(layout.canvas_w), H=fmt1(layout.canvas_h))]
    for e in layout.elements:
        if vocab is not None and e.category not in vocab:
            raise CodecError(f"category {e.category!r} not in vocabulary {vocab.domain_name!r}")
        lines.append(RECT.format(c=e.category, x=fmt1(e.x), y=fmt1(e.y), w=fmt1(e.w), h=fmt1(e.h)))
    lines.append(FOOTER)
    return "\n".join(lines)


def _split_instruction(code: str) -> tuple[str, str]:
    first, sep, rest = code.partition("\n")
    if sep and INSTRUCTION_RE.fullmatch(first):
        return first, rest
    return "", code


def mask_fields(code: str, fields_to_mask: Mapping[int, Iterable[str]] | Sequence[Iterable[str]]) -> MaskedCode:
    """Replace the chosen attribute values of the chosen rects with ``<M>``.

    ``fields_to_mask`` maps element index (rect order) to a set of field
    names among ``x``, ``y``, ``w``, ``h``.
    """
    instruction, body = _split_instruction(code)
    plan = dict(fields_to_mask.items()) if isinstance(fields_to_mask, Mapping) else dict(enumerate(fields_to_mask))
    lines = body.split("\n")
    rect_lines = [i for i, line in enumerate(lines) if line.startswith("<rect ")]
    count = 0
    for idx, names in plan.items():
        names = set(names)
        if not names:
            continue
        if not 0 <= idx < len(rect_lines):
            raise CodecError(f"element index {idx} out of range (code has {len(rect_lines)} elements)")
        unknown = names - set(ATTRS)
        if unknown:
            raise CodecError(f"cannot mask unknown fields {sorted(unknown)}")
        li = rect_lines[idx]
        line = lines[li]
        for name in sorted(names):
            line, n = re.subn(rf'(\s{ATTRS[name]}=")[^"]*(")', rf"\g<1>{MASK}\g<2>", line, count=1)
            count += n
        lines[li] = line
    return MaskedCode(instruction, "\n".join(lines), count)


def build_prompt(template: CodeTemplate, masked: MaskedCode) -> str:
    return template.instruction() + "\n" + masked.body


# -- parsing ------------------------------------------------------------------

INSTRUCTION_RE = re.compile(
    r"I want to generate layout in [^\n]*? style\. Please generate the layout according to the [^\n]*? I provide:"
)
# quoted values may contain "<M>", so only unquoted text excludes angle brackets
RECT_RE = re.compile(r"""<rect\b((?:"[^"]*"|'[^']*'|[^'"<>])*)>""", re.IGNORECASE)
ATTR_RE = re.compile(r"""([^\s"'=<>/]+)\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s"'=<>`]+))""")
NUMBER_RE = re.compile(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?")
STRUCTURE_RE = re.compile(
    r"</?html\s*>|</?body\s*>|<svg\b(?:\"[^\"]*\"|'[^']*'|[^'\"<>])*>|</svg\s*>|</rect\s*>",
    re.IGNORECASE,
)


def _number(raw: str | None) -> float | None:
    if raw is None:
        return None
    raw = raw.strip()
    if not NUMBER_RE.fullmatch(raw):
        return None
    v = float(raw)
    return v if math.isfinite(v) else None


def _clip(e: Element, canvas_w: float, canvas_h: float) -> Element | None:
    left, top, right, bottom = to_corners(e)
    if left >= -CLIP_TOL and top >= -CLIP_TOL and right <= canvas_w + CLIP_TOL and bottom <= canvas_h + CLIP_TOL:
        return e
    left, top = max(left, 0.0), max(top, 0.0)
    right, bottom = min(right, canvas_w), min(bottom, canvas_h)
    if right - left <= CLIP_TOL or bottom - top <= CLIP_TOL:
        return None
    return from_corners(e.category, left, top, right, bottom)


def parse_completion(text: str | bytes, canvas_w: float, canvas_h: float,
                     vocab: CategoryVocab | None = None) -> ParseOutcome:
    """Recover a layout from (possibly malformed) model output.

    Rect fragments are matched tolerantly: any attribute order, single,
    double or no quotes, extra attributes ignored.  Fragments that cannot be
    read in full are dropped and recorded in ``repairs``; boxes reaching past
    the canvas are intersected with it.  Never raises.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode("utf-8", errors="replace")
    repairs: list[str] = []
    elements: list[Element] = []
    clipped = 0
    leftovers: list[str] = []
    pos = 0
    for n, m in enumerate(RECT_RE.finditer(text)):
        leftovers.append(text[pos:m.start()])
        pos = m.end()
        attrs: dict[str, str] = {}
        body = m.group(1).rstrip()
        if body.endswith("/"):  # self-closed form
            body = body[:-1]
        for a in ATTR_RE.finditer(body):
            name = a.group(1).lower()
            if name not in attrs:
                attrs[name] = next(g for g in a.group(2, 3, 4) if g is not None)
        cat = attrs.get("data-category")
        if cat is None or not cat:
            repairs.append(f"rect {n}: dropped, missing data-category")
            continue
        if vocab is not None and cat not in vocab:
            repairs.append(f"rect {n}: dropped, unknown category {cat!r}")
            continue
        values = {}
        for f, attr in ATTRS.items():
            raw = attrs.get(attr)
            if raw is not None and MASK.lower() in raw.lower():
                repairs.append(f"rect {n}: dropped, unresolved mask in {attr}")
                break
            v = _number(raw)
            if v is None:
                repairs.append(f"rect {n}: dropped, {attr} is {'missing' if raw is None else 'not numeric'}")
                break
            values[f] = v
        else:
            if values["w"] <= 0 or values["h"] <= 0:
                repairs.append(f"rect {n}: dropped, non-positive size")
                continue
            original = Element(cat, **values)
            e = _clip(original, canvas_w, canvas_h)
            if e is None:
                repairs.append(f"rect {n}: dropped, no overlap with canvas")
                continue
            if e is not original:
                clipped += 1
            elements.append(e)
    leftovers.append(text[pos:])
    rest = INSTRUCTION_RE.sub("", STRUCTURE_RE.sub("", "".join(leftovers)))
    if rest.strip():
        repairs.append(f"removed {len(rest.strip())} characters of unrecognized text")
    if not re.search(r"<svg\b", text, re.IGNORECASE) or not re.search(r"</svg\s*>", text, re.IGNORECASE):
        repairs.append("svg wrapper incomplete")

    if not elements:
        if not repairs:
            repairs.append("no rect elements found")
        return ParseOutcome("failed", None, repairs, clipped)
    for r in repairs:
        log.debug("repair: %s", r)
    status = "ok" if not repairs and clipped == 0 else "repaired"
    return ParseOutcome(status, Layout(canvas_w, canvas_h, tuple(elements)), repairs, clipped)


def parse_canvas(code: str) -> tuple[float, float] | None:
    """Read ``(W, H)`` from the svg tag of a code body, if present."""
    m = re.search(r"<svg\b((?:\"[^\"]*\"|'[^']*'|[^'\"<>])*)>", code, re.IGNORECASE)
    if not m:
        return None
    attrs = {a.group(1).lower(): next(g for g in a.group(2, 3, 4) if g is not None)
             for a in ATTR_RE.finditer(m.group(1))}
    w, h = _number(attrs.get("width")), _number(attrs.get("height"))
    if w is None or h is None:
        return None
    return w, h
