"""SVG rendering of layouts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping
from xml.sax.saxutils import escape, quoteattr

from .layout import CategoryVocab, Layout, to_corners

# 25 distinct colors, enough for the largest benchmark vocabulary; cycles beyond.
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896",
    "#c5b0d5", "#c49c94", "#f7b6d2", "#c7c7c7", "#dbdb8d", "#9edae5", "#393b79",
    "#637939", "#8c6d31", "#843c39", "#7b4173",
)
FALLBACK_COLOR = "#555555"


@dataclass(frozen=True)
class RenderStyle:
    colors: Mapping[str, str] = field(default_factory=dict)
    opacity: float = 0.6
    stroke_width: float = 1.0
    label_text: bool = False
    background: str = "#ffffff"

    @classmethod
    def for_vocab(cls, vocab: CategoryVocab, **kwargs) -> "RenderStyle":
        colors = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(vocab.labels)}
        return cls(colors=colors, **kwargs)

    def color(self, category: str) -> str:
        return self.colors.get(category, FALLBACK_COLOR)


def _num(v: float) -> str:
    # shortest exact repr, so rect edges stay inside the canvas after parsing
    v = float(v) + 0.0
    return str(int(v)) if v.is_integer() else repr(v)


def render_svg(layout: Layout, style: RenderStyle) -> str:
    W, H = layout.canvas_w, layout.canvas_h
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(W)}" '
        f'height="{_num(H)}" viewBox="0 0 {_num(W)} {_num(H)}">',
        f'<rect x="0" y="0" width="{_num(W)}" height="{_num(H)}" fill="{style.background}" '
        f'stroke="#000000" stroke-width="{_num(style.stroke_width)}"/>',
    ]
    font = max(min(W, H) / 40.0, 1.0)
    for e in layout.elements:
        left, top, right, bottom = to_corners(e)
        # defensive clip; callers should already pass in-canvas layouts
        left, top = min(max(left, 0.0), W), min(max(top, 0.0), H)
        right, bottom = min(max(right, left), W), min(max(bottom, top), H)
        color = style.color(e.category)
        out.append(
            f'<rect x="{_num(left)}" y="{_num(top)}" width="{_num(right - left)}" '
            f'height="{_num(bottom - top)}" fill="{color}" fill-opacity="{_num(style.opacity)}" '
            f'stroke="{color}" stroke-width="{_num(style.stroke_width)}" '
            f'data-category={quoteattr(e.category)}/>'
        )
        if style.label_text:
            out.append(
                f'<text x="{_num(left + font * 0.2)}" y="{_num(top + font)}" '
                f'font-family="sans-serif" font-size="{_num(font)}">{escape(e.category)}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
