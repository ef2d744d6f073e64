import xml.etree.ElementTree as ET

import numpy as np
from hypothesis import given

from conftest import VOCAB, quantized_layouts, random_quantized_layout
from layoutcode.layout import Element, Layout
from layoutcode.render import RenderStyle, render_svg

NS = "{http://www.w3.org/2000/svg}"
STYLE = RenderStyle.for_vocab(VOCAB)


def rects(svg):
    return ET.fromstring(svg).findall(f"{NS}rect")


def test_empty_layout_has_only_background():
    root = ET.fromstring(render_svg(Layout(100, 80, ()), STYLE))
    assert root.tag == f"{NS}svg" and root.get("viewBox") == "0 0 100 80"
    (bg,) = root.findall(f"{NS}rect")
    assert (bg.get("width"), bg.get("height")) == ("100", "80")


def test_center_to_corner_conversion():
    svg = render_svg(Layout(100, 100, (Element("text", 50, 50, 20, 10),)), STYLE)
    box = rects(svg)[1]
    assert [box.get(a) for a in ("x", "y", "width", "height")] == ["40", "45", "20", "10"]
    assert box.get("data-category") == "text" and box.get("fill") == STYLE.color("text")


def test_deterministic_bytes():
    layout = random_quantized_layout(np.random.default_rng(0), n=12)
    assert render_svg(layout, STYLE).encode() == render_svg(layout, STYLE).encode()


def test_labels_are_escaped():
    style = RenderStyle(label_text=True)
    svg = render_svg(Layout(50, 50, (Element("a&b", 25, 25, 10, 10),)), style)
    root = ET.fromstring(svg)
    assert root.find(f"{NS}text").text == "a&b"
    assert rects(svg)[1].get("fill") == "#555555"


@given(quantized_layouts())
def test_well_formed_and_inside_canvas(layout):
    svg = render_svg(layout, STYLE)
    boxes = rects(svg)[1:]
    assert len(boxes) == len(layout)
    for b in boxes:
        x, y, w, h = (float(b.get(a)) for a in ("x", "y", "width", "height"))
        assert x >= 0 and y >= 0 and w >= 0 and h >= 0
        assert x + w <= layout.canvas_w + 1e-9 and y + h <= layout.canvas_h + 1e-9
