import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import quantized_layouts
from layoutcode.layout import (PRESETS, CategoryVocab, Element, Layout, LayoutFormatError,
                               read_canonical, read_jsonl, to_corners, validate_layout,
                               write_canonical, write_jsonl)


def test_valid_layout_has_no_violations():
    layout = Layout(100, 100, (Element("text", 50, 50, 10, 5),))
    assert validate_layout(layout) == []


def test_zero_width_is_reported():
    layout = Layout(100, 100, (Element("text", 50, 50, 0, 5),))
    assert validate_layout(layout) == ["element 0: w must be > 0"]


def test_empty_category_is_reported():
    problems = validate_layout(Layout(100, 100, (Element("", 50, 50, 10, 5),)))
    assert len(problems) == 1
    assert "element 0" in problems[0] and "category" in problems[0]


def test_nan_and_negative_values_are_violations():
    layout = Layout(float("nan"), -1, (Element("text", float("nan"), 1, -2, float("inf")),))
    problems = validate_layout(layout)
    assert any("canvas_w" in p for p in problems)
    assert any("canvas_h" in p for p in problems)
    assert any("element 0: x" in p for p in problems)
    assert any("element 0: w" in p for p in problems)
    assert any("element 0: h" in p for p in problems)


@given(st.lists(st.tuples(st.text(max_size=3),
                          *[st.one_of(st.floats(allow_nan=True, allow_infinity=True), st.integers())] * 4),
                max_size=4),
       st.floats(allow_nan=True), st.floats(allow_nan=True))
def test_validate_is_total(items, w, h):
    layout = Layout(w, h, tuple(Element(*it) for it in items))
    assert isinstance(validate_layout(layout), list)


def test_vocab_check_is_optional():
    layout = Layout(10, 10, (Element("widget", 5, 5, 1, 1),))
    assert validate_layout(layout) == []
    assert validate_layout(layout, PRESETS["publaynet"])


def test_read_minimal_document():
    layout = read_canonical(b'{"canvas_w":100,"canvas_h":200,"elements":[]}')
    assert (layout.canvas_w, layout.canvas_h, len(layout)) == (100.0, 200.0, 0)


def test_missing_field_names_it():
    with pytest.raises(LayoutFormatError) as info:
        read_canonical(b'{"canvas_w":100,"elements":[]}')
    assert info.value.path == "canvas_h"
    assert "canvas_h" in str(info.value)


def test_nested_schema_error_has_path():
    with pytest.raises(LayoutFormatError) as info:
        read_canonical(b'{"canvas_w":1,"canvas_h":1,"elements":[{"category":"a","x":1,"y":1,"w":"2","h":1}]}')
    assert info.value.path == "elements[0].w"


def test_malformed_json_reports_byte_offset():
    doc = '{"source_id": "é", "canvas_w": 1,, }'.encode()
    with pytest.raises(LayoutFormatError) as info:
        read_canonical(doc)
    assert info.value.offset == doc.index(b",,") + 1


@settings(max_examples=200)
@given(quantized_layouts())
def test_write_is_fixpoint_after_first_write(layout):
    once = write_canonical(layout)
    assert write_canonical(read_canonical(once)) == once


@given(st.lists(st.tuples(st.sampled_from(["a", "b c"]),
                          *[st.floats(-1e6, 1e6, allow_nan=False)] * 2,
                          *[st.floats(1e-6, 1e6)] * 2), max_size=6),
       st.floats(1e-3, 1e4), st.floats(1e-3, 1e4), st.text(max_size=8))
def test_round_trip_field_for_field(items, W, H, sid):
    layout = Layout(W, H, tuple(Element(*it) for it in items), sid)
    back = read_canonical(write_canonical(layout))
    assert back.source_id == sid and len(back) == len(layout)
    for a, b in zip(back.elements, layout.elements):
        assert a.category == b.category
        for f in "xywh":
            assert math.isclose(a.get(f), b.get(f), rel_tol=0, abs_tol=1e-9)


def test_key_order_is_fixed():
    text = write_canonical(Layout(1, 2, (Element("t", 0.5, 1, 1, 1),), "id")).decode()
    assert text.index("source_id") < text.index("canvas_w") < text.index("canvas_h") < text.index("elements")
    assert text.index('"category"') < text.index('"x"') < text.index('"y"') < text.index('"w"') < text.index('"h"')


def test_jsonl_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    from conftest import random_quantized_layout
    layouts = [random_quantized_layout(rng, source_id=f"s{i}") for i in range(5)]
    path = tmp_path / "c.jsonl"
    assert write_jsonl(layouts, path) == 5
    assert read_jsonl(path) == layouts


def test_corners():
    assert to_corners(Element("t", 50, 50, 20, 10)) == (40, 45, 60, 55)


def test_vocab_rejects_bad_labels():
    with pytest.raises(ValueError):
        CategoryVocab("d", ("a", "a"))
    with pytest.raises(ValueError):
        CategoryVocab("d", ("a",), frozenset({"b"}))
    with pytest.raises(ValueError):
        CategoryVocab("d", ('say "hi"',))


def test_presets_match_benchmark_sizes():
    assert len(PRESETS["rico"].labels) == 25
    assert len(PRESETS["publaynet"].labels) == 5
    assert len(PRESETS["magazine"].labels) == 6
    assert PRESETS["rico"].domain_name == "mobile UI"
