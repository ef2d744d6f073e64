import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import VOCAB, random_quantized_layout
from layoutcode.codec import parse_completion, serialize
from layoutcode.layout import Element, Layout
from layoutcode.quantizer import FieldBins, Quantizer, fit
from layoutcode.taskgen import (ALL_TASKS, SplitSpec, TaskgenError, TaskKind,
                                TemplateConfig, build_samples, export_corpus, fill_masks,
                                filter_and_split, mask_plan, numeric_attrs, prepare_target,
                                read_corpus)

TC = TemplateConfig("document")


def corpus(count, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return [random_quantized_layout(rng, source_id=f"L{i}", **kw) for i in range(count)]


def test_split_95_5():
    train, val = filter_and_split(corpus(100, n=3), SplitSpec(0.95, 25, seed=1))
    assert (len(train), len(val)) == (95, 5)


def test_oversized_layout_is_dropped():
    layouts = corpus(9, n=4) + [random_quantized_layout(np.random.default_rng(5), n=26, source_id="big")]
    train, val = filter_and_split(layouts, SplitSpec(0.5))
    ids = {l.source_id for l in train + val}
    assert "big" not in ids and len(ids) == 9


def test_empty_layouts_are_dropped_and_all_empty_errors():
    with pytest.raises(TaskgenError):
        filter_and_split(corpus(3, n=0), SplitSpec())


def test_split_deterministic():
    layouts = corpus(30, n=2)
    assert filter_and_split(layouts, SplitSpec(seed=4)) == filter_and_split(layouts, SplitSpec(seed=4))


def test_split_spec_bounds():
    with pytest.raises(TaskgenError):
        SplitSpec(train_fraction=1.0)
    with pytest.raises(TaskgenError):
        SplitSpec(max_elements=0)


def test_mask_plan_counts():
    layout = corpus(1, n=3)[0]
    rng = np.random.default_rng(0)
    c2sp = mask_plan(TaskKind.C_TO_SP, layout, rng)
    assert sum(len(s) for s in c2sp.values()) == 12
    cs2p = mask_plan(TaskKind.CS_TO_P, layout, rng)
    assert sum(len(s) for s in cs2p.values()) == 6
    assert all(s == {"x", "y"} for s in cs2p.values())
    assert sum(len(s) for s in mask_plan(TaskKind.COMPLETION, layout, rng, ratio=0.0).values()) == 0


def test_completion_ratio_mean():
    layout = corpus(1, n=10)[0]
    rng = np.random.default_rng(11)
    fracs = [sum(len(s) for s in mask_plan("Completion", layout, rng).values()) / 40 for _ in range(10_000)]
    assert abs(np.mean(fracs) - 0.4) <= 0.02


def test_sample_count_is_k_times_tasks():
    layout = corpus(1, n=5)[0]
    assert len(build_samples(layout, None, TC, K=10, tasks=ALL_TASKS, seed=0)) == 30


def test_single_task_single_perm():
    layout = corpus(1, n=1)[0]
    (s,) = build_samples(layout, None, TC, K=1, tasks=[TaskKind.C_TO_SP], seed=0)
    assert s.mask_count == 4 and s.prompt.count("<M>") == 4


def test_one_element_permutations_identical():
    layout = corpus(1, n=1)[0]
    a, b = build_samples(layout, None, TC, K=2, tasks=[TaskKind.CS_TO_P], seed=0)
    assert a.target == b.target and a.prompt == b.prompt


def test_permutation_zero_is_identity():
    layout = corpus(1, n=6)[0]
    samples = build_samples(layout, None, TC, K=5, tasks=[TaskKind.C_TO_SP], seed=3)
    assert samples[0].target.split("\n", 1)[1] == serialize(layout)
    targets = {s.target for s in samples}
    assert len(targets) > 1


def test_samples_are_deterministic_and_order_free():
    layouts = corpus(4, n=5)
    a = [build_samples(l, None, TC, 3, ALL_TASKS, 7) for l in layouts]
    b = [build_samples(l, None, TC, 3, ALL_TASKS, 7) for l in reversed(layouts)][::-1]
    assert a == b


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 25))
def test_prompt_reconstructs_target(seed, n):
    layout = random_quantized_layout(np.random.default_rng(seed), n=n, vocab=VOCAB)
    for s in build_samples(layout, None, TC, 3, ALL_TASKS, seed, VOCAB):
        assert fill_masks(s.prompt, s.target) == s.target
        body = s.target.split("\n", 1)[1]
        out = parse_completion(body, layout.canvas_w, layout.canvas_h, VOCAB)
        assert out.status == "ok"
        assert s.prompt.split("\n", 1)[0] == s.target.split("\n", 1)[0]


def test_task_prompt_numerics():
    layout = corpus(1, n=4)[0]
    c2sp, cs2p = build_samples(layout, None, TC, 1, [TaskKind.C_TO_SP, TaskKind.CS_TO_P], 0)
    assert set(numeric_attrs(c2sp.prompt)) == {"<M>"}
    values = [v for v in numeric_attrs(cs2p.prompt) if v != "<M>"]
    expected = [f"{v:.1f}" for e in layout for v in (e.w, e.h)]
    assert values == expected
    assert "according to the categories I provide:" in c2sp.prompt
    assert "according to the categories and sizes I provide:" in cs2p.prompt


def test_completion_condition_string():
    (s,) = build_samples(corpus(1, n=2)[0], None, TC, 1, [TaskKind.COMPLETION], 0)
    assert s.prompt.startswith("I want to generate layout in document style. Please generate the layout "
                               "according to the remaining values I provide:\n")


def test_fixed_completion_mask_follows_elements():
    layout = corpus(1, n=6)[0]
    tc = TemplateConfig("document", resample_completion_mask=False)
    samples = build_samples(layout, None, tc, 4, [TaskKind.COMPLETION], 2)
    counts = {s.mask_count for s in samples}
    assert len(counts) == 1


def test_quantized_targets_fit_the_canvas():
    # centroids that push the box off the right edge once rounded
    q = Quantizer({"x": FieldBins("x", (99.0,)), "y": FieldBins("y", (50.0,)),
                   "w": FieldBins("w", (5.0,)), "h": FieldBins("h", (4.0,))}, 1)
    layout = Layout(100, 100, (Element("text", 98, 50, 3, 4),), "edge")
    target = prepare_target(q, layout)
    e = target.elements[0]
    assert e.x + e.w / 2 <= 100 and (e.x, e.w) == (98.2, 3.4)
    (s,) = build_samples(layout, q, TC, 1, [TaskKind.C_TO_SP], 0)
    assert parse_completion(s.target.split("\n", 1)[1], 100, 100).status == "ok"


def test_build_samples_quantizes():
    rng = np.random.default_rng(9)
    layouts = [random_quantized_layout(rng, n=5, W=100, H=100, source_id=str(i)) for i in range(10)]
    q = fit(layouts, k=4, seed=0)
    allowed = {f: set(q.bin_values(f)) for f in "xywh"}
    for s in build_samples(layouts[0], q, TC, 2, [TaskKind.COMPLETION], 0):
        out = parse_completion(s.target.split("\n", 1)[1], 100, 100)
        for e in out.layout:
            for c, size in (("x", "w"), ("y", "h")):
                lo, hi = e.get(c) - e.get(size) / 2, e.get(c) + e.get(size) / 2
                # boxes snapped at the canvas edge are the only ones off the bins
                touches_edge = lo <= 0.1 or hi >= 99.9
                assert touches_edge or (e.get(c) in allowed[c] and e.get(size) in allowed[size])


def test_export_and_read_back(tmp_path):
    layouts = corpus(1, n=3)
    samples = build_samples(layouts[0], None, TC, 10, ALL_TASKS, 0)
    path = tmp_path / "c.jsonl"
    assert export_corpus(samples, path) == 30
    lines = path.read_text().splitlines()
    assert len(lines) == 30
    assert set(json.loads(lines[0])) == {"source_id", "task", "perm", "prompt", "target"}
    assert read_corpus(path) == samples
    path2 = tmp_path / "d.jsonl"
    export_corpus(samples, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_export_empty(tmp_path):
    path = tmp_path / "empty.jsonl"
    assert export_corpus([], path) == 0
    assert path.read_bytes() == b""


def test_export_io_error_names_path(tmp_path):
    bad = tmp_path / "missing" / "c.jsonl"
    with pytest.raises(OSError, match="missing"):
        export_corpus([], bad)


def test_task_kind_parse():
    assert TaskKind.parse("C->S+P") is TaskKind.C_TO_SP
    assert TaskKind.parse("CS_TO_P") is TaskKind.CS_TO_P
    with pytest.raises(ValueError):
        TaskKind.parse("relation")


def test_fill_masks_rejects_divergence():
    with pytest.raises(TaskgenError):
        fill_masks('a x="<M>" b', 'a x="1.0" c')
