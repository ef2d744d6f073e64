"""Layouts as HTML code: quantization, masked-code task samples, completion,
tolerant parsing, SVG rendering and evaluation metrics."""

from .codec import (CodeTemplate, MaskedCode, ParseOutcome, build_prompt, mask_fields,
                    parse_completion, serialize)
from .layout import (PRESETS, CategoryVocab, Element, Layout, read_canonical, read_jsonl,
                     validate_layout, write_canonical, write_jsonl)
from .quantizer import Quantizer, encode_value, fit, quantize_layout
from .render import RenderStyle, render_svg
from .taskgen import (SplitSpec, TaskKind, TaskSample, TemplateConfig, build_samples,
                      export_corpus, filter_and_split, mask_plan)

__version__ = "0.1.0"
