"""Pipeline configuration file (YAML or JSON) with ``${VAR}`` interpolation."""

from __future__ import annotations

import os
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .generation.llm import GenConfig
from .layout import PRESETS, CategoryVocab, Layout
from .taskgen import ALL_TASKS, SplitSpec, TaskKind, TemplateConfig


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    train_path: Path
    val_path: Path | None = None
    out_dir: Path = Path("out")
    domain_name: str = "document"
    preset: str | None = None
    labels: tuple[str, ...] | None = None
    underlay: tuple[str, ...] = ()
    k: int = 128
    quantizer_seed: int = 0
    split: SplitSpec = field(default_factory=SplitSpec)
    K: int = 10
    tasks: tuple[TaskKind, ...] = ALL_TASKS
    task_seed: int = 0
    conditions: dict = field(default_factory=dict)
    resample_completion_mask: bool = True
    gen: GenConfig = field(default_factory=GenConfig)
    gen_seed: int = 0
    samples_per_prompt: int = 1
    smoothing: float = 1.0
    workers: int = 4
    render_opacity: float = 0.6
    render_stroke: float = 1.0
    render_labels: bool = False
    features_generated: Path | None = None
    features_reference: Path | None = None

    # -- derived paths ------------------------------------------------------

    @property
    def quantizer_path(self) -> Path:
        return self.out_dir / "quantizer.json"

    @property
    def train_split_path(self) -> Path:
        return self.out_dir / "splits" / "train.jsonl"

    @property
    def val_split_path(self) -> Path:
        return self.out_dir / "splits" / "val.jsonl"

    @property
    def corpus_path(self) -> Path:
        return self.out_dir / "corpus" / "train.jsonl"

    @property
    def conditions_path(self) -> Path:
        return self.out_dir / "conditions.jsonl"

    @property
    def reference_path(self) -> Path:
        return self.out_dir / "reference.jsonl"

    @property
    def generations_path(self) -> Path:
        return self.out_dir / "generations.jsonl"

    @property
    def render_dir(self) -> Path:
        return self.out_dir / "render"

    def template_config(self) -> TemplateConfig:
        return TemplateConfig(self.domain_name, self.conditions, self.resample_completion_mask)

    def vocab(self, layouts: list[Layout] | None = None) -> CategoryVocab:
        if self.preset:
            base = PRESETS[self.preset]
            return CategoryVocab(self.domain_name, base.labels, base.underlay_labels)
        if self.labels:
            return CategoryVocab(self.domain_name, self.labels, frozenset(self.underlay))
        if layouts is None:
            raise ConfigError("vocabulary needs a preset, explicit labels, or training layouts")
        return CategoryVocab.from_layouts(self.domain_name, layouts, self.underlay)

    def override_seed(self, seed: int) -> None:
        self.quantizer_seed = self.task_seed = self.gen_seed = seed
        self.split = SplitSpec(self.split.train_fraction, self.split.max_elements, seed)


def interpolate_env(text: str) -> str:
    """Expand ``${VAR}``; unknown variables are an error rather than left in place."""
    try:
        return string.Template(text).substitute(os.environ)
    except KeyError as exc:
        raise ConfigError(f"environment variable {exc.args[0]} is not set") from None
    except ValueError as exc:
        raise ConfigError(f"bad interpolation: {exc}") from None


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return sec


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    doc: Any = yaml.safe_load(interpolate_env(text)) or {}
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    base = path.parent

    def resolve(p: str | None) -> Path | None:
        if p is None:
            return None
        q = Path(p).expanduser()
        return q if q.is_absolute() else base / q

    data, domain = _section(doc, "data"), _section(doc, "domain")
    quant, tasks, split = _section(doc, "quantizer"), _section(doc, "tasks"), _section(doc, "split")
    gen, render, metrics = _section(doc, "generation"), _section(doc, "render"), _section(doc, "metrics")
    if "train" not in data:
        raise ConfigError("data.train is required")
    preset = domain.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown domain preset {preset!r}; choose from {sorted(PRESETS)}")
    default_domain = PRESETS[preset].domain_name if preset else "document"

    gen_fields = {k: gen[k] for k in ("top_p", "temperature", "max_new_tokens", "endpoint_url",
                                       "model_name", "api_key_env", "timeout", "max_concurrency",
                                       "retries", "backoff") if k in gen}
    try:
        return PipelineConfig(
            train_path=resolve(data["train"]),
            val_path=resolve(data.get("val")),
            out_dir=resolve(doc.get("out", "out")),
            domain_name=domain.get("name", default_domain),
            preset=preset,
            labels=tuple(domain["labels"]) if domain.get("labels") else None,
            underlay=tuple(domain.get("underlay", ())),
            k=int(quant.get("k", 128)),
            quantizer_seed=int(quant.get("seed", 0)),
            split=SplitSpec(float(split.get("train_fraction", 0.95)),
                            int(split.get("max_elements", 25)), int(split.get("seed", 0))),
            K=int(tasks.get("K", 10)),
            tasks=tuple(TaskKind.parse(t) for t in tasks.get("tasks", [t.value for t in ALL_TASKS])),
            task_seed=int(tasks.get("seed", 0)),
            conditions=dict(tasks.get("conditions", {})),
            resample_completion_mask=bool(tasks.get("resample_completion_mask", True)),
            gen=GenConfig(**gen_fields),
            gen_seed=int(gen.get("seed", 0)),
            samples_per_prompt=int(gen.get("samples_per_prompt", 1)),
            smoothing=float(gen.get("smoothing", 1.0)),
            workers=int(gen.get("workers", gen.get("max_concurrency", 4))),
            render_opacity=float(render.get("opacity", 0.6)),
            render_stroke=float(render.get("stroke_width", 1.0)),
            render_labels=bool(render.get("label_text", False)),
            features_generated=resolve(metrics.get("features_generated")),
            features_reference=resolve(metrics.get("features_reference")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from None
