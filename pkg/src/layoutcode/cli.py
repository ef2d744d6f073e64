"""Command line pipeline: fit-quantizer, build-corpus, generate, render, evaluate."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import re
import sys
from pathlib import Path
from typing import Sequence

from .codec import parse_canvas, parse_completion
from .config import ConfigError, PipelineConfig, load_config
from .generation import (ChatClient, GenerationError, GenerationRecord, complete_baseline,
                         fit_baseline, read_records, write_records)
from .layout import CategoryVocab, Layout, LayoutFormatError, read_jsonl, validate_layout, write_jsonl
from .metrics import EvaluationError, FeatureTable, HistogramEmbedder, evaluate
from .plotting import plot_layout_grid, plot_metric_panels
from .quantizer import FIELDS, Quantizer, QuantizerError, fit
from .render import RenderStyle, render_svg
from .taskgen import TaskgenError, build_samples, export_corpus, filter_and_split, prepare_target

log = logging.getLogger("layoutcode")


class PipelineError(RuntimeError):
    pass


def _require(path: Path | None, what: str) -> Path:
    if path is None or not path.exists():
        raise PipelineError(f"{what} not found: {path}")
    return path


def _load_valid(path: Path, what: str) -> list[Layout]:
    layouts = read_jsonl(_require(path, what))
    good = []
    for layout in layouts:
        problems = validate_layout(layout)
        if problems:
            log.warning("skipping layout %r: %s", layout.source_id, "; ".join(problems))
        else:
            good.append(layout)
    return good


def _vocab(cfg: PipelineConfig, layouts: list[Layout] | None = None) -> CategoryVocab:
    path = cfg.out_dir / "vocab.json"
    if path.exists():
        doc = json.loads(path.read_text())
        return CategoryVocab(doc["domain_name"], tuple(doc["labels"]), frozenset(doc["underlay_labels"]))
    return cfg.vocab(layouts)


def _save_vocab(cfg: PipelineConfig, vocab: CategoryVocab) -> None:
    doc = {"domain_name": vocab.domain_name, "labels": list(vocab.labels),
           "underlay_labels": sorted(vocab.underlay_labels)}
    (cfg.out_dir / "vocab.json").write_text(json.dumps(doc, indent=2) + "\n")


def _derived_seed(*parts: object) -> int:
    key = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def _safe_name(s: str) -> str:
    return re.sub(r"[^\w.-]", "_", s) or "_"


def cmd_fit_quantizer(cfg: PipelineConfig) -> int:
    train, _ = filter_and_split(_load_valid(cfg.train_path, "training dataset"), cfg.split)
    q = fit(train, cfg.k, cfg.quantizer_seed)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    q.save(cfg.quantizer_path)
    print(f"fitted quantizer on {len(train)} layouts (k={cfg.k}) -> {cfg.quantizer_path}")
    for f in FIELDS:
        print(f"  {f}: {len(q.bins[f].centroids):4d} centroids  SSE={q.fit_stats[f]:.6g}")
    return 0


def cmd_build_corpus(cfg: PipelineConfig) -> int:
    q = Quantizer.load(_require(cfg.quantizer_path, "quantizer file (run fit-quantizer first)"))
    layouts = _load_valid(cfg.train_path, "training dataset")
    train, val = filter_and_split(layouts, cfg.split)
    if cfg.val_path is not None:
        val = [l for l in _load_valid(cfg.val_path, "validation dataset")
               if 0 < len(l) <= cfg.split.max_elements]
    vocab = cfg.vocab(train + val)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _save_vocab(cfg, vocab)
    cfg.train_split_path.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(train, cfg.train_split_path)
    write_jsonl(val, cfg.val_split_path)

    tc = cfg.template_config()
    samples = []
    for layout in train:
        try:
            samples.extend(build_samples(layout, q, tc, cfg.K, cfg.tasks, cfg.task_seed, vocab))
        except TaskgenError as exc:
            log.warning("skipping %r: %s", layout.source_id, exc)
    cfg.corpus_path.parent.mkdir(parents=True, exist_ok=True)
    n_corpus = export_corpus(samples, cfg.corpus_path)

    references, n_cond = [], 0
    with open(cfg.conditions_path, "w", encoding="utf-8", newline="\n") as fh:
        for layout in val:
            target = prepare_target(q, layout)
            if target is None:
                log.warning("skipping %r: no element inside the canvas", layout.source_id)
                continue
            references.append(target)
            for s in build_samples(target, None, tc, 1, cfg.tasks, cfg.task_seed, vocab):
                fh.write(json.dumps({"source_id": s.source_id, "task": s.task.value, "prompt": s.prompt,
                                     "canvas_w": target.canvas_w, "canvas_h": target.canvas_h},
                                    ensure_ascii=False) + "\n")
                n_cond += 1
    write_jsonl(references, cfg.reference_path)
    print(f"train split {len(train)} layouts -> {n_corpus} samples ({cfg.corpus_path})")
    print(f"validation split {len(references)} layouts -> {n_cond} condition prompts ({cfg.conditions_path})")
    return 0


def _read_conditions(path: Path) -> list[dict]:
    with open(_require(path, "conditions file (run build-corpus first)"), encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def cmd_generate(cfg: PipelineConfig, backend: str) -> int:
    conditions = _read_conditions(cfg.conditions_path)
    vocab = _vocab(cfg)
    jobs = [(c, s) for c in conditions for s in range(cfg.samples_per_prompt)]

    def canvas(c: dict) -> tuple[float, float]:
        if "canvas_w" in c and "canvas_h" in c:
            return float(c["canvas_w"]), float(c["canvas_h"])
        return parse_canvas(c["prompt"]) or (1.0, 1.0)

    raws: list[str | GenerationError]
    if backend == "baseline":
        q = Quantizer.load(_require(cfg.quantizer_path, "quantizer file"))
        model = fit_baseline(read_jsonl(_require(cfg.train_split_path, "train split")), q, vocab, cfg.smoothing)
        raws = [complete_baseline(c["prompt"], None, model,
                                  _derived_seed(cfg.gen_seed, c["source_id"], c["task"], s))
                for c, s in jobs]
    else:
        with ChatClient(cfg.gen) as client:
            raws = client.complete_many([c["prompt"] for c, _ in jobs])

    records = []
    for (c, s), raw in zip(jobs, raws):
        if isinstance(raw, GenerationError):
            records.append(GenerationRecord.from_error(c["source_id"], c["task"], str(raw), c["prompt"], s))
        else:
            outcome = parse_completion(raw, *canvas(c), vocab)
            records.append(GenerationRecord.from_outcome(c["source_id"], c["task"], raw, outcome, c["prompt"], s))
    write_records(records, cfg.generations_path)
    failed = sum(r.failed for r in records)
    rate = failed / len(records) if records else 0.0
    print(f"{backend}: {len(records)} generations, {failed} failed, fail_rate={rate:.4f} -> {cfg.generations_path}")
    if records and failed == len(records):
        print("every generation failed", file=sys.stderr)
        return 1
    return 0


def _style(cfg: PipelineConfig, vocab: CategoryVocab) -> RenderStyle:
    return RenderStyle.for_vocab(vocab, opacity=cfg.render_opacity, stroke_width=cfg.render_stroke,
                                 label_text=cfg.render_labels)


def cmd_render(cfg: PipelineConfig) -> int:
    records = read_records(_require(cfg.generations_path, "generation records (run generate first)"))
    vocab = _vocab(cfg)
    style = _style(cfg, vocab)
    written = []
    for r in records:
        if r.failed or r.layout is None:
            continue
        d = cfg.render_dir / _safe_name(r.task)
        d.mkdir(parents=True, exist_ok=True)
        name = _safe_name(r.source_id) + (f"-s{r.sample}" if r.sample else "")
        (d / f"{name}.svg").write_text(render_svg(r.layout, style), encoding="utf-8")
        written.append(r)
    if written:
        shown = written[:24]
        plot_layout_grid([r.layout for r in shown], style, cfg.render_dir / "overview.png",
                         titles=[f"{r.task}: {r.source_id}" for r in shown])
    print(f"rendered {len(written)} SVG files under {cfg.render_dir}")
    return 0


ARROWS = (("miou", "mIoU (↑)"), ("align", "Align. (→)"), ("overlap", "Overlap (→)"),
          ("fid", "FID (↓)"), ("fail_rate", "Fail (↓)"))


def _format_table(reports: dict[str, dict]) -> str:
    head = ["Task"] + [label for _, label in ARROWS]
    rows = [[task] + ["-" if rep[k] is None else f"{rep[k]:.4f}" for k, _ in ARROWS]
            for task, rep in reports.items()]
    widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [head] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def cmd_evaluate(cfg: PipelineConfig) -> int:
    records = read_records(_require(cfg.generations_path, "generation records"))
    reference = read_jsonl(_require(cfg.reference_path, "reference layouts"))
    vocab = _vocab(cfg, reference)
    embedder = FeatureTable.load(cfg.features_generated) if cfg.features_generated else HistogramEmbedder(vocab)
    ref_embedder = FeatureTable.load(cfg.features_reference) if cfg.features_reference else None
    tasks = list(dict.fromkeys(r.task for r in records))
    reports = {}
    for task in tasks:
        subset = [r for r in records if r.task == task]
        reports[task] = evaluate(subset, reference, embedder, vocab, ref_embedder, cfg.workers).to_dict()
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "report.json").write_text(json.dumps(reports, indent=2) + "\n")
    with open(cfg.out_dir / "report.tsv", "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["task", "miou", "align", "overlap", "fid", "fail_rate", "generated", "failed", "compared"])
        for task, rep in reports.items():
            w.writerow([task] + ["" if rep[k] is None else repr(rep[k]) for k, _ in ARROWS]
                       + [rep["counts"][k] for k in ("generated", "failed", "compared")])
    if reports:
        plot_metric_panels(reports, cfg.out_dir / "report.png")
    print(_format_table(reports))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="layoutcode", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("fit-quantizer", "build-corpus", "generate", "render", "evaluate"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="overrides every seed in the config")
        if name == "generate":
            p.add_argument("--backend", choices=("llm", "baseline"), default="baseline")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out_dir = args.out
        if args.seed is not None:
            cfg.override_seed(args.seed)
        if args.command == "fit-quantizer":
            return cmd_fit_quantizer(cfg)
        if args.command == "build-corpus":
            return cmd_build_corpus(cfg)
        if args.command == "generate":
            return cmd_generate(cfg, args.backend)
        if args.command == "render":
            return cmd_render(cfg)
        return cmd_evaluate(cfg)
    except (PipelineError, ConfigError, LayoutFormatError, QuantizerError, TaskgenError,
            GenerationError, EvaluationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
