"""Synthetic benchmark generation, dataset loading, ablation, and metrics.

The synthetic indirect-injection set pairs six benign genre templates with
five egregious payload styles (30 positives) and splices calm bridge
sentences into the same templates at the same paragraph boundaries (50
negatives), so detectors cannot key on document structure. Generation is a
pure function of the seed: identical seeds produce byte-identical sample
lists.

The ablation harness scans every sample under four detector
configurations and tallies the standard detection rule into per-config
metric rows, emitted as JSON (machine-readable) and markdown tables
(human-readable).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, asdict
from string import Formatter
from typing import Optional, Sequence

from . import _corpus
from .core import Engine, EngineConfig, is_detected
from .presets import ABLATION_CONFIGS, build_engine

GENERATOR_SEED = 20260420
POSITIVE_COUNT = 30
NEGATIVE_COUNT = 50


@dataclass(frozen=True)
class BenchmarkSample:
    sample_id: str
    text: str
    label: int  # 0 benign, 1 attack
    genre: str
    payload_style: Optional[str] = None

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.label == 1 and not self.payload_style:
            raise ValueError("attack samples must carry a payload_style")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsRow:
    dataset: str
    config: str
    tp: int
    tn: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    fpr: float

    def to_dict(self) -> dict:
        return asdict(self)


def _slot_names(template: str) -> list[str]:
    return [name for _, name, _, _ in Formatter().parse(template) if name]


def _render_paragraphs(genre: str, rng: random.Random) -> list[str]:
    paragraphs = []
    for template in _corpus.TEMPLATES[genre]:
        fills = {name: rng.choice(_corpus.SLOT_VARIANTS[name]) for name in _slot_names(template)}
        paragraphs.append(template.format(**fills))
    return paragraphs


def _splice(paragraphs: list[str], insert: str, rng: random.Random) -> str:
    # interior paragraph boundary, never the very start or end
    boundary = rng.randrange(1, len(paragraphs))
    return "\n\n".join(paragraphs[:boundary] + [insert] + paragraphs[boundary:])


def generate_synthetic(seed: int = GENERATOR_SEED) -> list[BenchmarkSample]:
    """The 80-sample synthetic set: 30 positives (6 genres x 5 payload
    styles) and 50 negatives, deterministic in the seed."""
    rng = random.Random(seed)
    samples: list[BenchmarkSample] = []

    index = 0
    for genre in _corpus.GENRES:
        for style in _corpus.PAYLOAD_STYLES:
            index += 1
            text = _splice(_render_paragraphs(genre, rng), _corpus.PAYLOADS[style], rng)
            samples.append(
                BenchmarkSample(
                    sample_id=f"syn-p{index:03d}",
                    text=text,
                    label=1,
                    genre=genre,
                    payload_style=style,
                )
            )

    for i in range(NEGATIVE_COUNT):
        genre = _corpus.GENRES[i % len(_corpus.GENRES)]
        bridge = rng.choice(_corpus.BRIDGES)
        text = _splice(_render_paragraphs(genre, rng), bridge, rng)
        samples.append(
            BenchmarkSample(
                sample_id=f"syn-n{i + 1:03d}",
                text=text,
                label=0,
                genre=genre,
            )
        )
    return samples


def benign_corpus(samples: Sequence[BenchmarkSample]) -> list[str]:
    """Texts of the benign samples, the training corpus for the reference
    surprisal model."""
    return [s.text for s in samples if s.label == 0]


# -- JSONL persistence ---------------------------------------------------------


class DatasetFormatError(ValueError):
    def __init__(self, path: str, line_number: int, reason: str) -> None:
        super().__init__(f"{path}:{line_number}: {reason}")
        self.line_number = line_number


def save_jsonl(samples: Sequence[BenchmarkSample], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_dict(), sort_keys=True) + "\n")


def load_jsonl(path: str) -> list[BenchmarkSample]:
    """Load labeled samples; unknown fields are ignored, malformed lines
    report their line number."""
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(path, number, f"invalid JSON ({exc.msg})") from exc
            if "text" not in doc:
                raise DatasetFormatError(path, number, "missing required field 'text'")
            if "label" not in doc:
                raise DatasetFormatError(path, number, "missing required field 'label'")
            label = doc["label"]
            if label not in (0, 1):
                raise DatasetFormatError(path, number, f"label must be 0 or 1, got {label!r}")
            samples.append(
                BenchmarkSample(
                    sample_id=str(doc.get("sample_id", f"line-{number}")),
                    text=doc["text"],
                    label=label,
                    genre=str(doc.get("genre", "unknown")),
                    payload_style=doc.get("payload_style") if label == 1 else None,
                )
            )
    return samples


# -- metrics and ablation ------------------------------------------------------


def metrics(tp: int, tn: int, fp: int, fn: int, dataset: str = "", config: str = "") -> MetricsRow:
    """Precision/recall/F1/FPR from the four counts; degenerate
    denominators yield 0 rather than an error."""
    if min(tp, tn, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    fpr = fp / (fp + tn) if fp + tn else 0.0
    return MetricsRow(
        dataset=dataset,
        config=config,
        tp=tp,
        tn=tn,
        fp=fp,
        fn=fn,
        precision=precision,
        recall=recall,
        f1=f1,
        fpr=fpr,
    )


def run_ablation(
    samples: Sequence[BenchmarkSample],
    configs: Sequence[str] = ABLATION_CONFIGS,
    dataset: str = "synthetic",
    engine_config: Optional[EngineConfig] = None,
) -> list[MetricsRow]:
    """Scan every sample under each configuration and tally the standard
    detection rule. Every scan uses a fresh per-sample source id and a
    fatigue-disabled engine, so static benchmarks never touch temporal
    state."""
    rows = []
    for config_name in configs:
        engine: Engine = build_engine(config_name, engine_config)
        tp = tn = fp = fn = 0
        for i, sample in enumerate(samples):
            result = engine.scan(sample.text, source_id=f"{dataset}-{i}")
            detected = is_detected(result)
            if sample.label == 1:
                if detected:
                    tp += 1
                else:
                    fn += 1
            else:
                if detected:
                    fp += 1
                else:
                    tn += 1
        rows.append(metrics(tp, tn, fp, fn, dataset=dataset, config=config_name))
    return rows


# -- report emission -----------------------------------------------------------

_MD_COLUMNS = ("Config", "TP", "TN", "FP", "FN", "Prec.", "Recall", "F1", "FPR")


def rows_to_json(rows: Sequence[MetricsRow]) -> str:
    return json.dumps([row.to_dict() for row in rows], indent=2)


def rows_from_json(raw: str) -> list[MetricsRow]:
    return [MetricsRow(**doc) for doc in json.loads(raw)]


def rows_to_markdown(rows: Sequence[MetricsRow]) -> str:
    """One table per dataset, columns in the classic ablation order,
    metrics rendered to three decimals."""
    lines = []
    seen: list[str] = []
    for row in rows:
        if row.dataset not in seen:
            seen.append(row.dataset)
    for dataset in seen:
        subset = [r for r in rows if r.dataset == dataset]
        total = subset[0].tp + subset[0].tn + subset[0].fp + subset[0].fn if subset else 0
        lines.append(f"## {dataset} (n={total})")
        lines.append("")
        lines.append("| " + " | ".join(_MD_COLUMNS) + " |")
        lines.append("|" + "|".join([" --- "] * len(_MD_COLUMNS)) + "|")
        for r in subset:
            lines.append(
                f"| {r.config} | {r.tp} | {r.tn} | {r.fp} | {r.fn} "
                f"| {r.precision:.3f} | {r.recall:.3f} | {r.f1:.3f} | {r.fpr:.3f} |"
            )
        lines.append("")
    return "\n".join(lines)


def emit_report(rows: Sequence[MetricsRow], format: str, path: str) -> None:
    if not rows:
        raise ValueError("cannot emit an empty report")
    if format == "json":
        content = rows_to_json(rows) + "\n"
    elif format == "markdown":
        content = rows_to_markdown(rows)
    else:
        raise ValueError(f"unknown report format {format!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)


def load_report(path: str) -> list[MetricsRow]:
    with open(path, "r", encoding="utf-8") as fh:
        return rows_from_json(fh.read())
