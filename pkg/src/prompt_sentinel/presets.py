"""Canned engine assemblies.

The rule pack registers one detector per rule (so the per-extra-detector
bonus sees each matching rule as an independent voice), and the alignment
and stylometric detectors register under their usual ids. The four
standard ablation configurations toggle the two novel detectors on top of
the rule-pack baseline.
"""

from __future__ import annotations

import functools
from typing import Optional

from . import align, rules, stylometry
from .core import Engine, EngineConfig

D027 = stylometry.DETECTOR_ID
D028 = align.DETECTOR_ID

#: Fixed ablation order: baseline, alignment only, stylometry only, both.
ABLATION_CONFIGS = ("baseline", "plus_d028", "plus_d027", "plus_d027_d028")


@functools.lru_cache(maxsize=1)
def _shared_components():
    pack = rules.default_pack()
    matrix = align.default_matrix()
    needles = tuple(align.load_needles())
    style_config = stylometry.StylometryConfig()
    return pack, matrix, needles, style_config


def register_standard_detectors(
    engine: Engine,
    *,
    include_d027: bool = True,
    include_d028: bool = True,
) -> None:
    pack, matrix, needles, style_config = _shared_components()
    for compiled in pack:
        rule = compiled.rule
        engine.register_detector(
            rule.rule_id,
            functools.partial(_evaluate_single_rule, compiled),
        )
    if include_d028:
        engine.register_detector(
            D028, lambda text: align.detect_alignment(text, needles, matrix)
        )
    if include_d027:
        engine.register_detector(
            D027, lambda text: stylometry.detect_stylometry(text, style_config)
        )


def _evaluate_single_rule(compiled, text: str):
    match = compiled.regex.search(text)
    if not match:
        return None
    from .core import DetectorSignal

    return DetectorSignal(
        detector_id=compiled.rule.rule_id,
        confidence=compiled.rule.base_confidence,
        category=compiled.rule.category,
        span=(match.start(), match.end()),
    )


def build_engine(config_name: str = "full", engine_config: Optional[EngineConfig] = None) -> Engine:
    """Engine for one named configuration.

    ``baseline`` is the rule pack alone; ``plus_d028``/``plus_d027`` add one
    novel detector each; ``plus_d027_d028`` adds both. ``full`` is the
    everything-on assembly used by the CLI.
    """
    engine = Engine(engine_config or EngineConfig())
    if config_name == "baseline":
        register_standard_detectors(engine, include_d027=False, include_d028=False)
    elif config_name == "plus_d028":
        register_standard_detectors(engine, include_d027=False, include_d028=True)
    elif config_name == "plus_d027":
        register_standard_detectors(engine, include_d027=True, include_d028=False)
    elif config_name in ("plus_d027_d028", "full"):
        register_standard_detectors(engine)
    else:
        raise ValueError(f"unknown engine configuration {config_name!r}")
    return engine
