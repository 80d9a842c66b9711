"""Regular-expression rule pack.

A data-driven stand-in for the classic curated-pattern detector family:
high precision on known attack vocabulary, blind to paraphrase. Rules live
in ``data/rules.json`` so a deployment can replace the pack wholesale.
Patterns are compiled case-insensitively and must avoid anchors and word
boundaries so that a match in any fragment survives concatenation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

from .core import DetectorSignal


@dataclass(frozen=True)
class PatternRule:
    rule_id: str
    pattern: str
    category: str
    base_confidence: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.base_confidence <= 1.0:
            raise ValueError(f"rule {self.rule_id}: confidence must be in [0, 1]")


class RuleCompileError(ValueError):
    def __init__(self, rule_id: str, reason: str) -> None:
        super().__init__(f"rule {rule_id!r} failed to compile: {reason}")
        self.rule_id = rule_id


@dataclass(frozen=True)
class CompiledRule:
    rule: PatternRule
    regex: re.Pattern


class CompiledPack:
    """Immutable set of compiled rules; safe for concurrent evaluation."""

    def __init__(self, rules: Sequence[CompiledRule]) -> None:
        self._rules = tuple(rules)

    def __len__(self) -> int:
        return len(self._rules)

    def __iter__(self):
        return iter(self._rules)

    @property
    def rule_ids(self) -> tuple[str, ...]:
        return tuple(c.rule.rule_id for c in self._rules)


def compile_pack(rules: Iterable[PatternRule]) -> CompiledPack:
    compiled = []
    for rule in rules:
        try:
            regex = re.compile(rule.pattern, re.IGNORECASE)
        except re.error as exc:
            raise RuleCompileError(rule.rule_id, str(exc)) from exc
        compiled.append(CompiledRule(rule=rule, regex=regex))
    return CompiledPack(compiled)


def evaluate(pack: CompiledPack, text: str) -> list[DetectorSignal]:
    """One signal per matching rule, carrying the first match's offsets."""
    signals = []
    for compiled in pack:
        match = compiled.regex.search(text)
        if match:
            signals.append(
                DetectorSignal(
                    detector_id=compiled.rule.rule_id,
                    confidence=compiled.rule.base_confidence,
                    category=compiled.rule.category,
                    span=(match.start(), match.end()),
                )
            )
    return signals


def load_rules(path: str | None = None) -> list[PatternRule]:
    """Load rules from a JSON array of {rule_id, pattern, category, confidence}."""
    if path is None:
        raw = resources.files("prompt_sentinel").joinpath("data/rules.json").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    return [
        PatternRule(
            rule_id=entry["rule_id"],
            pattern=entry["pattern"],
            category=entry["category"],
            base_confidence=float(entry["confidence"]),
        )
        for entry in json.loads(raw)
    ]


def default_pack() -> CompiledPack:
    return compile_pack(load_rules())
