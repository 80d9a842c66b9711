"""Runtime provenance labels for text flowing through an agent pipeline.

Every text value carries a trust label from a three-element lattice
(trusted < semi_trusted < untrusted, join = maximum) plus a provenance
trail of the channels and operations it passed through. Combining values
joins their labels; only an explicitly registered sanitizer may lower one.
At the tool-call boundary, ``check_sink`` compares each argument's label
against the sink's policy and returns a structured violation rather than
aborting, so callers decide how to fail.

Only the actual execution path is checked: this is a runtime complement
to, not a replacement for, whole-program dataflow analysis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from functools import reduce
from typing import Iterable, Mapping, Optional, Sequence

#: Provenance trails are capped; truncation keeps the earliest entries
#: because the original source channel is the forensically valuable datum.
PROVENANCE_CAP = 64


class TrustLabel(IntEnum):
    """Ordered by decreasing trust; join is the maximum."""

    TRUSTED = 0
    SEMI_TRUSTED = 1
    UNTRUSTED = 2

    def join(self, other: "TrustLabel") -> "TrustLabel":
        return self if self >= other else other

    @classmethod
    def parse(cls, name: str) -> "TrustLabel":
        return cls[name.upper()]

    def __str__(self) -> str:
        return self.name.lower()


CHANNEL_LABELS: Mapping[str, TrustLabel] = {
    "system_prompt": TrustLabel.TRUSTED,
    "rag": TrustLabel.SEMI_TRUSTED,
    "user": TrustLabel.UNTRUSTED,
    "tool_response": TrustLabel.UNTRUSTED,
    "tool_response_known_safe": TrustLabel.TRUSTED,
}


@dataclass(frozen=True)
class ProvenanceEntry:
    name: str  # channel or operation name
    sanitizer_id: Optional[str] = None


@dataclass(frozen=True)
class TaintedText:
    value: str
    label: TrustLabel
    provenance: tuple[ProvenanceEntry, ...]

    def __post_init__(self) -> None:
        if not self.provenance:
            raise ValueError("provenance must be non-empty")


def _cap(entries: Sequence[ProvenanceEntry]) -> tuple[ProvenanceEntry, ...]:
    return tuple(entries[:PROVENANCE_CAP])


def wrap(text: str, channel: str) -> TaintedText:
    """Label raw text by its source channel."""
    try:
        label = CHANNEL_LABELS[channel]
    except KeyError:
        raise ValueError(f"unknown channel {channel!r}; expected one of {sorted(CHANNEL_LABELS)}")
    return TaintedText(value=text, label=label, provenance=(ProvenanceEntry(name=channel),))


def combine(parts: Sequence[TaintedText], operation_name: str = "concat") -> TaintedText:
    """Concatenate values; the result's label is the join of the parts'."""
    if not parts:
        raise ValueError("combine requires at least one part")
    label = reduce(TrustLabel.join, (p.label for p in parts))
    provenance: list[ProvenanceEntry] = []
    for part in parts:
        provenance.extend(part.provenance)
    provenance.append(ProvenanceEntry(name=operation_name))
    return TaintedText(
        value="".join(p.value for p in parts),
        label=label,
        provenance=_cap(provenance),
    )


class SanitizerRegistry:
    def __init__(self, sanitizer_ids: Iterable[str] = ()) -> None:
        self._ids = set(sanitizer_ids)

    def register(self, sanitizer_id: str) -> None:
        self._ids.add(sanitizer_id)

    def __contains__(self, sanitizer_id: str) -> bool:
        return sanitizer_id in self._ids


def sanitize(text: TaintedText, sanitizer_id: str, registry: SanitizerRegistry) -> TaintedText:
    """Record a sanitization declaration, lowering the label to trusted.

    The value is unchanged: actually neutralizing the content is the
    registered sanitizer's responsibility, this records that it ran.
    """
    if sanitizer_id not in registry:
        raise ValueError(f"sanitizer {sanitizer_id!r} is not registered")
    provenance = list(text.provenance)
    provenance.append(ProvenanceEntry(name="sanitize", sanitizer_id=sanitizer_id))
    return TaintedText(value=text.value, label=TrustLabel.TRUSTED, provenance=_cap(provenance))


@dataclass(frozen=True)
class SinkPolicy:
    """Maximum allowed label per tool name; unlisted sinks allow only
    trusted arguments (fail-closed)."""

    limits: Mapping[str, TrustLabel] = field(default_factory=dict)
    default_maximum: TrustLabel = TrustLabel.TRUSTED

    def maximum_for(self, tool_name: str) -> TrustLabel:
        return self.limits.get(tool_name, self.default_maximum)

    @classmethod
    def from_json(cls, raw: str) -> "SinkPolicy":
        doc = json.loads(raw)
        return cls(limits={tool: TrustLabel.parse(name) for tool, name in doc.items()})

    @classmethod
    def load(cls, path: str) -> "SinkPolicy":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class ArgumentViolation:
    index: int
    label: TrustLabel
    provenance: tuple[ProvenanceEntry, ...]


class TaintViolation(Exception):
    """Structured sink-policy failure; returned by check_sink, raisable by
    callers that prefer exceptions."""

    def __init__(self, tool_name: str, allowed: TrustLabel, violations: Sequence[ArgumentViolation]) -> None:
        self.tool_name = tool_name
        self.allowed = allowed
        self.violations = tuple(violations)
        detail = ", ".join(f"arg[{v.index}]={v.label}" for v in self.violations)
        super().__init__(f"tool {tool_name!r} allows at most {allowed}; got {detail}")

    def to_dict(self) -> dict:
        return {
            "tool_name": self.tool_name,
            "allowed": str(self.allowed),
            "violations": [
                {
                    "index": v.index,
                    "label": str(v.label),
                    "provenance": [
                        {"name": e.name, "sanitizer_id": e.sanitizer_id} for e in v.provenance
                    ],
                }
                for v in self.violations
            ],
        }


def check_sink(
    tool_name: str,
    arguments: Sequence[TaintedText],
    policy: Optional[SinkPolicy] = None,
) -> Optional[TaintViolation]:
    """None when every argument is within the sink's allowed label;
    otherwise a violation listing exactly the offending arguments."""
    policy = policy or SinkPolicy()
    allowed = policy.maximum_for(tool_name)
    offending = [
        ArgumentViolation(index=i, label=arg.label, provenance=arg.provenance)
        for i, arg in enumerate(arguments)
        if arg.label > allowed
    ]
    if offending:
        return TaintViolation(tool_name, allowed, offending)
    return None
