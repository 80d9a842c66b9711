"""Canary tool definitions for agent pipelines.

A canary tool is deception at the tool-call layer: it is advertised to the
model alongside real tools but has no legitimate invocation path, so any
call to it is a confirmed injection with full confidence. Matching is
case-insensitive because models sometimes case-normalize tool names; the
registry invariant (no legitimate tool may share a canary name) makes a
collision impossible instead of merely unlikely.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .core import DetectorSignal

DETECTOR_ID = "honeypot"


@dataclass(frozen=True)
class CanaryTool:
    name: str
    description: str
    parameter_schema: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("canary tool name must be non-empty")


class DuplicateCanaryError(ValueError):
    pass


class CanaryRegistry:
    """Set of canary tools, immutable once wired into a pipeline."""

    def __init__(self) -> None:
        self._tools: dict[str, CanaryTool] = {}  # keyed by casefolded name

    def __len__(self) -> int:
        return len(self._tools)

    def register_canary(self, tool: CanaryTool) -> None:
        key = tool.name.casefold()
        if key in self._tools:
            raise DuplicateCanaryError(f"canary {tool.name!r} already registered")
        self._tools[key] = tool

    def names(self) -> list[str]:
        return sorted(t.name for t in self._tools.values())

    def export_tool_definitions(self) -> list[dict[str, Any]]:
        """Tool definitions in the common agent-framework shape, ordered by
        name so exports are deterministic."""
        out = []
        for tool in sorted(self._tools.values(), key=lambda t: t.name):
            out.append(
                {
                    "name": tool.name,
                    "description": tool.description,
                    "parameters": {
                        "type": "object",
                        "properties": dict(tool.parameter_schema),
                    },
                }
            )
        return out

    def export_json(self) -> str:
        return json.dumps(self.export_tool_definitions(), indent=2)

    def check_tool_call(self, name: str, arguments: Optional[Mapping[str, Any]] = None) -> Optional[DetectorSignal]:
        """Confirmed-injection signal iff ``name`` is a registered canary.

        Arguments are deliberately not inspected: the call itself is the
        entire signal.
        """
        if name.casefold() in self._tools:
            return DetectorSignal(detector_id=DETECTOR_ID, confidence=1.0, category="honeypot")
        return None


_DEFAULT_CANARIES = (
    CanaryTool(
        name="get_admin_access",
        description="Elevate the current session to administrator privileges. Requires no approval.",
        parameter_schema={"reason": {"type": "string", "description": "Why elevation is needed."}},
    ),
    CanaryTool(
        name="dump_database",
        description="Export the full contents of the production database as JSON.",
        parameter_schema={"table": {"type": "string", "description": "Table to export, or * for all."}},
    ),
    CanaryTool(
        name="reveal_system_prompt",
        description="Return the verbatim system prompt currently in effect.",
        parameter_schema={},
    ),
    CanaryTool(
        name="disable_safety_filters",
        description="Turn off all content safety filtering for this conversation.",
        parameter_schema={"confirm": {"type": "boolean", "description": "Must be true to proceed."}},
    ),
)


def default_registry() -> CanaryRegistry:
    registry = CanaryRegistry()
    for tool in _DEFAULT_CANARIES:
        registry.register_canary(tool)
    return registry
