"""Scan engine: detector registry, score aggregation, and action mapping.

Detectors are pure callables from input text to zero or more signals. The
engine runs every enabled detector, folds the signals into a single risk
score with a maximum-confidence-plus-bonus rule, and maps the score to an
action. The only cross-scan state lives in the optional fatigue tracker,
which can lower the effective block threshold for sources that have been
probing just below it.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .fatigue import FatigueConfig, FatigueTracker
from .market import DisagreementLog, MarketConfig, MarketState, market_score, shadow_compare

logger = logging.getLogger("prompt_sentinel")

CONFIG_ENV_VAR = "SENTINEL_CONFIG"

#: Risk at or above which a scan is flagged even when it stays under the
#: block threshold. Coincides with the risk floor of the detection rule.
FLAG_FLOOR = 0.5


class Action(str, Enum):
    ALLOW = "allow"
    FLAG = "flag"
    BLOCK = "block"


class MarketMode(str, Enum):
    OFF = "off"
    SHADOW = "shadow"


@dataclass(frozen=True)
class DetectorSignal:
    """One detector's verdict on one scan."""

    detector_id: str
    confidence: float
    category: str = ""
    span: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(
                f"confidence must be in [0, 1], got {self.confidence!r} "
                f"from detector {self.detector_id!r}"
            )
        if self.span is not None:
            start, end = self.span
            if start < 0 or end < start:
                raise ValueError(f"malformed span {self.span!r}")


@dataclass(frozen=True)
class ScanResult:
    signals: tuple[DetectorSignal, ...]
    overall_risk: float
    action: Action
    source_id: str
    effective_threshold: float

    def to_dict(self) -> dict:
        return {
            "signals": [
                {
                    "detector_id": s.detector_id,
                    "confidence": s.confidence,
                    "category": s.category,
                    "span": list(s.span) if s.span else None,
                }
                for s in self.signals
            ],
            "overall_risk": self.overall_risk,
            "action": self.action.value,
            "source_id": self.source_id,
            "effective_threshold": self.effective_threshold,
        }


@dataclass
class EngineConfig:
    """Engine-level knobs, loadable from a JSON document.

    ``enabled_detectors`` of ``None`` means every registered detector runs;
    an explicit set restricts the scan to exactly those ids.
    """

    scan_threshold: float = 0.7
    bonus_per_extra_detector: float = 0.05
    enabled_detectors: Optional[frozenset[str]] = None
    fatigue_enabled: bool = False
    market_mode: MarketMode = MarketMode.OFF
    fatigue: FatigueConfig = field(default_factory=FatigueConfig)
    market: MarketConfig = field(default_factory=MarketConfig)

    def __post_init__(self) -> None:
        if not 0.0 < self.scan_threshold <= 1.0:
            raise ValueError(f"scan_threshold must be in (0, 1], got {self.scan_threshold}")
        if self.bonus_per_extra_detector < 0.0:
            raise ValueError("bonus_per_extra_detector must be >= 0")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "EngineConfig":
        enabled = raw.get("enabled_detectors")
        fatigue_raw = raw.get("fatigue", {})
        market_raw = raw.get("market", {})
        return cls(
            scan_threshold=float(raw.get("scan_threshold", 0.7)),
            bonus_per_extra_detector=float(raw.get("bonus_per_extra_detector", 0.05)),
            enabled_detectors=frozenset(enabled) if enabled is not None else None,
            fatigue_enabled=bool(raw.get("fatigue_enabled", False)),
            market_mode=MarketMode(raw.get("market_mode", "off")),
            fatigue=FatigueConfig(**fatigue_raw) if fatigue_raw else FatigueConfig(),
            market=MarketConfig(**market_raw) if market_raw else MarketConfig(),
        )


def load_config(path: Optional[str] = None) -> EngineConfig:
    """Load engine configuration from ``path``, the ``SENTINEL_CONFIG``
    environment variable, or defaults, in that order of preference."""
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return EngineConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return EngineConfig.from_dict(json.load(fh))


def resolve_action(risk: float, effective_threshold: float) -> Action:
    if risk >= effective_threshold:
        return Action.BLOCK
    if risk >= FLAG_FLOOR:
        return Action.FLAG
    return Action.ALLOW


def aggregate(signals: Sequence[DetectorSignal], config: EngineConfig) -> tuple[float, Action]:
    """Fold signals into (overall_risk, action) at the base threshold.

    Risk is the maximum confidence plus a fixed bonus per additional
    distinct firing detector, capped at 1.0. Zero-confidence signals
    (diagnostics) do not count as firing.
    """
    firing = [s for s in signals if s.confidence > 0.0]
    if not firing:
        return 0.0, Action.ALLOW
    top = max(s.confidence for s in firing)
    extra = len({s.detector_id for s in firing}) - 1
    risk = min(1.0, top + config.bonus_per_extra_detector * extra)
    return risk, resolve_action(risk, config.scan_threshold)


def is_detected(result: ScanResult) -> bool:
    """Standard detection rule used by the benchmark harness."""
    return result.action in (Action.BLOCK, Action.FLAG) or result.overall_risk >= 0.5


#: A detector callback maps input text to nothing, one signal, or several.
DetectorCallback = Callable[[str], Union[None, DetectorSignal, Iterable[DetectorSignal]]]


class DuplicateDetectorError(ValueError):
    pass


class Engine:
    """Registry of detectors plus the scan pipeline.

    Detector callbacks must be pure functions of the input text; scans are
    therefore safe to run concurrently. The fatigue tracker is the single
    mutable component and serializes its own state access.
    """

    def __init__(
        self,
        config: Optional[EngineConfig] = None,
        *,
        disagreement_log: Optional[DisagreementLog] = None,
    ) -> None:
        self.config = config or EngineConfig()
        self._detectors: dict[str, DetectorCallback] = {}
        self.fatigue = FatigueTracker(self.config.fatigue)
        self.market = MarketState()
        self.disagreement_log = disagreement_log

    def register_detector(self, detector_id: str, callback: DetectorCallback) -> None:
        if detector_id in self._detectors:
            raise DuplicateDetectorError(f"detector {detector_id!r} already registered")
        self._detectors[detector_id] = callback

    def detector_ids(self) -> tuple[str, ...]:
        return tuple(self._detectors)

    def _enabled(self) -> list[tuple[str, DetectorCallback]]:
        allowed = self.config.enabled_detectors
        return [
            (det_id, cb)
            for det_id, cb in self._detectors.items()
            if allowed is None or det_id in allowed
        ]

    def _run_detector(self, det_id: str, callback: DetectorCallback, text: str) -> list[DetectorSignal]:
        try:
            produced = callback(text)
        except Exception:
            # A broken detector must never deny service; degrade to a
            # zero-confidence diagnostic signal and keep scanning.
            logger.warning("detector %s failed", det_id, exc_info=True)
            return [DetectorSignal(detector_id=det_id, confidence=0.0, category="detector_error")]
        if produced is None:
            return []
        if isinstance(produced, DetectorSignal):
            produced = [produced]
        out = []
        for sig in produced:
            if sig.span is not None:
                start, end = sig.span
                start = max(0, min(start, len(text)))
                end = max(start, min(end, len(text)))
                sig = replace(sig, span=(start, end))
            out.append(sig)
        return out

    def scan(self, text: str, source_id: str = "", now: float = 0.0) -> ScanResult:
        """Run every enabled detector over ``text`` and map the aggregate
        risk to an action.

        ``now`` is a logical clock in seconds; fatigue cooldowns are
        measured against it, never against wall time.
        """
        if self.config.fatigue_enabled and not source_id:
            raise ValueError("source_id required when fatigue tracking is enabled")

        signals: list[DetectorSignal] = []
        for det_id, callback in self._enabled():
            signals.extend(self._run_detector(det_id, callback, text))

        risk, _ = aggregate(signals, self.config)
        firing = [s for s in signals if s.confidence > 0.0]
        top = max(firing, key=lambda s: (s.confidence, s.detector_id)) if firing else None

        effective = self.config.scan_threshold
        if self.config.fatigue_enabled and top is not None:
            effective = self.fatigue.effective_threshold(
                source_id, top.detector_id, self.config.scan_threshold, now
            )
        action = resolve_action(risk, effective)

        if self.config.market_mode is MarketMode.SHADOW:
            shadow = market_score(signals, self.market, self.config.market)
            action = shadow_compare(
                risk,
                action,
                shadow,
                self.disagreement_log,
                effective_threshold=effective,
                signals=signals,
                timestamp=now,
            )

        if self.config.fatigue_enabled and top is not None:
            self.fatigue.record_scan(
                source_id,
                top.detector_id,
                top.confidence,
                now,
                base_threshold=self.config.scan_threshold,
                blocked=action is Action.BLOCK,
            )

        return ScanResult(
            signals=tuple(signals),
            overall_risk=risk,
            action=action,
            source_id=source_id,
            effective_threshold=effective,
        )
