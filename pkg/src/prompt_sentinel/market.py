"""Market-style ensemble scoring, run in shadow mode only.

Each firing detector is treated as a market participant that buys "this
scan is an attack" in proportion to its stated confidence, weighted by its
historical reliability (one minus its Brier score over labeled history).
The automated market maker prices the position with a logarithmic scoring
rule; the resulting closed form is weighted log-odds pooling:

    score = sigmoid( sum_i (1 - brier_i) * logit(clamp(c_i)) )

Shadow mode never drives actions: the legacy aggregation decides, and this
module only logs disagreements for offline review.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence, TYPE_CHECKING

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, types only
    from .core import Action, DetectorSignal

UNINFORMED_BRIER = 0.25


@dataclass(frozen=True)
class MarketConfig:
    liquidity_b: float = 1.0
    confidence_clamp: float = 0.01

    def __post_init__(self) -> None:
        if self.liquidity_b <= 0.0:
            raise ValueError("liquidity_b must be positive")
        if not 0.0 < self.confidence_clamp < 0.5:
            raise ValueError("confidence_clamp must be in (0, 0.5)")


@dataclass
class DetectorHistory:
    detector_id: str
    records: list[tuple[float, int]] = field(default_factory=list)

    def add(self, confidence: float, label: int) -> None:
        if not 0.0 <= confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {confidence}")
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label}")
        self.records.append((confidence, label))


def brier(history: Optional[DetectorHistory]) -> float:
    """Mean squared error of past confidences against their labels.

    An empty (or missing) history scores the uninformed default 0.25, the
    Brier score of always answering 0.5.
    """
    if history is None or not history.records:
        return UNINFORMED_BRIER
    return sum((c - label) ** 2 for c, label in history.records) / len(history.records)


def lmsr_price(q_yes: float, q_no: float, b: float) -> float:
    """Instantaneous yes-price of a two-outcome logarithmic market maker."""
    if b <= 0.0:
        raise ValueError("liquidity parameter b must be positive")
    # subtract the max exponent for numerical stability
    m = max(q_yes, q_no) / b
    ey = math.exp(q_yes / b - m)
    en = math.exp(q_no / b - m)
    return ey / (ey + en)


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


class MarketState:
    """Per-detector labeled history, appended by the benchmark harness or
    an explicit labeling call."""

    def __init__(self) -> None:
        self._histories: dict[str, DetectorHistory] = {}

    def history(self, detector_id: str) -> Optional[DetectorHistory]:
        return self._histories.get(detector_id)

    def record(self, detector_id: str, confidence: float, label: int) -> None:
        self._histories.setdefault(detector_id, DetectorHistory(detector_id)).add(confidence, label)

    def weight(self, detector_id: str) -> float:
        return 1.0 - brier(self.history(detector_id))


def market_score(
    signals: Sequence["DetectorSignal"],
    state: Optional[MarketState],
    config: MarketConfig,
) -> float:
    """Price of the "attack" outcome after every firing detector trades.

    Detector i moves the market by b * w_i * logit(clamp(c_i)) where w_i is
    1 minus its Brier score; a detector firing several signals trades once
    at its maximum confidence. No signals leave the market at its 0.5 prior.
    """
    by_detector: dict[str, float] = {}
    for sig in signals:
        if sig.confidence <= 0.0:
            continue
        prev = by_detector.get(sig.detector_id, 0.0)
        by_detector[sig.detector_id] = max(prev, sig.confidence)
    if not by_detector:
        return 0.5
    lo = config.confidence_clamp
    hi = 1.0 - config.confidence_clamp
    q_yes = 0.0
    for det_id, conf in by_detector.items():
        w = state.weight(det_id) if state is not None else 1.0 - UNINFORMED_BRIER
        clamped = min(hi, max(lo, conf))
        q_yes += config.liquidity_b * w * _logit(clamped)
    return lmsr_price(q_yes, 0.0, config.liquidity_b)


class DisagreementLog:
    """Append-only JSON-lines record of legacy/market disagreements."""

    def __init__(self, path: Optional[str] = None) -> None:
        self.path = path
        self.records: list[dict] = []

    def append(self, record: dict) -> None:
        self.records.append(record)
        if self.path:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def shadow_compare(
    legacy_risk: float,
    legacy_action: "Action",
    market_risk: float,
    disagreement_log: Optional[DisagreementLog],
    *,
    effective_threshold: float = 0.7,
    signals: Sequence["DetectorSignal"] = (),
    timestamp: float = 0.0,
) -> "Action":
    """Return the legacy action, logging a disagreement record when the two
    scores differ by more than 0.2 or imply different actions."""
    from .core import resolve_action  # deferred: core imports this module

    market_action = resolve_action(market_risk, effective_threshold)
    disagrees = abs(legacy_risk - market_risk) > 0.2 or market_action is not legacy_action
    if disagrees and disagreement_log is not None:
        disagreement_log.append(
            {
                "timestamp": timestamp,
                "legacy_risk": legacy_risk,
                "market_risk": market_risk,
                "legacy_action": legacy_action.value,
                "signals": [
                    {"detector_id": s.detector_id, "confidence": s.confidence, "category": s.category}
                    for s in signals
                ],
            }
        )
    return legacy_action
