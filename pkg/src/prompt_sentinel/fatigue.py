"""Per-source hardening against probing campaigns.

A stateless scanner cannot tell a burst of benign near-boundary queries
from an adversary iterating toward the minimum-effort bypass. This module
keeps, per (source, detector) pair, an exponentially weighted moving
average of a near-miss indicator: 1 when the scan's top confidence landed
just below the detection threshold, 0 otherwise. Sustained near-misses
push the EWMA over a trigger ratio and the pair enters a hardened state in
which the effective block threshold is lowered by a fixed offset. The
state releases automatically after a cooldown with no further near-misses.

All stateful operations take an explicit logical clock (`now`, seconds) so
cooldown behavior is testable without sleeping.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, asdict
from typing import Optional


@dataclass(frozen=True)
class FatigueConfig:
    delta: float = 0.1              # near-miss band width below the threshold
    alpha: float = 0.2              # EWMA weight of the newest indicator
    trigger_ratio: float = 0.3      # EWMA level at which hardening can engage
    min_samples: int = 10           # scans required before hardening can engage
    hardening_offset: float = 0.1   # threshold reduction while hardened
    cooldown_seconds: float = 300.0
    eviction_factor: float = 10.0   # idle sources evicted after factor * cooldown

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.trigger_ratio < 1.0:
            raise ValueError(f"trigger_ratio must be in (0, 1), got {self.trigger_ratio}")
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.cooldown_seconds <= 0.0:
            raise ValueError("cooldown_seconds must be positive")


@dataclass
class FatigueState:
    ewma: float = 0.0
    samples: int = 0
    hardened: bool = False
    hardened_since: float = 0.0
    last_near_miss: float = 0.0
    last_seen: float = 0.0


def is_near_miss(confidence: float, base_threshold: float, delta: float) -> bool:
    """True iff confidence falls in [threshold - delta, threshold).

    Left-closed, right-open: a scan at exactly the threshold is a hit, not
    a near-miss.
    """
    return base_threshold - delta <= confidence < base_threshold


def maybe_release(state: FatigueState, now: float, config: FatigueConfig) -> FatigueState:
    """Clear the hardened flag and reset the EWMA once the cooldown has
    elapsed with no further near-misses. Non-hardened states pass through."""
    if state.hardened and now - state.last_near_miss >= config.cooldown_seconds:
        state.hardened = False
        state.ewma = 0.0
    return state


class FatigueTracker:
    """Keyed store of per-(source, detector) fatigue states.

    Entry access is serialized under a single lock; the tracker is the only
    mutable cross-scan component in the engine. Sources idle longer than
    ``eviction_factor * cooldown_seconds`` are dropped to bound memory under
    adversarial source churn.
    """

    def __init__(self, config: Optional[FatigueConfig] = None) -> None:
        self.config = config or FatigueConfig()
        self._states: dict[tuple[str, str], FatigueState] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._states)

    def get_state(self, source_id: str, detector_id: str) -> Optional[FatigueState]:
        with self._lock:
            return self._states.get((source_id, detector_id))

    def record_scan(
        self,
        source_id: str,
        detector_id: str,
        max_confidence: float,
        now: float,
        *,
        base_threshold: float = 0.7,
        blocked: bool = False,
    ) -> FatigueState:
        """Fold one scan into the (source, detector) state.

        ``blocked`` marks scans the engine blocked; those are hits, not
        near-misses, and record an indicator of 0 regardless of confidence.
        """
        cfg = self.config
        with self._lock:
            self._evict(now)
            state = self._states.setdefault((source_id, detector_id), FatigueState())
            maybe_release(state, now, cfg)
            near = (not blocked) and is_near_miss(max_confidence, base_threshold, cfg.delta)
            x = 1.0 if near else 0.0
            state.ewma = cfg.alpha * x + (1.0 - cfg.alpha) * state.ewma
            state.samples += 1
            state.last_seen = now
            if near:
                state.last_near_miss = now
            if not state.hardened and state.ewma >= cfg.trigger_ratio and state.samples >= cfg.min_samples:
                state.hardened = True
                state.hardened_since = now
            return state

    def effective_threshold(
        self, source_id: str, detector_id: str, base_threshold: float, now: float
    ) -> float:
        """Threshold the engine should block at for this (source, detector).

        Returns the base threshold unless the pair is hardened and its
        cooldown has not elapsed.
        """
        with self._lock:
            state = self._states.get((source_id, detector_id))
            if state is None:
                return base_threshold
            maybe_release(state, now, self.config)
            if state.hardened:
                return base_threshold - self.config.hardening_offset
            return base_threshold

    def _evict(self, now: float) -> None:
        horizon = self.config.eviction_factor * self.config.cooldown_seconds
        stale = [k for k, s in self._states.items() if now - s.last_seen >= horizon]
        for key in stale:
            del self._states[key]

    # -- snapshot persistence ------------------------------------------------

    def snapshot(self, path: str) -> None:
        """Write all states to a JSON file keyed by source then detector."""
        with self._lock:
            doc: dict[str, dict[str, dict]] = {}
            for (source, detector), state in self._states.items():
                doc.setdefault(source, {})[detector] = asdict(state)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)

    def load_snapshot(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        with self._lock:
            self._states.clear()
            for source, per_detector in doc.items():
                for detector, fields in per_detector.items():
                    self._states[(source, detector)] = FatigueState(**fields)
