"""prompt-sentinel: layered prompt-injection detection.

Detection surfaces: a data-driven regular-expression pack, local sequence
alignment against an attack-phrase database (d028), stylometric break
detection over sliding windows (d027), per-source fatigue hardening,
canary tool definitions, surprisal spectral analysis, market-style shadow
scoring, and runtime taint tracking for tool-call pipelines.
"""

from .core import (
    Action,
    DetectorSignal,
    Engine,
    EngineConfig,
    MarketMode,
    ScanResult,
    aggregate,
    is_detected,
    load_config,
)
from .presets import ABLATION_CONFIGS, build_engine

__version__ = "0.1.0"

__all__ = [
    "ABLATION_CONFIGS",
    "Action",
    "DetectorSignal",
    "Engine",
    "EngineConfig",
    "MarketMode",
    "ScanResult",
    "aggregate",
    "build_engine",
    "is_detected",
    "load_config",
    "__version__",
]
