"""Threshold calibration sweeps.

Detectors that fire on a strict greater-than comparison admit a clean
calibration recipe: collect the statistic on every labeled sample, and any
threshold in [max(negative scores), min(positive scores)) achieves full
recall with zero false positives. The shipped defaults are the midpoints
of those intervals on the synthetic benchmark; the procedure itself is the
contract, so the acceptance suite re-runs it and checks that the defaults
still sit inside the intervals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .align import tokenize
from .benchmark import BenchmarkSample, benign_corpus
from .spectral import NgramSurprisalModel, SpectralConfig, hf_energy_ratio, train_ngram
from .stylometry import StylometryConfig, max_adjacent_divergence


@dataclass(frozen=True)
class SweepResult:
    """Threshold interval achieving recall 1.0 and FPR 0.0.

    A threshold t is valid iff every positive statistic is strictly above t
    and no negative statistic is; that holds exactly for t in [low, high).
    The interval is empty (valid() false) when the classes overlap.
    """

    low: float   # max statistic over negatives
    high: float  # min statistic over positives
    positive_scores: tuple[float, ...]
    negative_scores: tuple[float, ...]

    def valid(self) -> bool:
        return self.low < self.high

    def contains(self, threshold: float) -> bool:
        return self.low <= threshold < self.high

    def midpoint(self) -> float:
        if not self.valid():
            raise ValueError("empty calibration interval has no midpoint")
        return (self.low + self.high) / 2.0


def _sweep(positive_scores: Sequence[float], negative_scores: Sequence[float]) -> SweepResult:
    if not positive_scores or not negative_scores:
        raise ValueError("both classes must be non-empty for a sweep")
    return SweepResult(
        low=max(negative_scores),
        high=min(positive_scores),
        positive_scores=tuple(positive_scores),
        negative_scores=tuple(negative_scores),
    )


def sweep_stylometry(
    samples: Sequence[BenchmarkSample],
    config: Optional[StylometryConfig] = None,
) -> SweepResult:
    """Sweep the divergence threshold over max adjacent-window JSD scores.

    Samples below the silence floor score 0 (they can never fire).
    """
    config = config or StylometryConfig()
    pos, neg = [], []
    for sample in samples:
        scored = max_adjacent_divergence(sample.text, config)
        value = scored[0] if scored is not None else 0.0
        (pos if sample.label == 1 else neg).append(value)
    return _sweep(pos, neg)


def sweep_spectral(
    samples: Sequence[BenchmarkSample],
    provider: Optional[NgramSurprisalModel] = None,
    config: Optional[SpectralConfig] = None,
) -> SweepResult:
    """Sweep the high-frequency energy-ratio threshold.

    The provider defaults to a trigram model trained on the benchmark's
    benign texts, mirroring the shipped configuration.
    """
    config = config or SpectralConfig()
    if provider is None:
        provider = train_ngram([tokenize(text) for text in benign_corpus(samples)])
    pos, neg = [], []
    for sample in samples:
        tokens = tokenize(sample.text)
        value = 0.0
        if len(tokens) >= config.min_tokens:
            value = hf_energy_ratio(provider.surprisal_series(tokens), config.cutoff_fraction)
        (pos if sample.label == 1 else neg).append(value)
    return _sweep(pos, neg)
