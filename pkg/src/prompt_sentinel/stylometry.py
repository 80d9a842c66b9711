"""Stylometric discontinuity detection over sliding token windows.

An injected payload introduces a second author: directive vocabulary,
imperative mood, and uppercase shouting sit next to calm body prose. Each
fifty-token window is reduced to nine style features, the feature vector
is renormalized into a probability mass, and the Jensen-Shannon divergence
between adjacent windows measures the style break. The detector stays
silent below one hundred tokens, where per-window estimates are too noisy
to trust.

The divergence threshold is not hand-picked: it is the midpoint of the
widest interval that separates the shipped synthetic benchmark perfectly
(see the calibration module).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .core import DetectorSignal

DETECTOR_ID = "d027"

#: Midpoint of the calibration sweep interval on the synthetic benchmark
#: (seed 20260420); revalidated by the acceptance suite.
DEFAULT_DIVERGENCE_THRESHOLD = 0.0448

# characters counted as stylistic punctuation
_STYLE_PUNCT = set("!?:;\"'…*#")
_SENTENCE_END_RE = re.compile(r"[.!?]+")
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:'[A-Za-z0-9]+)?")

FEATURE_NAMES = (
    "function_word_freq",
    "avg_word_len",
    "avg_sentence_len",
    "punct_density",
    "hapax_ratio",
    "yules_k",
    "imperative_ratio",
    "uppercase_char_ratio",
    "allcaps_word_ratio",
)


def _load_word_list(name: str) -> frozenset[str]:
    raw = resources.files("prompt_sentinel").joinpath(f"data/{name}").read_text("utf-8")
    return frozenset(line.strip() for line in raw.splitlines() if line.strip())


def default_function_words() -> frozenset[str]:
    return _load_word_list("function_words.txt")


def default_imperative_verbs() -> frozenset[str]:
    return _load_word_list("imperative_verbs.txt")


@dataclass(frozen=True)
class StylometryConfig:
    window_size: int = 50
    stride: int = 25
    min_tokens: int = 100
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD
    function_words: frozenset[str] = None  # type: ignore[assignment]
    imperative_verbs: frozenset[str] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.stride > self.window_size:
            raise ValueError("stride must not exceed window_size")
        if self.min_tokens < 2 * self.window_size:
            raise ValueError("min_tokens must be at least twice the window size")
        if self.function_words is None:
            object.__setattr__(self, "function_words", default_function_words())
        if self.imperative_verbs is None:
            object.__setattr__(self, "imperative_verbs", default_imperative_verbs())


@dataclass(frozen=True)
class StyleVector:
    """Nine style features, each already scaled into [0, 1].

    ``distribution()`` renormalizes the vector into the probability mass
    compared across windows; an all-zero vector stays all-zero.
    """

    function_word_freq: float
    avg_word_len: float
    avg_sentence_len: float
    punct_density: float
    hapax_ratio: float
    yules_k: float
    imperative_ratio: float
    uppercase_char_ratio: float
    allcaps_word_ratio: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.function_word_freq,
            self.avg_word_len,
            self.avg_sentence_len,
            self.punct_density,
            self.hapax_ratio,
            self.yules_k,
            self.imperative_ratio,
            self.uppercase_char_ratio,
            self.allcaps_word_ratio,
        )

    def distribution(self) -> tuple[float, ...]:
        raw = self.as_tuple()
        total = sum(raw)
        if total == 0.0:
            return raw
        return tuple(v / total for v in raw)


def tokenize_with_spans(text: str) -> list[tuple[str, int, int]]:
    """Case-preserving word tokens with character offsets."""
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def window(tokens: Sequence, size: int, stride: int) -> list[Sequence]:
    """Windows starting at offsets 0, stride, 2*stride, ...; a trailing
    partial window is kept iff it holds at least half a window."""
    if size < 1 or stride < 1:
        raise ValueError("size and stride must be >= 1")
    out = []
    offset = 0
    n = len(tokens)
    while offset < n:
        chunk = tokens[offset : offset + size]
        if len(chunk) == size or 2 * len(chunk) >= size:
            out.append(chunk)
        offset += stride
    return out


def yules_k(tokens: Sequence[str]) -> float:
    """Yule's K vocabulary-richness statistic; higher means more repetitive."""
    if not tokens:
        raise ValueError("Yule's K is undefined on an empty window")
    n = len(tokens)
    counts: dict[str, int] = {}
    for tok in tokens:
        counts[tok] = counts.get(tok, 0) + 1
    sum_m2 = sum(c * c for c in counts.values())
    return 1e4 * (sum_m2 - n) / (n * n)


def _sentence_count(raw_text: str) -> int:
    # A window with no terminator counts as a single sentence.
    return max(1, len(_SENTENCE_END_RE.findall(raw_text)))


def feature_vector(window_tokens: Sequence[str], raw_text_slice: str, config: StylometryConfig) -> StyleVector:
    """Nine features over one window.

    Scaling caps: word length /10, sentence length /40, punctuation density
    x10, Yule's K /2000; the ratio features are already in [0, 1].
    """
    if not window_tokens:
        raise ValueError("window must be non-empty")
    n = len(window_tokens)
    lowered = [t.lower() for t in window_tokens]

    func_freq = sum(1 for t in lowered if t in config.function_words) / n
    avg_word = min(1.0, (sum(len(t) for t in window_tokens) / n) / 10.0)
    avg_sentence = min(1.0, (n / _sentence_count(raw_text_slice)) / 40.0)
    punct = min(1.0, 10.0 * sum(1 for ch in raw_text_slice if ch in _STYLE_PUNCT) / max(1, len(raw_text_slice)))

    counts: dict[str, int] = {}
    for tok in lowered:
        counts[tok] = counts.get(tok, 0) + 1
    vocab = len(counts)
    hapax = sum(1 for c in counts.values() if c == 1) / vocab
    yule = min(1.0, yules_k(lowered) / 2000.0)

    imperative = sum(1 for t in lowered if t in config.imperative_verbs) / n

    alpha_chars = [ch for tok in window_tokens for ch in tok if ch.isalpha()]
    upper = sum(1 for ch in alpha_chars if ch.isupper()) / len(alpha_chars) if alpha_chars else 0.0

    eligible = [t for t in window_tokens if len(t) >= 3]
    allcaps = (
        sum(1 for t in eligible if t.isupper() and any(ch.isalpha() for ch in t)) / len(eligible)
        if eligible
        else 0.0
    )

    return StyleVector(
        function_word_freq=func_freq,
        avg_word_len=avg_word,
        avg_sentence_len=avg_sentence,
        punct_density=punct,
        hapax_ratio=hapax,
        yules_k=yule,
        imperative_ratio=imperative,
        uppercase_char_ratio=upper,
        allcaps_word_ratio=allcaps,
    )


def _entropy_bits(dist: Sequence[float]) -> float:
    return -sum(p * math.log2(p) for p in dist if p > 0.0)


def jsd(p: Sequence[float], q: Sequence[float]) -> float:
    """Jensen-Shannon divergence in bits; bounded to [0, 1].

    An all-zero vector (an empty-feature window) is treated as carrying no
    evidence: its divergence against anything is 0.
    """
    if len(p) != len(q):
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")
    if all(v == 0.0 for v in p) or all(v == 0.0 for v in q):
        return 0.0
    mid = [(a + b) / 2.0 for a, b in zip(p, q)]
    value = _entropy_bits(mid) - (_entropy_bits(p) + _entropy_bits(q)) / 2.0
    return min(1.0, max(0.0, value))


def max_adjacent_divergence(text: str, config: Optional[StylometryConfig] = None) -> Optional[tuple[float, int]]:
    """Largest JSD between adjacent windows and the index of the first
    window of the maximizing pair. None when the input is below the
    silence floor (or produces fewer than two windows)."""
    config = config or StylometryConfig()
    spans = tokenize_with_spans(text)
    if len(spans) < config.min_tokens:
        return None
    windows = window(spans, config.window_size, config.stride)
    if len(windows) < 2:
        return None
    dists = []
    for win in windows:
        tokens = [t for t, _, _ in win]
        raw_slice = text[win[0][1] : win[-1][2]]
        dists.append(feature_vector(tokens, raw_slice, config).distribution())
    best, best_idx = -1.0, 0
    for idx in range(len(dists) - 1):
        value = jsd(dists[idx], dists[idx + 1])
        if value > best:
            best, best_idx = value, idx
    return best, best_idx


def detect_stylometry(text: str, config: Optional[StylometryConfig] = None) -> Optional[DetectorSignal]:
    """Fire iff the maximum adjacent-window divergence exceeds the
    calibrated threshold; silent below the token floor."""
    config = config or StylometryConfig()
    scored = max_adjacent_divergence(text, config)
    if scored is None:
        return None
    max_jsd, pair_idx = scored
    if max_jsd <= config.divergence_threshold:
        return None

    spans = tokenize_with_spans(text)
    windows = window(spans, config.window_size, config.stride)
    first, second = windows[pair_idx], windows[pair_idx + 1]
    # the overlap between the maximizing pair brackets the style boundary
    lo = min(second[0][1], first[-1][2])
    hi = max(second[0][1], first[-1][2])
    confidence = min(1.0, max_jsd / config.divergence_threshold * 0.5 + 0.5)
    return DetectorSignal(
        detector_id=DETECTOR_ID,
        confidence=confidence,
        category="style_discontinuity",
        span=(lo, hi),
    )
