"""Local sequence alignment of input tokens against an attack database.

Paraphrased attacks keep the word order of their canonical form while
substituting synonyms and padding with filler. Classic local alignment
with a semantically weighted substitution table recovers the match anyway:
exact token matches score +3, same-synonym-group matches +2, unrelated
tokens -1, and gaps -1. Scores are normalized by the perfect-match score
(3 x needle length) and compared strictly against a 0.6 threshold, which
keeps generic English prefixes such as "show me the" from firing.

The needle database and synonym groups are data files, not code.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

from .core import DetectorSignal

DETECTOR_ID = "d028"
DEFAULT_THRESHOLD = 0.6

#: Inputs longer than this many tokens are truncated before alignment;
#: quadratic DP per needle makes unbounded inputs a scan-cost hazard.
MAX_HAYSTACK_TOKENS = 4096

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:'[a-z0-9]+)?")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens with punctuation stripped, in input order."""
    return _TOKEN_RE.findall(text.lower())


def tokenize_with_spans(text: str) -> list[tuple[str, int, int]]:
    """Tokens plus their (start, end) character offsets in the input."""
    return [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text.lower())]


class SubstitutionMatrix:
    """Token-pair scoring table over disjoint synonym groups."""

    def __init__(
        self,
        synonym_groups: Sequence[set[str]],
        match_reward: int = 3,
        synonym_reward: int = 2,
        mismatch_penalty: int = -1,
        gap_penalty: int = -1,
    ) -> None:
        if not match_reward > synonym_reward > 0 > mismatch_penalty:
            raise ValueError("require match_reward > synonym_reward > 0 > mismatch_penalty")
        self.match_reward = match_reward
        self.synonym_reward = synonym_reward
        self.mismatch_penalty = mismatch_penalty
        self.gap_penalty = gap_penalty
        self.synonym_groups = [frozenset(g) for g in synonym_groups]
        self._group_of: dict[str, int] = {}
        for idx, group in enumerate(self.synonym_groups):
            for token in group:
                if token in self._group_of:
                    raise ValueError(f"synonym groups must be disjoint; {token!r} repeats")
                self._group_of[token] = idx

    def group_id(self, token: str) -> Optional[int]:
        return self._group_of.get(token)

    def score(self, a: str, b: str) -> int:
        if a == b:
            return self.match_reward
        ga = self._group_of.get(a)
        if ga is not None and ga == self._group_of.get(b):
            return self.synonym_reward
        return self.mismatch_penalty


def substitution_score(matrix: SubstitutionMatrix, a: str, b: str) -> int:
    return matrix.score(a, b)


@dataclass(frozen=True)
class AttackNeedle:
    needle_id: str
    tokens: tuple[str, ...]
    category: str

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError(f"needle {self.needle_id}: token list must be non-empty")
        if any(t != t.lower() for t in self.tokens):
            raise ValueError(f"needle {self.needle_id}: tokens must be lowercase")


@dataclass(frozen=True)
class AlignmentHit:
    needle_id: str
    raw_score: int
    normalized: float
    haystack_span: tuple[int, int]  # inclusive token-index interval
    category: str = ""


def local_align(
    needle: Sequence[str],
    haystack: Sequence[str],
    matrix: SubstitutionMatrix,
) -> tuple[int, tuple[int, int]]:
    """Best local alignment score and its haystack token span.

    Standard quadratic dynamic program over H[i][j] = max(0, diagonal +
    substitution, up + gap, left + gap). The span is recovered by traceback
    from the first maximal cell in row-major order, preferring diagonal
    over vertical over horizontal moves, so results are deterministic.
    """
    if not needle:
        raise ValueError("needle must be non-empty")
    if not haystack:
        return 0, (0, 0)

    n, m = len(needle), len(haystack)
    gap = matrix.gap_penalty
    prev = [0] * (m + 1)
    rows = []  # full table kept for traceback; needles are short
    best, best_pos = 0, (0, 0)
    for i in range(1, n + 1):
        cur = [0] * (m + 1)
        tok = needle[i - 1]
        for j in range(1, m + 1):
            h = prev[j - 1] + matrix.score(tok, haystack[j - 1])
            up = prev[j] + gap
            if up > h:
                h = up
            left = cur[j - 1] + gap
            if left > h:
                h = left
            if h < 0:
                h = 0
            cur[j] = h
            if h > best:
                best, best_pos = h, (i, j)
        rows.append(cur)
        prev = cur

    if best == 0:
        return 0, (0, 0)

    # traceback to the start of the alignment; cells with value > 0 always
    # have i, j >= 1, so the indexing below is safe
    table = [[0] * (m + 1)] + rows
    i, j = best_pos
    end_j = j - 1
    while table[i][j] > 0:
        if table[i][j] == table[i - 1][j - 1] + matrix.score(needle[i - 1], haystack[j - 1]):
            i, j = i - 1, j - 1
        elif table[i][j] == table[i - 1][j] + gap:
            i -= 1
        else:
            j -= 1
    return best, (j, end_j)


def normalized_score(raw: int, needle_length: int, matrix: SubstitutionMatrix) -> float:
    """Raw score as a fraction of a perfect exact match, clamped to [0, 1]."""
    if needle_length < 1:
        raise ValueError("needle_length must be >= 1")
    return min(1.0, max(0.0, raw / (matrix.match_reward * needle_length)))


def _match_upper_bound(needle: Sequence[str], haystack_tokens: set[str], haystack_groups: set[int], matrix: SubstitutionMatrix) -> int:
    """Cheap upper bound on the raw alignment score: every needle token that
    occurs anywhere in the haystack (or shares a synonym group with it)
    counts at its best possible reward, gaps and order ignored."""
    bound = 0
    for tok in needle:
        if tok in haystack_tokens:
            bound += matrix.match_reward
        else:
            group = matrix.group_id(tok)
            if group is not None and group in haystack_groups:
                bound += matrix.synonym_reward
    return bound


def best_hit(
    tokens: Sequence[str],
    database: Sequence[AttackNeedle],
    matrix: SubstitutionMatrix,
    threshold: float = DEFAULT_THRESHOLD,
) -> Optional[AlignmentHit]:
    """Best-scoring needle over the token sequence; ties break toward the
    lowest needle_id. Returns None for an empty haystack."""
    if not tokens:
        return None
    tokens = list(tokens[:MAX_HAYSTACK_TOKENS])
    haystack_tokens = set(tokens)
    haystack_groups = {g for g in (matrix.group_id(t) for t in haystack_tokens) if g is not None}

    best: Optional[AlignmentHit] = None
    for needle in sorted(database, key=lambda nd: nd.needle_id):
        denom = matrix.match_reward * len(needle.tokens)
        bound = _match_upper_bound(needle.tokens, haystack_tokens, haystack_groups, matrix)
        # A needle whose optimistic bound cannot strictly beat the current
        # best can be skipped without changing the result (earlier ids win
        # ties, and we iterate in id order).
        if best is not None and bound / denom <= best.normalized:
            continue
        raw, span = local_align(needle.tokens, tokens, matrix)
        norm = normalized_score(raw, len(needle.tokens), matrix)
        if best is None or norm > best.normalized:
            best = AlignmentHit(
                needle_id=needle.needle_id,
                raw_score=raw,
                normalized=norm,
                haystack_span=span,
                category=needle.category,
            )
    return best


def detect_alignment(
    text: str,
    database: Sequence[AttackNeedle],
    matrix: SubstitutionMatrix,
    threshold: float = DEFAULT_THRESHOLD,
) -> Optional[DetectorSignal]:
    """Fire iff the best hit clears the normalized threshold strictly."""
    if not database:
        raise ValueError("needle database must be non-empty")
    spans = tokenize_with_spans(text)
    hit = best_hit([t for t, _, _ in spans], database, matrix)
    if hit is None or hit.normalized <= threshold:
        return None
    tok_start, tok_end = hit.haystack_span
    char_span = (spans[tok_start][1], spans[tok_end][2])
    return DetectorSignal(
        detector_id=DETECTOR_ID,
        confidence=hit.normalized,
        category=hit.category,
        span=char_span,
    )


# -- data loading -------------------------------------------------------------


def _read_data(name: str, path: Optional[str]) -> str:
    if path is None:
        return resources.files("prompt_sentinel").joinpath(f"data/{name}").read_text("utf-8")
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def load_synonym_groups(path: Optional[str] = None) -> list[set[str]]:
    return [set(group) for group in json.loads(_read_data("synonym_groups.json", path))]


def load_needles(path: Optional[str] = None) -> list[AttackNeedle]:
    return [
        AttackNeedle(
            needle_id=entry["needle_id"],
            tokens=tuple(entry["tokens"]),
            category=entry["category"],
        )
        for entry in json.loads(_read_data("needles.json", path))
    ]


def default_matrix() -> SubstitutionMatrix:
    return SubstitutionMatrix(load_synonym_groups())
