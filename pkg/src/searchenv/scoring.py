"""Relevance judging, NDCG@k with a fixed weight-sum denominator, rewards.

NDCG here divides the gained rank weights by the sum of *all* k position
weights (w_i = 1/log2(i+1)), not by the ideal DCG of the judged list, so a
ranking with fewer than k relevant documents can never reach 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Document, normalize_text


def rank_weight(position: int) -> float:
    """Weight of 1-based rank position: 1 / log2(position + 1)."""
    return 1.0 / math.log2(position + 1)


def weight_sum(k: int) -> float:
    return sum(rank_weight(i) for i in range(1, k + 1))


class RelevanceJudger:
    """Binary relevance: a document is relevant iff it contains an answer.

    Matching is contiguous token-sequence containment in the passage body
    (titles excluded), with the corpus tokenizer applied to the answers.
    """

    def __init__(self, answers):
        sequences = []
        for answer in answers:
            tokens = tuple(normalize_text(answer))
            if tokens:
                sequences.append(tokens)
        if not sequences:
            raise ValueError("judger needs at least one non-empty answer")
        self.answer_sequences: tuple[tuple[str, ...], ...] = tuple(sequences)

    def relevant(self, doc: Document) -> int:
        return relevance(doc, self)


def _contains_sequence(tokens: tuple[str, ...], needle: tuple[str, ...]) -> bool:
    n = len(needle)
    if n == 0 or n > len(tokens):
        return False
    first = needle[0]
    for i in range(len(tokens) - n + 1):
        if tokens[i] == first and tokens[i : i + n] == needle:
            return True
    return False


def relevance(doc: Document, judger: RelevanceJudger) -> int:
    """1 iff any normalized answer occurs contiguously in the content tokens."""
    for seq in judger.answer_sequences:
        if _contains_sequence(doc.content_tokens, seq):
            return 1
    return 0


def ndcg_at_k(ranked_docs, judger: RelevanceJudger, k: int = 5) -> float:
    """Rank-weighted relevance gain over the fixed k-position weight sum."""
    if k < 1:
        raise ValueError("k must be >= 1")
    gained = 0.0
    for i, doc in enumerate(ranked_docs[:k], start=1):
        if relevance(doc, judger):
            gained += rank_weight(i)
    return gained / weight_sum(k)


def ndcg_from_pattern(relevant_positions, k: int = 5) -> float:
    """NDCG of a relevance pattern given as a set of 1-based rank positions."""
    gained = sum(rank_weight(i) for i in range(1, k + 1) if i in relevant_positions)
    return gained / weight_sum(k)


def ndcg_display(value: float) -> str:
    """One-decimal display of NDCG x 100, truncated (72.273 -> '72.2')."""
    truncated = math.floor(value * 1000.0) / 10.0
    if truncated == int(truncated):
        return str(int(truncated))
    return f"{truncated:.1f}"


@dataclass(frozen=True)
class RewardConfig:
    k: int = 5
    empty_result_penalty: float = -1.0
    immediate_stop_penalty: float = -1.0
    discount: float = 0.9  # stored for downstream consumers; episode returns are undiscounted

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.empty_result_penalty > 0 or self.immediate_stop_penalty > 0:
            raise ValueError("penalties must be <= 0")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must be in (0, 1]")


def step_reward(
    ndcg_before: float,
    ndcg_after: float,
    cfg: RewardConfig,
    result_empty: bool = False,
    immediate_stop: bool = False,
) -> float:
    """NDCG delta of the aggregated top-k, plus the configured penalties."""
    reward = ndcg_after - ndcg_before
    if result_empty:
        reward += cfg.empty_result_penalty
    if immediate_stop:
        reward += cfg.immediate_stop_penalty
    return reward


def top5_accuracy(ranked_docs, judger: RelevanceJudger, k: int = 5) -> int:
    """1 iff any of the top-k documents is relevant."""
    return int(any(relevance(doc, judger) for doc in ranked_docs[:k]))


def em_surrogate(ranked_docs, reader_outputs, judger: RelevanceJudger) -> int:
    """1 iff the rank-1 document's extracted answer span equals a gold answer."""
    if not ranked_docs or not reader_outputs:
        return 0
    span = tuple(reader_outputs[0].answer_span)
    return int(span in judger.answer_sequences)


def headroom(num_relevant_retrieved: int, k: int = 5) -> float:
    """NDCG of the best possible top-k selection from a retrieved pool."""
    m = min(k, num_relevant_retrieved)
    gained = sum(rank_weight(i) for i in range(1, m + 1))
    return gained / weight_sum(k)
