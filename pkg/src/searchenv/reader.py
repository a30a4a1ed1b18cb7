"""Lexical reading surrogate: best answer window, answer span, PS score.

Stands in for a learned reader/passage-scorer so the whole pipeline runs
self-contained; anything implementing read_document's signature can replace
it. Fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Document, normalize_text
from .queries import CONTENTS

DEFAULT_WINDOW = 70
MAX_SPAN = 5
PS_BM25_WEIGHT = 0.1


@dataclass(frozen=True)
class ReaderOutput:
    doc_id: str
    window_start: int
    window_tokens: tuple[str, ...]
    answer_span: tuple[str, ...]
    ps_score: float


def _best_window(match_scores: list[float], window_size: int) -> int:
    """Start of the contiguous window with the highest score sum; leftmost wins ties."""
    n = len(match_scores)
    if n <= window_size:
        return 0
    current = sum(match_scores[:window_size])
    best, best_start = current, 0
    for start in range(1, n - window_size + 1):
        current += match_scores[start + window_size - 1] - match_scores[start - 1]
        if current > best + 1e-12:
            best, best_start = current, start
    return best_start


def _best_span(window: tuple[str, ...], question_tokens: set[str], idf_of) -> tuple[str, ...]:
    """Highest-mean-IDF run of 1..MAX_SPAN consecutive non-question tokens.

    Ties break leftmost, then shortest.
    """
    best_mean = None
    best = ()
    n = len(window)
    i = 0
    while i < n:
        if window[i] in question_tokens:
            i += 1
            continue
        j = i
        while j < n and window[j] not in question_tokens:
            j += 1
        for start in range(i, j):
            total = 0.0
            for end in range(start, min(start + MAX_SPAN, j)):
                total += idf_of(window[end])
                mean = total / (end - start + 1)
                if best_mean is None or mean > best_mean + 1e-12:
                    best_mean = mean
                    best = window[start : end + 1]
        i = j
    return tuple(best)


def read_document(index, doc: Document, question: str, window_size: int = DEFAULT_WINDOW) -> ReaderOutput:
    """Locate the best question-matching window and a candidate answer span.

    The PS score is the window's summed question-term IDF plus a small BM25
    tie-breaker, used only for ranking. Empty documents sink to the bottom
    with a -inf sentinel.
    """
    if window_size < 10:
        raise ValueError("window_size must be >= 10")
    tokens = doc.content_tokens
    if not tokens:
        return ReaderOutput(doc.doc_id, 0, (), (), float("-inf"))
    question_tokens = set(normalize_text(question))
    idf_cache: dict[str, float] = {}

    def idf_of(term: str) -> float:
        if term not in idf_cache:
            idf_cache[term] = index.idf(term, CONTENTS)
        return idf_cache[term]

    match_scores = [idf_of(t) if t in question_tokens else 0.0 for t in tokens]
    start = _best_window(match_scores, window_size)
    window = tuple(tokens[start : start + window_size])
    window_sum = sum(match_scores[start : start + window_size])
    span = _best_span(window, question_tokens, idf_of)
    ordinal = index.ordinal_of(doc.doc_id)
    bm25 = index.bm25_score([(t, CONTENTS) for t in normalize_text(question)], ordinal)
    return ReaderOutput(
        doc_id=doc.doc_id,
        window_start=start,
        window_tokens=window,
        answer_span=span,
        ps_score=window_sum + PS_BM25_WEIGHT * bm25,
    )
