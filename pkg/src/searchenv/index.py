"""Two-field inverted index with BM25 ranking and +/- field filters.

Scoring contract: a document's score is the sum of per-term BM25
contributions accumulated in query construction order — base tokens first,
then refinement terms in refinement order (bare terms score against
contents then title; must terms score in their own field; must-not terms
only filter). The incremental evaluator reproduces the same float
operations in the same order, so previews are bit-identical to direct
execution of the extended query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Corpus, Document
from .queries import (
    CONTENTS,
    MINUS,
    OP_TERM,
    OR_TERM,
    PLUS,
    TITLE,
    Refinement,
    StructuredQuery,
    render_query,
)

K1 = 1.2
B = 0.75

FIELDS = (TITLE, CONTENTS)


@dataclass(frozen=True)
class SearchResult:
    query: str
    k: int
    hits: tuple[tuple[str, float], ...]  # (doc_id, score), scores non-increasing

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.hits]

    def __len__(self) -> int:
        return len(self.hits)


class _FieldPostings:
    """Posting lists and length statistics for one field."""

    def __init__(self, field_name: str):
        self.field = field_name
        self.postings: dict[str, dict[int, int]] = {}
        self.lengths: list[int] = []
        self.avg_length = 0.0

    def add_document(self, ordinal: int, tokens: tuple[str, ...]) -> None:
        self.lengths.append(len(tokens))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term, tf in counts.items():
            self.postings.setdefault(term, {})[ordinal] = tf

    def finalize(self) -> None:
        n = len(self.lengths)
        self.avg_length = (sum(self.lengths) / n) if n else 0.0


class SearchIndex:
    """Immutable after build; query execution is read-only."""

    def __init__(self, corpus: Corpus):
        if len(corpus) == 0:
            raise ValueError("cannot index an empty corpus")
        self.corpus = corpus
        self.doc_ids = [doc.doc_id for doc in corpus.documents]
        self._ordinals = {doc_id: i for i, doc_id in enumerate(self.doc_ids)}
        self.n_docs = len(self.doc_ids)
        self._fields = {TITLE: _FieldPostings(TITLE), CONTENTS: _FieldPostings(CONTENTS)}
        for ordinal, doc in enumerate(corpus.documents):
            self._fields[TITLE].add_document(ordinal, doc.title_tokens)
            self._fields[CONTENTS].add_document(ordinal, doc.content_tokens)
        for fp in self._fields.values():
            fp.finalize()
        self._common_terms_cache: dict[int, frozenset[str]] = {}

    # -- statistics ---------------------------------------------------------

    def document(self, ordinal: int) -> Document:
        return self.corpus.documents[ordinal]

    def document_by_id(self, doc_id: str) -> Document:
        return self.corpus.get(doc_id)

    def ordinal_of(self, doc_id: str) -> int:
        return self._ordinals[doc_id]

    def doc_frequency(self, term: str, field_name: str) -> int:
        return len(self._fields[field_name].postings.get(term, ()))

    def idf(self, term: str, field_name: str = CONTENTS) -> float:
        """ln(1 + (N - df + 0.5) / (df + 0.5)); unseen terms use df = 0."""
        df = self.doc_frequency(term, field_name)
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def postings(self, term: str, field_name: str) -> dict[int, int]:
        return self._fields[field_name].postings.get(term, {})

    def field_length(self, ordinal: int, field_name: str) -> int:
        return self._fields[field_name].lengths[ordinal]

    def avg_field_length(self, field_name: str) -> float:
        return self._fields[field_name].avg_length

    def vocabulary(self) -> set[str]:
        terms: set[str] = set()
        for fp in self._fields.values():
            terms.update(fp.postings)
        return terms

    def common_terms(self, count: int = 50) -> frozenset[str]:
        """The `count` highest-document-frequency contents terms (ties lexicographic)."""
        if count not in self._common_terms_cache:
            ranked = sorted(
                self._fields[CONTENTS].postings.items(), key=lambda kv: (-len(kv[1]), kv[0])
            )
            self._common_terms_cache[count] = frozenset(term for term, _ in ranked[:count])
        return self._common_terms_cache[count]

    # -- scoring ------------------------------------------------------------

    def _contribution(self, term: str, field_name: str, ordinal: int) -> float:
        fp = self._fields[field_name]
        tf = fp.postings.get(term, {}).get(ordinal)
        if not tf:
            return 0.0
        norm = tf + K1 * (1.0 - B + B * fp.lengths[ordinal] / fp.avg_length)
        return self.idf(term, field_name) * tf * (K1 + 1.0) / norm

    def scoring_terms(self, sq: StructuredQuery) -> list[tuple[str, str | None]]:
        """Canonical (term, field) scoring sequence; field None means both fields."""
        terms: list[tuple[str, str | None]] = [(t, None) for t in sq.base_tokens()]
        for r in sq.refinements:
            if r.kind == OP_TERM and r.op == PLUS:
                terms.append((r.term, r.field))
            elif r.kind == OR_TERM:
                terms.append((r.term, None))
        return terms

    def bm25_score(self, terms: list[tuple[str, str | None]], ordinal: int) -> float:
        """Sum of BM25 contributions; bare terms score against contents then title."""
        score = 0.0
        for term, fld in terms:
            if fld is None:
                score += self._contribution(term, CONTENTS, ordinal)
                score += self._contribution(term, TITLE, ordinal)
            else:
                score += self._contribution(term, fld, ordinal)
        return score

    # -- query execution ----------------------------------------------------

    def _candidates(self, sq: StructuredQuery) -> set[int]:
        musts = sq.must_terms()
        must_nots = sq.must_not_terms()
        pool: set[int] = set()
        for term in sq.should_terms():
            pool.update(self.postings(term, CONTENTS))
            pool.update(self.postings(term, TITLE))
        for fld, term in musts:
            pool.update(self.postings(term, fld))
        for fld, term in musts:
            pool.intersection_update(self.postings(term, fld))
        for fld, term in must_nots:
            pool.difference_update(self.postings(term, fld))
        return pool

    def execute_query(self, sq: StructuredQuery, k: int) -> SearchResult:
        """Rank the filtered candidate pool by BM25; ties break by ascending doc id.

        An empty candidate pool is a legal empty result. k must be >= 1.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        pool = self._candidates(sq)
        scores = self._accumulate(self.scoring_terms(sq), pool)
        ranked = sorted(pool, key=lambda o: (-scores.get(o, 0.0), self.doc_ids[o]))
        hits = tuple((self.doc_ids[o], scores.get(o, 0.0)) for o in ranked[:k])
        return SearchResult(query=render_query(sq), k=k, hits=hits)

    def _accumulate(self, terms: list[tuple[str, str | None]], pool: set[int]) -> dict[int, float]:
        scores: dict[int, float] = {}
        for term, fld in terms:
            for field_name in (CONTENTS, TITLE) if fld is None else (fld,):
                fp = self._fields[field_name]
                posting = fp.postings.get(term)
                if not posting:
                    continue
                idf = self.idf(term, field_name)
                avg = fp.avg_length
                lengths = fp.lengths
                for ordinal, tf in posting.items():
                    if ordinal not in pool:
                        continue
                    norm = tf + K1 * (1.0 - B + B * lengths[ordinal] / avg)
                    scores[ordinal] = scores.get(ordinal, 0.0) + idf * tf * (K1 + 1.0) / norm
        return scores


def build_index(corpus: Corpus) -> SearchIndex:
    return SearchIndex(corpus)


class IncrementalQuery:
    """Cached evaluation state for one query, for cheap one-refinement previews.

    preview() returns exactly what execute_query would return for the
    extended query (same floats, same ranking) at the cost of the extension
    term's postings instead of a full re-execution.
    """

    def __init__(self, index: SearchIndex, sq: StructuredQuery):
        self.index = index
        self.sq = sq
        self.terms = index.scoring_terms(sq)
        self.musts = sq.must_terms()
        self.must_nots = sq.must_not_terms()
        self.pool = index._candidates(sq)
        self.scores = index._accumulate(self.terms, self.pool)
        self.ranking = sorted(self.pool, key=lambda o: (-self.scores.get(o, 0.0), index.doc_ids[o]))

    def _passes_filters(self, ordinal: int) -> bool:
        for fld, term in self.musts:
            if ordinal not in self.index.postings(term, fld):
                return False
        for fld, term in self.must_nots:
            if ordinal in self.index.postings(term, fld):
                return False
        return True

    def _base_score(self, ordinal: int) -> float:
        if ordinal in self.pool:
            return self.scores.get(ordinal, 0.0)
        return self.index.bm25_score(self.terms, ordinal)

    def _top_k(self, scores: dict[int, float], k: int, query: str) -> SearchResult:
        ranked = sorted(scores, key=lambda o: (-scores[o], self.index.doc_ids[o]))
        hits = tuple((self.index.doc_ids[o], scores[o]) for o in ranked[:k])
        return SearchResult(query=query, k=k, hits=hits)

    def preview(self, refinement: Refinement, k: int) -> SearchResult:
        """Result of the current query extended by one refinement, without mutation."""
        extended = self.sq.extended(refinement)
        query = render_query(extended)
        idx = self.index
        if refinement.kind == OP_TERM and refinement.op == MINUS:
            removed = idx.postings(refinement.term, refinement.field)
            hits = []
            for o in self.ranking:
                if o in removed:
                    continue
                hits.append((idx.doc_ids[o], self.scores.get(o, 0.0)))
                if len(hits) == k:
                    break
            return SearchResult(query=query, k=k, hits=tuple(hits))
        if refinement.kind == OP_TERM:
            # Must term: the pool narrows to its postings (other filters still apply).
            scores: dict[int, float] = {}
            for o in idx.postings(refinement.term, refinement.field):
                if not self._passes_filters(o):
                    continue
                scores[o] = self._base_score(o) + idx._contribution(
                    refinement.term, refinement.field, o
                )
            return self._top_k(scores, k, query)
        # OR term: the pool widens by the term's postings; touched docs gain its
        # contributions (contents then title), untouched docs keep their scores.
        touched: dict[int, float] = {}
        for field_name in (CONTENTS, TITLE):
            for o in idx.postings(refinement.term, field_name):
                if o in touched:
                    continue
                if o not in self.pool and not self._passes_filters(o):
                    continue
                touched[o] = (
                    self._base_score(o)
                    + idx._contribution(refinement.term, CONTENTS, o)
                    + idx._contribution(refinement.term, TITLE, o)
                )
        merged = dict(touched)
        taken = 0
        for o in self.ranking:
            if taken >= k:
                break
            if o not in touched:
                merged[o] = self.scores.get(o, 0.0)
                taken += 1
        return self._top_k(merged, k, query)

    def extended(self, refinement: Refinement) -> "IncrementalQuery":
        return IncrementalQuery(self.index, self.sq.extended(refinement))
