"""Search environment: executes queries, reads results, maintains sessions.

This is the shared machinery behind every agent: a Session owns one
episode's state, supports applying a refinement for real, and supports
cheap hypothetical evaluation of a candidate refinement (same floats as a
real application, nothing mutated).
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Corpus, QaPair
from .index import IncrementalQuery, SearchIndex, SearchResult
from .observation import (
    MAX_OBSERVATION_TOKENS,
    MAX_TITLE_TOKENS,
    Observation,
    RetrievedDoc,
    SessionState,
    aggregate_top5,
    build_observation,
    top5_docs,
)
from .queries import Refinement, StructuredQuery, render_query
from .reader import DEFAULT_WINDOW, read_document
from .scoring import (
    RelevanceJudger,
    RewardConfig,
    em_surrogate,
    headroom,
    ndcg_at_k,
    rank_weight,
    relevance,
    top5_accuracy,
    weight_sum,
)


@dataclass(frozen=True)
class EnvConfig:
    k: int = 5
    window_size: int = DEFAULT_WINDOW
    max_obs_tokens: int = MAX_OBSERVATION_TOKENS
    max_title_tokens: int = MAX_TITLE_TOKENS
    reward: RewardConfig = RewardConfig()


def merge_top(base_top, result: SearchResult, ps_of, k: int) -> list[tuple[str, float]]:
    """Top-k by PS of a pool's current top-k merged with a result's documents.

    Only the incumbent top-k matters: documents outside it can never enter
    the merged top-k.
    """
    merged: dict[str, float] = dict(base_top[:k])
    for doc_id, _ in result.hits:
        if doc_id not in merged:
            merged[doc_id] = ps_of(doc_id)
    ranked = sorted(merged.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


class SearchEnv:
    """Immutable bundle of index + configuration; sessions are per-episode."""

    def __init__(self, index: SearchIndex, config: EnvConfig | None = None):
        self.index = index
        self.config = config or EnvConfig()

    @property
    def corpus(self) -> Corpus:
        return self.index.corpus

    def new_session(self, question: str, answers=None) -> "Session":
        if not question or not question.strip():
            raise ValueError("question must be non-empty")
        return Session(self, question, answers)

    def session_for(self, qa: QaPair) -> "Session":
        return self.new_session(qa.question, qa.answers)


class Session:
    """One episode: the evolving query, the retrieved pool, cached readings."""

    def __init__(self, env: SearchEnv, question: str, answers=None):
        self.env = env
        self.state = SessionState(
            question=question, answers=tuple(answers) if answers else None
        )
        self.judger = RelevanceJudger(answers) if answers else None
        self._reader_cache: dict[str, RetrievedDoc] = {}
        self._relevance_cache: dict[str, int] = {}
        self._result_memo: dict[str, SearchResult] = {}
        self.engine_calls = 0
        self.preview_calls = 0
        self._incremental: IncrementalQuery | None = None
        self._execute_current()

    # -- query bookkeeping ----------------------------------------------------

    def current_query(self) -> StructuredQuery:
        return StructuredQuery(base=self.state.question, refinements=tuple(self.state.refinements))

    def query_string(self) -> str:
        return render_query(self.current_query())

    def incremental(self) -> IncrementalQuery:
        if self._incremental is None:
            self._incremental = IncrementalQuery(self.env.index, self.current_query())
        return self._incremental

    # -- execution --------------------------------------------------------------

    def execute(self, sq: StructuredQuery) -> SearchResult:
        """Run a query through the engine, memoized by its rendered string."""
        key = render_query(sq)
        if key not in self._result_memo:
            self._result_memo[key] = self.env.index.execute_query(sq, self.env.config.k)
            self.engine_calls += 1
        return self._result_memo[key]

    def _execute_current(self) -> tuple[SearchResult, list[str]]:
        result = self.execute(self.current_query())
        self.state.results.append(result)
        new_ids = []
        for doc_id, _ in result.hits:
            if doc_id not in self.state.retrieved:
                self.state.retrieved[doc_id] = self.read(doc_id)
                new_ids.append(doc_id)
        return result, new_ids

    def read(self, doc_id: str) -> RetrievedDoc:
        if doc_id not in self._reader_cache:
            doc = self.env.corpus.get(doc_id)
            output = read_document(
                self.env.index, doc, self.state.question, self.env.config.window_size
            )
            self._reader_cache[doc_id] = RetrievedDoc(document=doc, reader=output)
        return self._reader_cache[doc_id]

    def ps_of(self, doc_id: str) -> float:
        return self.read(doc_id).reader.ps_score

    def apply(self, refinement: Refinement) -> tuple[SearchResult, list[str]]:
        """Apply a refinement for real: execute, grow the pool, advance the query."""
        if refinement.is_stop:
            raise ValueError("STOP is not an executable refinement")
        self.state.refinements.append(refinement)
        self._incremental = None
        return self._execute_current()

    # -- hypothetical evaluation -------------------------------------------------

    def preview_result(self, refinement: Refinement) -> SearchResult:
        """Engine result of the current query plus one refinement; no mutation."""
        result = self.incremental().preview(refinement, self.env.config.k)
        self.preview_calls += 1
        return result

    def current_top(self) -> list[tuple[str, float]]:
        return aggregate_top5(self.state, self.env.config.k)

    def merged_top(self, result: SearchResult) -> list[tuple[str, float]]:
        return merge_top(self.current_top(), result, self.ps_of, self.env.config.k)

    # -- measurement -----------------------------------------------------------

    def relevant(self, doc_id: str) -> int:
        if self.judger is None:
            raise ValueError("session has no answers")
        if doc_id not in self._relevance_cache:
            doc = self.env.corpus.get(doc_id)
            self._relevance_cache[doc_id] = relevance(doc, self.judger)
        return self._relevance_cache[doc_id]

    def ndcg_of_top(self, top) -> float:
        """NDCG of an explicit (doc_id, ps) ranking, using the relevance cache."""
        k = self.env.config.k
        gained = 0.0
        for i, (doc_id, _) in enumerate(top[:k], start=1):
            if self.relevant(doc_id):
                gained += rank_weight(i)
        return gained / weight_sum(k)

    def ndcg(self) -> float | None:
        if self.judger is None:
            return None
        return self.ndcg_of_top(self.current_top())

    # -- views -------------------------------------------------------------------

    def observation(self) -> Observation:
        cfg = self.env.config
        return build_observation(self.state, cfg.k, cfg.max_obs_tokens, cfg.max_title_tokens)

    def final_metrics(self) -> dict:
        cfg = self.env.config
        if self.judger is None:
            return {"ndcg5": None, "top5": None, "em": None, "headroom": None}
        top = top5_docs(self.state, cfg.k)
        docs = [rd.document for rd in top]
        readers = [rd.reader for rd in top]
        relevant_retrieved = sum(self.relevant(doc_id) for doc_id in self.state.retrieved)
        return {
            "ndcg5": ndcg_at_k(docs, self.judger, cfg.k),
            "top5": top5_accuracy(docs, self.judger, cfg.k),
            "em": em_surrogate(docs, readers, self.judger),
            "headroom": headroom(relevant_retrieved, cfg.k),
        }
