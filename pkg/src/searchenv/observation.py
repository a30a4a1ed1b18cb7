"""Session-level aggregation and the two observation serializations.

A session accumulates every retrieved document across steps; the agent
observes the five best by PS score as (answer, title, window) triples,
serialized either as one flat string or as a layered token record with
type/IDF/PS annotations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Document, normalize_text
from .index import SearchResult
from .queries import CONTENTS, MINUS, OP_TERM, OR_TERM, PLUS, TITLE, Refinement
from .reader import ReaderOutput

MAX_OBSERVATION_TOKENS = 512
MAX_TITLE_TOKENS = 10
TOP_K = 5

CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MARKER_TOKENS = {PLUS: "[pos]", MINUS: "[neg]", TITLE: "[title]", CONTENTS: "[content]"}


@dataclass
class RetrievedDoc:
    document: Document
    reader: ReaderOutput


@dataclass
class SessionState:
    """Per-episode aggregation; the retrieved pool only ever grows."""

    question: str
    answers: tuple[str, ...] | None = None
    refinements: list[Refinement] = field(default_factory=list)
    retrieved: dict[str, RetrievedDoc] = field(default_factory=dict)
    results: list[SearchResult] = field(default_factory=list)

    @property
    def question_tokens(self) -> list[str]:
        return normalize_text(self.question)

    @property
    def step(self) -> int:
        return len(self.refinements)

    def last_result(self) -> SearchResult | None:
        return self.results[-1] if self.results else None


def aggregate_top5(ss: SessionState, k: int = TOP_K) -> list[tuple[str, float]]:
    """All retrieved docs ranked by descending PS score (doc-id ties ascending), top k."""
    ranked = sorted(ss.retrieved.items(), key=lambda item: (-item[1].reader.ps_score, item[0]))
    return [(doc_id, rd.reader.ps_score) for doc_id, rd in ranked[:k]]


def top5_docs(ss: SessionState, k: int = TOP_K) -> list[RetrievedDoc]:
    return [ss.retrieved[doc_id] for doc_id, _ in aggregate_top5(ss, k)]


@dataclass(frozen=True)
class ObservationEntry:
    doc_id: str
    answer_span: tuple[str, ...]
    title_tokens: tuple[str, ...]
    window_tokens: tuple[str, ...]
    ps_score: float


@dataclass(frozen=True)
class Observation:
    question_tokens: tuple[str, ...]
    refinements: tuple[Refinement, ...]
    entries: tuple[ObservationEntry, ...]

    def total_tokens(self) -> int:
        total = len(self.question_tokens)
        for r in self.refinements:
            total += len(_refinement_tokens(r))
        for e in self.entries:
            total += len(e.answer_span) + len(e.title_tokens) + len(e.window_tokens)
        return total


def _refinement_tokens(r: Refinement) -> list[str]:
    """Marker-token form of one refinement, as used in the layered record."""
    if r.kind == OP_TERM:
        return [MARKER_TOKENS[r.op], MARKER_TOKENS[r.field], r.term]
    if r.kind == OR_TERM:
        return [r.term]
    return []


def build_observation(
    ss: SessionState,
    k: int = TOP_K,
    max_tokens: int = MAX_OBSERVATION_TOKENS,
    max_title: int = MAX_TITLE_TOKENS,
) -> Observation:
    """Assemble the top-k view; over-long observations lose window tokens last-first."""
    entries = []
    for rd in top5_docs(ss, k):
        entries.append(
            ObservationEntry(
                doc_id=rd.document.doc_id,
                answer_span=rd.reader.answer_span,
                title_tokens=rd.document.title_tokens[:max_title],
                window_tokens=rd.reader.window_tokens,
                ps_score=rd.reader.ps_score,
            )
        )
    obs = Observation(
        question_tokens=tuple(ss.question_tokens),
        refinements=tuple(ss.refinements),
        entries=tuple(entries),
    )
    overflow = obs.total_tokens() - max_tokens
    if overflow > 0:
        trimmed = list(obs.entries)
        for i in range(len(trimmed) - 1, -1, -1):
            if overflow <= 0:
                break
            entry = trimmed[i]
            cut = min(overflow, len(entry.window_tokens))
            trimmed[i] = ObservationEntry(
                doc_id=entry.doc_id,
                answer_span=entry.answer_span,
                title_tokens=entry.title_tokens,
                window_tokens=entry.window_tokens[: len(entry.window_tokens) - cut],
                ps_score=entry.ps_score,
            )
            overflow -= cut
        obs = Observation(obs.question_tokens, obs.refinements, tuple(trimmed))
    return obs


# -- flat string form ---------------------------------------------------------


def serialize_flat(obs: Observation) -> str:
    """Single-line template form: query clause, operator clauses, result triples.

    Operator clauses are grouped +contents, -contents, +title, -title (each
    group in refinement order); bare OR terms extend the query clause.
    """
    query_tokens = list(obs.question_tokens)
    query_tokens.extend(r.term for r in obs.refinements if r.kind == OR_TERM)
    pieces = [f"Query: '{' '.join(query_tokens)}'."]
    clause_by_group = {
        (PLUS, CONTENTS): "Contents must contain",
        (MINUS, CONTENTS): "Contents cannot contain",
        (PLUS, TITLE): "Title must contain",
        (MINUS, TITLE): "Title cannot contain",
    }
    for group, clause in clause_by_group.items():
        for r in obs.refinements:
            if r.kind == OP_TERM and (r.op, r.field) == group:
                pieces.append(f"{clause}: '{r.term}'.")
    for e in obs.entries:
        pieces.append(f"Answer: '{' '.join(e.answer_span)}'.")
        pieces.append(f"Title: '{' '.join(e.title_tokens)}'.")
        pieces.append(f"Result: '{' '.join(e.window_tokens)}'.")
    return " ".join(pieces)


def flat_clause(r: Refinement) -> str:
    """Training-target form of one refinement (clause without trailing period)."""
    if r.kind == OP_TERM:
        must = "must contain" if r.op == PLUS else "cannot contain"
        fld = "Contents" if r.field == CONTENTS else "Title"
        return f"{fld} {must}: '{r.term}'"
    if r.kind == OR_TERM:
        return r.term
    return ""


# -- layered record form ------------------------------------------------------


@dataclass(frozen=True)
class LayeredRecord:
    tokens: tuple[str, ...]
    types: tuple[str, ...]
    idf: tuple[float, ...]
    ps: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "types": list(self.types),
            "idf": list(self.idf),
            "ps": list(self.ps),
        }


def serialize_layered(obs: Observation, index, stop_terms: frozenset[str] | None = None) -> LayeredRecord:
    """Aligned token/type/IDF/PS sequences for representation-learning consumers.

    IDF is zeroed for separators, refinement markers and stop-list terms;
    PS is zero outside document segments and equals the owning document's
    score inside them (separators included).
    """
    if stop_terms is None:
        stop_terms = index.common_terms(50)
    tokens: list[str] = []
    types: list[str] = []
    idf: list[float] = []
    ps: list[float] = []

    def emit(token: str, type_label: str, idf_value: float, ps_value: float) -> None:
        tokens.append(token)
        types.append(type_label)
        idf.append(idf_value)
        ps.append(ps_value)

    def term_idf(term: str) -> float:
        if term in stop_terms:
            return 0.0
        return index.idf(term, CONTENTS)

    emit(CLS_TOKEN, "CLS", 0.0, 0.0)
    for tok in obs.question_tokens:
        emit(tok, "query", term_idf(tok), 0.0)
    emit(SEP_TOKEN, "SEP", 0.0, 0.0)
    if obs.refinements:
        for r in obs.refinements:
            for tok in _refinement_tokens(r):
                is_marker = tok.startswith("[")
                emit(tok, "tree", 0.0 if is_marker else term_idf(tok), 0.0)
        emit(SEP_TOKEN, "SEP", 0.0, 0.0)
    for e in obs.entries:
        score = e.ps_score
        for tok in e.answer_span:
            emit(tok, "answer", term_idf(tok), score)
        emit(SEP_TOKEN, "SEP", 0.0, score)
        for tok in e.window_tokens:
            emit(tok, "context", term_idf(tok), score)
        emit(SEP_TOKEN, "SEP", 0.0, score)
        for tok in e.title_tokens:
            emit(tok, "title", term_idf(tok), score)
        emit(SEP_TOKEN, "SEP", 0.0, score)
    return LayeredRecord(tuple(tokens), tuple(types), tuple(idf), tuple(ps))
