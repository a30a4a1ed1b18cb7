"""Self-supervised episode synthesis via score-improving query refinements.

Each step mines candidate terms from the current observation (pseudo-
relevance feedback), constrains exact-match/exclusion candidates by the
result vocabulary of the "ideal" query (question + answer), and greedily
accepts a strictly NDCG-improving refinement within a fixed search budget.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import QaPair
from .env import SearchEnv, Session
from .grammar import SessionVocabularies, build_session_vocabs
from .observation import serialize_flat
from .queries import (
    CONTENTS,
    MINUS,
    PLUS,
    TITLE,
    Refinement,
    StructuredQuery,
    render_refinement,
)
from .scoring import ndcg_display

BEST_OF_BUDGET = "best_of_budget"
FIRST_IMPROVING = "first_improving"


@dataclass(frozen=True)
class RocchioConfig:
    top_terms: int = 100  # candidate terms kept per step, by descending IDF
    max_searches: int = 100  # search budget per step
    max_steps: int = 4
    k_star: int = 5  # result depth of the ideal query
    acceptance: str = BEST_OF_BUDGET

    def __post_init__(self):
        if min(self.top_terms, self.max_searches, self.max_steps, self.k_star) < 1:
            raise ValueError("all Rocchio limits must be >= 1")
        if self.acceptance not in (BEST_OF_BUDGET, FIRST_IMPROVING):
            raise ValueError(f"unknown acceptance mode {self.acceptance!r}")


@dataclass(frozen=True)
class RocchioStep:
    refinement: Refinement
    ndcg_before: float
    ndcg_after: float
    searches_spent: int


def ideal_vocab(question: str, answers, index, k_star: int = 5) -> frozenset[str]:
    """Terms of the top results for the question concatenated with its first answer."""
    answer = answers[0] if answers else ""
    ideal_query = StructuredQuery(base=f"{question} {answer}".strip())
    result = index.execute_query(ideal_query, k_star)
    terms: set[str] = set()
    for doc_id, _ in result.hits:
        doc = index.document_by_id(doc_id)
        terms.update(doc.title_tokens)
        terms.update(doc.content_tokens)
    return frozenset(terms)


def constrained_dicts(
    accessible: frozenset[str], ideal: frozenset[str]
) -> tuple[frozenset[str], frozenset[str]]:
    """(terms promotable to exact match, terms eligible for exclusion)."""
    return accessible & ideal, accessible - ideal


def propose_candidates(
    session: Session,
    vocabs: SessionVocabularies,
    dicts: tuple[frozenset[str], frozenset[str]],
    cfg: RocchioConfig,
) -> list[Refinement]:
    """Ordered candidate refinements for one step.

    Accessible terms are ranked by descending contents IDF; each term
    yields a bare OR candidate, plus +/- operator candidates where the
    constrained dictionaries allow them (title operators only when the term
    occurs in a current top-5 title). Already-applied refinements are
    skipped.
    """
    promotable, excludable = dicts
    applied = set(session.state.refinements)
    index = session.env.index
    ranked = sorted(
        vocabs.accessible_terms(), key=lambda t: (-index.idf(t, CONTENTS), t)
    )[: cfg.top_terms]
    candidates = []

    def add(refinement: Refinement) -> None:
        if refinement not in applied:
            candidates.append(refinement)

    for term in ranked:
        add(Refinement.or_term(term))
        in_title = term in vocabs.title_terms
        if term in promotable:
            add(Refinement.op_term(PLUS, CONTENTS, term))
            if in_title:
                add(Refinement.op_term(PLUS, TITLE, term))
        if term in excludable:
            add(Refinement.op_term(MINUS, CONTENTS, term))
            if in_title:
                add(Refinement.op_term(MINUS, TITLE, term))
    return candidates


def _best_candidate(
    session: Session, candidates: list[Refinement], ndcg_before: float, cfg: RocchioConfig
) -> tuple[Refinement | None, float, int]:
    """Evaluate candidates in order within the search budget; pick the winner."""
    best: Refinement | None = None
    best_after = ndcg_before
    spent = 0
    for candidate in candidates[: cfg.max_searches]:
        result = session.preview_result(candidate)
        spent += 1
        ndcg_after = session.ndcg_of_top(session.merged_top(result))
        if ndcg_after > best_after:
            best, best_after = candidate, ndcg_after
            if cfg.acceptance == FIRST_IMPROVING:
                break
    return best, best_after, spent


def generate_session(qa: QaPair, env: SearchEnv, cfg: RocchioConfig | None = None) -> dict:
    """Produce one synthetic episode record with strictly increasing NDCG steps."""
    cfg = cfg or RocchioConfig()
    session = env.session_for(qa)
    ideal = ideal_vocab(qa.question, qa.answers, env.index, cfg.k_star)
    record = {
        "question": qa.question,
        "answers": list(qa.answers),
        "agent": "rocchio",
        "step_cap": cfg.max_steps,
        "k": env.config.k,
        "initial": {
            "query_string": session.query_string(),
            "result_ids": session.state.results[0].doc_ids(),
            "ndcg": session.ndcg(),
        },
        "steps": [],
        "final_metrics": None,
        "stopped": False,
    }
    for _ in range(cfg.max_steps):
        obs = session.observation()
        state_flat = serialize_flat(obs)
        vocabs = build_session_vocabs(obs, env.index)
        dicts = constrained_dicts(vocabs.accessible_terms(), ideal)
        candidates = propose_candidates(session, vocabs, dicts, cfg)
        ndcg_before = session.ndcg()
        chosen, ndcg_after, spent = _best_candidate(session, candidates, ndcg_before, cfg)
        if chosen is None:
            break
        result, _ = session.apply(chosen)
        record["steps"].append(
            {
                "query_string": session.query_string(),
                "refinement": render_refinement(chosen),
                "state": state_flat,
                "result_ids": result.doc_ids(),
                "reward": ndcg_after - ndcg_before,
                "ndcg_before": ndcg_before,
                "ndcg_after": ndcg_after,
                "searches_spent": spent,
            }
        )
    record["final_metrics"] = session.final_metrics()
    record["final_metrics"]["ndcg5_display"] = ndcg_display(record["final_metrics"]["ndcg5"])
    return record


def generate_dataset(qa_pairs, env: SearchEnv, cfg: RocchioConfig | None = None) -> list[dict]:
    return [generate_session(qa, env, cfg) for qa in qa_pairs]


def export_training_pairs(records) -> list[dict]:
    """(flat state, target clause) pairs, one per refinement step."""
    from .observation import flat_clause
    from .queries import parse_refinement

    pairs = []
    for record in records:
        for step in record["steps"]:
            if not step.get("refinement"):
                continue
            if step.get("state") is None:
                raise ValueError("episode record has no stored states; re-run with states")
            pairs.append(
                {
                    "input": step["state"],
                    "target": flat_clause(parse_refinement(step["refinement"])),
                }
            )
    return pairs
