"""searchenv: an interactive BM25 search environment with refinement agents.

Build an index over passage blocks, run structured queries with +/- field
operators, aggregate sessions by a lexical passage scorer, reward with
fixed-denominator NDCG, synthesize improving episodes via constrained
pseudo-relevance feedback, and plan refinements with grammar-guided MCTS.
"""

from .corpus import (
    Corpus,
    Document,
    QaPair,
    RawDocument,
    block_passages,
    ingest_jsonl,
    load_qa_jsonl,
    normalize_text,
)
from .env import EnvConfig, SearchEnv, Session
from .grammar import (
    GrammarState,
    SessionVocabularies,
    VocabTrie,
    WordpieceVocab,
    applicable_rules,
    apply_rule,
    build_session_vocabs,
    derive_refinement,
    load_wordpiece_vocab,
)
from .index import IncrementalQuery, SearchIndex, SearchResult, build_index
from .mcts import (
    GreedyOneLookaheadAgent,
    MctsAgent,
    PlannerConfig,
    heuristic_evaluator,
    plan_step,
)
from .observation import (
    LayeredRecord,
    Observation,
    SessionState,
    aggregate_top5,
    build_observation,
    serialize_flat,
    serialize_layered,
)
from .queries import (
    QueryParseError,
    Refinement,
    StructuredQuery,
    parse_query,
    parse_refinement,
    render_query,
    render_refinement,
)
from .reader import ReaderOutput, read_document
from .rocchio import (
    RocchioConfig,
    constrained_dicts,
    export_training_pairs,
    generate_dataset,
    generate_session,
    ideal_vocab,
    propose_candidates,
)
from .scoring import (
    RelevanceJudger,
    RewardConfig,
    em_surrogate,
    headroom,
    ndcg_at_k,
    ndcg_display,
    relevance,
    step_reward,
    top5_accuracy,
)
from .session import (
    AgentContractError,
    BaselineAgent,
    EpisodeConfig,
    ScriptedAgent,
    combine_records,
    evaluate_dataset,
    run_episode,
    summarize_records,
)
from .synthetic import DeskCorpus, build_desk_corpus

__version__ = "0.1.0"
