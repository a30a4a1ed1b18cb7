"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings.
"""

import itertools
import math
import random
import time

import pytest

from searchenv.corpus import Corpus, RawDocument
from searchenv.env import SearchEnv
from searchenv.grammar import (
    GrammarState,
    applicable_rules,
    apply_rule,
    build_session_vocabs,
    derive_refinement,
    load_wordpiece_vocab,
)
from searchenv.index import B, K1, build_index
from searchenv.mcts import (
    ORACLE_REWARD,
    GreedyOneLookaheadAgent,
    MctsAgent,
    PlannerConfig,
)
from searchenv.observation import Observation, ObservationEntry, SessionState, build_observation, serialize_flat
from searchenv.queries import (
    CONTENTS,
    MINUS,
    OP_TERM,
    PLUS,
    TITLE,
    Refinement,
    StructuredQuery,
    parse_query,
    parse_refinement,
    render_query,
)
from searchenv.reader import ReaderOutput
from searchenv.rocchio import RocchioConfig, constrained_dicts, generate_session, ideal_vocab
from searchenv.scoring import ndcg_display, ndcg_from_pattern, step_reward
from searchenv.session import EpisodeConfig, ScriptedAgent, run_episode
from searchenv.synthetic import build_desk_corpus


def report(name: str, elapsed: float, budget: float) -> None:
    print(f"\nACCEPTANCE {name}: PASS ({elapsed:.2f}s, budget {budget:.0f}s)")
    assert elapsed < budget, f"{name} exceeded its time budget"


# -- shared acceptance fixtures -------------------------------------------------------


@pytest.fixture(scope="module")
def acceptance_desk():
    return build_desk_corpus(n_questions=200, seed=11)


@pytest.fixture(scope="module")
def acceptance_env(acceptance_desk):
    return SearchEnv(build_index(acceptance_desk.corpus))


@pytest.fixture(scope="module")
def rocchio_run(acceptance_desk, acceptance_env):
    """200 generated episodes plus a replay trace with per-step dictionaries."""
    start = time.perf_counter()
    cfg = RocchioConfig()  # top_terms=100, max_searches=100, max_steps=4
    records = []
    replays = []  # per step: refinement, accessible, plus, minus, searches
    for qa in acceptance_desk.qa_pairs:
        record = generate_session(qa, acceptance_env, cfg)
        records.append(record)
        ideal = ideal_vocab(qa.question, qa.answers, acceptance_env.index, cfg.k_star)
        session = acceptance_env.session_for(qa)
        for step in record["steps"]:
            vocabs = build_session_vocabs(session.observation(), acceptance_env.index)
            accessible = vocabs.accessible_terms()
            plus, minus = constrained_dicts(accessible, ideal)
            replays.append(
                {
                    "refinement": parse_refinement(step["refinement"]),
                    "vocabs": vocabs,
                    "plus": plus,
                    "minus": minus,
                    "step": step,
                }
            )
            session.apply(replays[-1]["refinement"])
    elapsed = time.perf_counter() - start
    return {"records": records, "replays": replays, "elapsed": elapsed, "cfg": cfg}


# -- A1: golden NDCG displays ------------------------------------------------------------

GOLDEN = [
    ({1}, "33.9"),
    ({1, 2}, "55.3"),
    ({1, 2, 5}, "68.4"),
    ({1, 2, 4}, "69.9"),
    ({1, 2, 3}, "72.2"),
    ({1, 3, 4, 5}, "78.6"),
    ({1, 2, 4, 5}, "83"),
    ({1, 2, 3, 5}, "85.3"),
    ({1, 2, 3, 4}, "86.8"),
    ({1, 2, 3, 4, 5}, "100"),
]


def test_a1_ndcg_golden_traces():
    start = time.perf_counter()
    displayed = [ndcg_display(ndcg_from_pattern(pattern)) for pattern, _ in GOLDEN]
    assert displayed == [expected for _, expected in GOLDEN]
    # the canonical set named by the golden traces
    assert {float(d) for d in displayed} == {33.9, 55.3, 68.4, 69.9, 72.2, 78.6, 83.0, 85.3, 86.8, 100.0}
    report("A1 ndcg-golden-traces", time.perf_counter() - start, 1.0)


# -- A2: weight-ratio oracle over all 32 patterns ------------------------------------------


def test_a2_ndcg_brute_force():
    start = time.perf_counter()
    weights = [1.0 / math.log2(i + 1) for i in range(1, 6)]
    for bits in itertools.product([0, 1], repeat=5):
        pattern = {i + 1 for i, b in enumerate(bits) if b}
        expected = sum(w for i, w in enumerate(weights, start=1) if i in pattern) / sum(weights)
        assert ndcg_from_pattern(pattern) == pytest.approx(expected, abs=1e-12)
    report("A2 ndcg-32-pattern-oracle", time.perf_counter() - start, 1.0)


# -- A3: BM25 + filter equivalence against a linear-scan oracle ----------------------------


def _oracle_execute(corpus, sq: StructuredQuery, k: int):
    docs = corpus.documents
    n = len(docs)
    tokens = {TITLE: [d.title_tokens for d in docs], CONTENTS: [d.content_tokens for d in docs]}
    avg = {f: sum(len(t) for t in ts) / n for f, ts in tokens.items()}

    def idf(term, fld):
        df = sum(1 for ts in tokens[fld] if term in ts)
        return math.log(1 + (n - df + 0.5) / (df + 0.5))

    def contribution(term, fld, i):
        tf = tokens[fld][i].count(term)
        if tf == 0:
            return 0.0
        norm = tf + K1 * (1 - B + B * len(tokens[fld][i]) / avg[fld])
        return idf(term, fld) * tf * (K1 + 1) / norm

    should = sq.should_terms()
    musts = sq.must_terms()
    must_nots = sq.must_not_terms()
    scored = []
    for i, doc in enumerate(docs):
        in_should = any(t in tokens[CONTENTS][i] or t in tokens[TITLE][i] for t in should)
        in_must = any(t in tokens[f][i] for f, t in musts)
        if not (in_should or in_must):
            continue
        if any(t not in tokens[f][i] for f, t in musts):
            continue
        if any(t in tokens[f][i] for f, t in must_nots):
            continue
        score = 0.0
        for term in sq.base_tokens():
            score += contribution(term, CONTENTS, i) + contribution(term, TITLE, i)
        for r in sq.refinements:
            if r.kind == "or":
                score += contribution(r.term, CONTENTS, i) + contribution(r.term, TITLE, i)
            elif r.kind == OP_TERM and r.op == PLUS:
                score += contribution(r.term, r.field, i)
        scored.append((doc.doc_id, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def test_a3_bm25_filter_oracle():
    start = time.perf_counter()
    rng = random.Random(101)
    words = [f"w{i}" for i in range(60)]
    corpus = Corpus(block_size=40)
    for i in range(500):
        title = " ".join(rng.choices(words, k=rng.randint(1, 4)))
        body = " ".join(rng.choices(words, k=rng.randint(5, 38)))
        corpus.add_article(RawDocument(f"a{i:03d}", title, body))
    assert len(corpus) == 500
    index = build_index(corpus)
    for _ in range(100):
        sq = StructuredQuery(base=" ".join(rng.choices(words, k=rng.randint(1, 4))))
        for _ in range(rng.randint(0, 4)):
            term = rng.choice(words)
            roll = rng.random()
            if roll < 0.35:
                sq = sq.extended(Refinement.op_term(PLUS, rng.choice([TITLE, CONTENTS]), term))
            elif roll < 0.7:
                sq = sq.extended(Refinement.op_term(MINUS, rng.choice([TITLE, CONTENTS]), term))
            else:
                sq = sq.extended(Refinement.or_term(term))
        got = index.execute_query(sq, 10)
        expected = _oracle_execute(corpus, sq, 10)
        assert [d for d, _ in got.hits] == [d for d, _ in expected]
        for (_, a), (_, b) in zip(got.hits, expected):
            assert a == pytest.approx(b, abs=1e-9)
    report("A3 bm25-filter-oracle", time.perf_counter() - start, 10.0)


# -- A4: query language round trip -----------------------------------------------------------

SESSION_QUERIES = [
    'when was korea separated into north and south -(title:"korea") -(title:"north") '
    '-(title:"separated") +(contents:"1945") -(title:"south") +(title:"korean") '
    '-(title:"historical") -(title:"1949") 1950',
    'who cut his hair and lost his strength +(contents:"strength") +(contents:"samson") '
    '+(contents:"long") -(contents:"judah") +(contents:"testament") +(contents:"old") '
    '-(contents:"book") +(contents:"god")',
    'when was korea separated into north and south -(title:"korea")',
    'when was korea separated into north and south -(title:"korea") -(title:"north")',
    'when was korea separated into north and south -(title:"korea") -(title:"north") '
    '+(contents:"1945")',
    'when was korea separated into north and south -(title:"korea") -(title:"north") '
    '+(contents:"1945") -(title:"south")',
]


def test_a4_query_round_trip():
    start = time.perf_counter()
    for query in SESSION_QUERIES:
        assert render_query(parse_query(query)) == query
    report("A4 query-round-trip", time.perf_counter() - start, 1.0)


# -- A5: grammar derivations ----------------------------------------------------------------


def test_a5_grammar_derivation(tmp_path, acceptance_env, rocchio_run):
    start = time.perf_counter()
    # wordpiece derivation: prefix "dial" + suffix "##ects" emits "dialects"
    piece_file = tmp_path / "pieces.txt"
    piece_file.write_text("dial\nkorea\n##ects\n##n\n")
    wordpieces = load_wordpiece_vocab(str(piece_file))
    from searchenv.grammar import SessionVocabularies

    vocabs = SessionVocabularies(
        question_terms=frozenset(),
        title_terms=frozenset(),
        answer_terms=frozenset(),
        body_terms=frozenset(["dialects", "korean"]),
        index=acceptance_env.index,
    )
    gs = GrammarState()
    gs, _ = apply_rule(gs, applicable_rules(gs, vocabs, wordpieces)[0])  # Q => W Q
    body_rule = next(r for r in applicable_rules(gs, vocabs, wordpieces) if r.label == "W=>W[body]")
    gs, _ = apply_rule(gs, body_rule)
    dial = next(r for r in applicable_rules(gs, vocabs, wordpieces) if r.piece == "dial")
    gs, completed = apply_rule(gs, dial)
    assert completed is None and gs.buffer == ("dial",)
    ects = next(r for r in applicable_rules(gs, vocabs, wordpieces) if r.piece == "ects")
    gs, completed = apply_rule(gs, ects)
    assert completed == Refinement.or_term("dialects")

    # every refinement emitted across the 200-episode run re-derives from [Q]
    checked = 0
    for entry in rocchio_run["replays"]:
        rules = derive_refinement(entry["refinement"], entry["vocabs"])
        assert rules is not None, entry["refinement"]
        state = GrammarState()
        completed = None
        for rule in rules:
            state, completed = apply_rule(state, rule)
        assert completed == entry["refinement"]
        checked += 1
    assert checked > 100
    report("A5 grammar-derivation", time.perf_counter() - start, 30.0)


# -- A6: Rocchio soundness ---------------------------------------------------------------------


def test_a6_rocchio_soundness(rocchio_run):
    start = time.perf_counter()
    cfg = rocchio_run["cfg"]
    assert cfg.top_terms == 100 and cfg.max_searches == 100 and cfg.max_steps == 4
    assert len(rocchio_run["records"]) == 200
    for record in rocchio_run["records"]:
        previous = record["initial"]["ndcg"]
        assert len(record["steps"]) <= cfg.max_steps
        for step in record["steps"]:
            assert step["ndcg_before"] == previous
            assert step["ndcg_after"] > step["ndcg_before"]  # strict monotonicity
            assert step["searches_spent"] <= cfg.max_searches
            previous = step["ndcg_after"]
    operator_steps = 0
    for entry in rocchio_run["replays"]:
        refinement = entry["refinement"]
        if refinement.kind == OP_TERM:
            operator_steps += 1
            expected = entry["plus"] if refinement.op == PLUS else entry["minus"]
            assert refinement.term in expected  # constrained-dictionary membership
        else:
            assert refinement.term in entry["vocabs"].accessible_terms()
    assert operator_steps > 0
    elapsed = time.perf_counter() - start + rocchio_run["elapsed"]
    report("A6 rocchio-soundness", elapsed, 300.0)


# -- A7: Rocchio effectiveness ---------------------------------------------------------------


def test_a7_rocchio_effectiveness(acceptance_desk, acceptance_env, rocchio_run):
    start = time.perf_counter()
    from searchenv.scoring import RelevanceJudger, headroom, relevance

    eligible = 0
    improved = 0
    for qa, record in zip(acceptance_desk.qa_pairs, rocchio_run["records"]):
        judger = RelevanceJudger(qa.answers)
        corpus_has_relevant = any(
            relevance(doc, judger) for doc in acceptance_env.corpus.documents
        )
        q0_relevant = sum(
            relevance(acceptance_env.corpus.get(doc_id), judger)
            for doc_id in record["initial"]["result_ids"]
        )
        if headroom(q0_relevant) < 1.0 and corpus_has_relevant:
            eligible += 1
            if record["final_metrics"]["ndcg5"] > record["initial"]["ndcg"]:
                improved += 1
    assert eligible > 0
    rate = improved / eligible
    assert rate >= 0.5, f"improvement rate {rate:.2f} below 0.5 ({improved}/{eligible})"
    report(
        f"A7 rocchio-effectiveness ({improved}/{eligible} improved)",
        time.perf_counter() - start,
        300.0,
    )


# -- A8: reward semantics ------------------------------------------------------------------------


def test_a8_reward_semantics(acceptance_desk, acceptance_env):
    start = time.perf_counter()
    cfg = acceptance_env.config.reward
    # exact penalty values
    assert step_reward(0.0, 0.0, cfg, immediate_stop=True) == -1.0
    assert step_reward(0.25, 0.25, cfg, result_empty=True) == -1.0

    # an episode whose first action is STOP carries exactly the -1
    record = run_episode(acceptance_desk.qa_pairs[0], ScriptedAgent([]), acceptance_env)
    assert record["steps"][-1]["reward"] == -1.0

    # an empty-result step carries exactly the -1 on top of a zero delta
    qa = acceptance_desk.qa_pairs[1]
    session = acceptance_env.session_for(qa)
    nonsense = Refinement.op_term(PLUS, CONTENTS, "zzzunseenzz")
    before = session.ndcg()
    result, _ = session.apply(nonsense)
    assert len(result) == 0
    reward = step_reward(before, session.ndcg(), cfg, result_empty=True)
    assert reward == -1.0

    # telescoping: summed rewards minus penalties equal the NDCG delta on 100
    # randomized scripted episodes
    rng = random.Random(55)
    vocab_terms = sorted(acceptance_env.index.vocabulary())
    for i in range(100):
        qa = acceptance_desk.qa_pairs[rng.randrange(len(acceptance_desk.qa_pairs))]
        refinements = []
        used = set()
        for _ in range(rng.randint(1, 6)):
            term = rng.choice(vocab_terms)
            roll = rng.random()
            if roll < 0.4:
                candidate = term
            elif roll < 0.7:
                candidate = f'+(contents:"{term}")'
            else:
                candidate = f'-(title:"{term}")'
            if candidate not in used:
                used.add(candidate)
                refinements.append(candidate)
        record = run_episode(qa, ScriptedAgent(refinements), acceptance_env, EpisodeConfig(step_cap=10))
        total = 0.0
        for step in record["steps"]:
            if step["refinement"] is None:
                continue  # stop step contributes no delta and no empty penalty
            reward = step["reward"]
            if not step["result_ids"]:
                reward -= cfg.empty_result_penalty  # strip the penalty component
            total += reward
        final = record["steps"][-1]["ndcg_after"] if record["steps"] else record["initial"]["ndcg"]
        assert total == pytest.approx(final - record["initial"]["ndcg"], abs=1e-9)
    report("A8 reward-semantics", time.perf_counter() - start, 30.0)


# -- A9: MCTS dominance ---------------------------------------------------------------------------


def _single_improving_exists(session) -> bool:
    """Exhaustive one-step preview over every accessible-term refinement."""
    vocabs = build_session_vocabs(session.observation(), session.env.index)
    before = session.ndcg()
    for term in sorted(vocabs.accessible_terms()):
        candidates = [
            Refinement.or_term(term),
            Refinement.op_term(PLUS, CONTENTS, term),
            Refinement.op_term(MINUS, CONTENTS, term),
            Refinement.op_term(PLUS, TITLE, term),
            Refinement.op_term(MINUS, TITLE, term),
        ]
        for candidate in candidates:
            result = session.preview_result(candidate)
            if session.ndcg_of_top(session.merged_top(result)) > before:
                return True
    return False


def test_a9_mcts_dominance(acceptance_desk, acceptance_env):
    start = time.perf_counter()
    questions = acceptance_desk.qa_pairs[:100]
    cfg = PlannerConfig(simulations=100, mode=ORACLE_REWARD)
    mcts_scores, greedy_scores = [], []
    baseline, improvable = [], []
    for qa in questions:
        probe = acceptance_env.session_for(qa)
        improvable.append(_single_improving_exists(probe))
        baseline.append(probe.ndcg())
        rec_m = run_episode(qa, MctsAgent(cfg, label="mcts-oracle"), acceptance_env, EpisodeConfig(step_cap=5))
        rec_g = run_episode(
            qa, GreedyOneLookaheadAgent(budget=cfg.simulations), acceptance_env, EpisodeConfig(step_cap=5)
        )
        mcts_scores.append(rec_m["final_metrics"]["ndcg5"])
        greedy_scores.append(rec_g["final_metrics"]["ndcg5"])
    mcts_mean = sum(mcts_scores) / len(mcts_scores)
    greedy_mean = sum(greedy_scores) / len(greedy_scores)
    assert mcts_mean >= greedy_mean, (mcts_mean, greedy_mean)
    for i, has_single in enumerate(improvable):
        if has_single:
            assert mcts_scores[i] >= baseline[i] - 1e-12, (i, baseline[i], mcts_scores[i])
    report(
        f"A9 mcts-dominance (mcts {mcts_mean:.4f} vs greedy {greedy_mean:.4f}, "
        f"{sum(improvable)} improvable)",
        time.perf_counter() - start,
        900.0,
    )


# -- A10: observation contracts ---------------------------------------------------------------------


def test_a10_observation_contracts():
    start = time.perf_counter()
    rng = random.Random(77)
    from searchenv.corpus import Document
    from searchenv.observation import RetrievedDoc

    for _ in range(1000):
        ss = SessionState(question=" ".join(f"q{i}" for i in range(rng.randint(1, 40))))
        for r in range(rng.randint(0, 10)):
            ss.refinements.append(Refinement.op_term(PLUS, CONTENTS, f"term{r}"))
        for d in range(rng.randint(0, 9)):
            tokens = tuple(f"w{i}" for i in range(rng.randint(0, 70)))
            doc = Document(
                doc_id=f"d:{d}",
                title_tokens=tuple(f"t{i}" for i in range(rng.randint(0, 15))),
                content_tokens=tokens,
                article_id="d",
            )
            reader = ReaderOutput(
                doc_id=f"d:{d}",
                window_start=0,
                window_tokens=tokens,
                answer_span=tokens[: rng.randint(0, 5)],
                ps_score=rng.random() * 20 - 10,
            )
            ss.retrieved[f"d:{d}"] = RetrievedDoc(document=doc, reader=reader)
        obs = build_observation(ss)
        assert obs.total_tokens() <= 512
        assert len(obs.entries) <= 5
        for entry in obs.entries:
            assert len(entry.window_tokens) <= 70
            assert len(entry.title_tokens) <= 10
        ps_values = [e.ps_score for e in obs.entries]
        assert ps_values == sorted(ps_values, reverse=True)

    # byte-exact flat template on a fixture mirroring the documented structure
    obs = Observation(
        question_tokens=("how", "many", "parts", "does", "chronicles", "of", "narnia", "have"),
        refinements=(
            Refinement.op_term(PLUS, CONTENTS, "lewis"),
            Refinement.op_term(MINUS, CONTENTS, "battle"),
        ),
        entries=(
            ObservationEntry(
                doc_id="n:0",
                answer_span=("seven",),
                title_tokens=("the", "chronicles", "of", "narnia"),
                window_tokens=("the", "chronicles", "of", "narnia", "is", "a", "series",
                               "of", "seven", "fantasy", "novels"),
                ps_score=2.0,
            ),
            ObservationEntry(
                doc_id="n:1",
                answer_span=("seven",),
                title_tokens=("religion", "in", "the", "chronicles", "of", "narnia"),
                window_tokens=("a", "series", "of", "seven", "fantasy", "novels", "for", "children"),
                ps_score=1.0,
            ),
        ),
    )
    expected = (
        "Query: 'how many parts does chronicles of narnia have'. "
        "Contents must contain: 'lewis'. "
        "Contents cannot contain: 'battle'. "
        "Answer: 'seven'. Title: 'the chronicles of narnia'. "
        "Result: 'the chronicles of narnia is a series of seven fantasy novels'. "
        "Answer: 'seven'. Title: 'religion in the chronicles of narnia'. "
        "Result: 'a series of seven fantasy novels for children'."
    )
    assert serialize_flat(obs) == expected
    report("A10 observation-contracts", time.perf_counter() - start, 30.0)
