import itertools
import math

import pytest

from searchenv.corpus import Document
from searchenv.reader import ReaderOutput
from searchenv.scoring import (
    RelevanceJudger,
    RewardConfig,
    em_surrogate,
    headroom,
    ndcg_at_k,
    ndcg_display,
    ndcg_from_pattern,
    relevance,
    step_reward,
    top5_accuracy,
)


def doc(tokens, doc_id="d:0", title=()):
    return Document(doc_id=doc_id, title_tokens=tuple(title), content_tokens=tuple(tokens), article_id="d")


# Golden display values for known relevance patterns, verified against the
# independent weight-ratio oracle below.
GOLDEN_PATTERNS = [
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


def oracle_ndcg(pattern, k=5):
    weights = [1.0 / math.log2(i + 1) for i in range(1, k + 1)]
    gained = sum(w for i, w in zip(range(1, k + 1), weights) if i in pattern)
    return gained / sum(weights)


@pytest.mark.parametrize("pattern,display", GOLDEN_PATTERNS)
def test_golden_ndcg_displays(pattern, display):
    value = ndcg_from_pattern(pattern)
    assert value == pytest.approx(oracle_ndcg(pattern), abs=1e-12)
    assert ndcg_display(value) == display


def test_all_32_patterns_match_oracle():
    for bits in itertools.product([0, 1], repeat=5):
        pattern = {i + 1 for i, b in enumerate(bits) if b}
        assert ndcg_from_pattern(pattern) == pytest.approx(oracle_ndcg(pattern), abs=1e-12)


def test_display_truncates_not_rounds():
    assert ndcg_display(0.72273) == "72.2"
    assert ndcg_display(1.0) == "100"
    assert ndcg_display(0.0) == "0"


def test_ndcg_with_docs():
    judger = RelevanceJudger(["1945"])
    ranked = [doc(["x", "1945"]), doc(["nothing"]), doc(["1945"])]
    # relevant at ranks 1 and 3
    assert ndcg_at_k(ranked, judger, 5) == pytest.approx(oracle_ndcg({1, 3}), abs=1e-12)


def test_ndcg_short_list_positions_contribute_zero():
    judger = RelevanceJudger(["a"])
    assert ndcg_at_k([doc(["a"])], judger, 5) == pytest.approx(oracle_ndcg({1}), abs=1e-12)


def test_ndcg_no_relevant():
    judger = RelevanceJudger(["a"])
    assert ndcg_at_k([doc(["b"])] * 5, judger, 5) == 0.0


# -- relevance -----------------------------------------------------------------


def test_relevance_single_token():
    judger = RelevanceJudger(["1945"])
    assert relevance(doc(["in", "1945", "korea"]), judger) == 1


def test_relevance_empty_doc():
    judger = RelevanceJudger(["1945"])
    assert relevance(doc([]), judger) == 0


def test_relevance_title_excluded():
    judger = RelevanceJudger(["1945"])
    assert relevance(doc(["other"], title=["1945"]), judger) == 0


def test_relevance_multi_token_contiguity():
    judger = RelevanceJudger(["october 1 2012"])
    contiguous = doc(["on", "october", "1", "2012", "it"])
    scattered = doc(["october", "x", "1", "y", "2012"])
    assert relevance(contiguous, judger) == 1
    assert relevance(scattered, judger) == 0

    # brute-force scan oracle over every offset
    def oracle(tokens, needle):
        return int(any(tuple(tokens[i : i + len(needle)]) == needle for i in range(len(tokens))))

    for d in (contiguous, scattered):
        assert relevance(d, judger) == oracle(d.content_tokens, ("october", "1", "2012"))


def test_relevance_normalizes_answers():
    judger = RelevanceJudger(["Samson!"])
    assert relevance(doc(["delilah", "seduced", "samson"]), judger) == 1


# -- rewards ---------------------------------------------------------------------


def test_step_reward_unchanged_is_zero():
    cfg = RewardConfig()
    assert step_reward(0.5, 0.5, cfg) == 0.0


def test_step_reward_delta():
    cfg = RewardConfig()
    before = oracle_ndcg({1})
    after = oracle_ndcg({1, 2})
    assert step_reward(before, after, cfg) == pytest.approx(after - before, abs=1e-12)
    assert after - before == pytest.approx(0.2139861, abs=1e-6)


def test_immediate_stop_penalty():
    cfg = RewardConfig()
    assert step_reward(0.0, 0.0, cfg, immediate_stop=True) == -1.0


def test_empty_result_penalty():
    cfg = RewardConfig()
    assert step_reward(0.3, 0.3, cfg, result_empty=True) == -1.0


def test_reward_config_validation():
    with pytest.raises(ValueError):
        RewardConfig(k=0)
    with pytest.raises(ValueError):
        RewardConfig(empty_result_penalty=0.5)
    with pytest.raises(ValueError):
        RewardConfig(discount=0.0)


# -- top5 / EM / headroom -----------------------------------------------------------


def reader_output(span, doc_id="d:0"):
    return ReaderOutput(doc_id=doc_id, window_start=0, window_tokens=tuple(span), answer_span=tuple(span), ps_score=1.0)


def test_top5_and_em_definitions():
    judger = RelevanceJudger(["gold"])
    ranked = [doc(["x"]), doc(["y"]), doc(["z"]), doc(["gold"]), doc(["w"])]
    readers = [reader_output(["x"])] + [reader_output(["gold"])] * 4
    assert top5_accuracy(ranked, judger) == 1
    assert em_surrogate(ranked, readers, judger) == 0  # rank-1 span is not the answer


def test_em_normalization():
    judger = RelevanceJudger(["Samson"])
    ranked = [doc(["samson"])]
    readers = [reader_output(["samson"])]
    assert em_surrogate(ranked, readers, judger) == 1


def test_empty_top5():
    judger = RelevanceJudger(["a"])
    assert top5_accuracy([], judger) == 0
    assert em_surrogate([], [], judger) == 0


def test_headroom_values():
    assert headroom(2) == pytest.approx(oracle_ndcg({1, 2}), abs=1e-12)
    assert headroom(0) == 0.0
    assert headroom(5) == 1.0
    assert headroom(9) == 1.0
