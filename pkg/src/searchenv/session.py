"""Episode loop for any agent, episode records, dataset evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import QaPair, normalize_text
from .env import SearchEnv, Session
from .observation import serialize_flat
from .queries import Refinement, render_refinement
from .scoring import ndcg_display, step_reward

DEFAULT_STEP_CAP = 10

WH_WORDS = ("who", "what", "when", "where", "how")


class AgentContractError(RuntimeError):
    """An agent proposed something the episode contract forbids."""


class BaselineAgent:
    """Stops immediately: the episode metrics are plain retrieval + PS reranking."""

    label = "baseline"

    def begin_episode(self, session: Session) -> None:
        pass

    def propose(self, session: Session) -> Refinement:
        return Refinement.stop()


class ScriptedAgent:
    """Replays a fixed sequence of rendered refinements, then stops."""

    def __init__(self, refinement_strings, label: str = "scripted"):
        self.label = label
        self._strings = list(refinement_strings)
        self._cursor = 0

    def begin_episode(self, session: Session) -> None:
        self._cursor = 0

    def propose(self, session: Session) -> Refinement:
        from .queries import parse_refinement

        if self._cursor >= len(self._strings):
            return Refinement.stop()
        refinement = parse_refinement(self._strings[self._cursor])
        self._cursor += 1
        return refinement


@dataclass(frozen=True)
class EpisodeConfig:
    step_cap: int = DEFAULT_STEP_CAP
    stop_on_no_new_docs: bool = False
    record_states: bool = True


class EpisodeDriver:
    """Stepwise episode execution building the canonical record.

    run_episode drives it with an in-process agent; the foreign bindings
    drive it one refinement string at a time. Both paths produce
    byte-identical records for identical action sequences.
    """

    def __init__(self, qa: QaPair, env: SearchEnv, cfg: EpisodeConfig | None = None, agent_label: str = "external"):
        self.cfg = cfg or EpisodeConfig()
        self.env = env
        self.session = env.session_for(qa) if qa.answers else env.new_session(qa.question)
        self.done = False
        self.record = {
            "question": qa.question,
            "answers": list(qa.answers) if qa.answers else None,
            "agent": agent_label,
            "step_cap": self.cfg.step_cap,
            "k": env.config.k,
            "initial": {
                "query_string": self.session.query_string(),
                "result_ids": self.session.state.results[0].doc_ids(),
                "ndcg": self.session.ndcg(),
            },
            "steps": [],
            "final_metrics": None,
            "stopped": False,
        }

    def _state_flat(self) -> str | None:
        if not self.cfg.record_states:
            return None
        return serialize_flat(self.session.observation())

    def record_stop(self) -> float | None:
        state_flat = self._state_flat()
        immediate = len(self.session.state.refinements) == 0
        ndcg_now = self.session.ndcg()
        reward = None
        if self.session.judger:
            reward = step_reward(
                0.0, 0.0, self.env.config.reward, result_empty=False, immediate_stop=immediate
            )
        self.record["steps"].append(
            {
                "query_string": self.session.query_string(),
                "refinement": None,
                "state": state_flat,
                "result_ids": [],
                "reward": reward,
                "ndcg_before": ndcg_now,
                "ndcg_after": ndcg_now,
            }
        )
        self.record["stopped"] = True
        self.done = True
        return reward

    def apply(self, refinement: Refinement) -> float | None:
        """Execute one refinement step; raises on duplicates."""
        if refinement in self.session.state.refinements:
            raise AgentContractError(
                f"agent {self.record['agent']!r} proposed duplicate refinement "
                f"{render_refinement(refinement)!r} for question {self.record['question']!r}"
            )
        state_flat = self._state_flat()
        ndcg_before = self.session.ndcg()
        result, new_ids = self.session.apply(refinement)
        ndcg_after = self.session.ndcg()
        reward = None
        if self.session.judger:
            reward = step_reward(
                ndcg_before, ndcg_after, self.env.config.reward, result_empty=len(result) == 0
            )
        self.record["steps"].append(
            {
                "query_string": self.session.query_string(),
                "refinement": render_refinement(refinement),
                "state": state_flat,
                "result_ids": result.doc_ids(),
                "reward": reward,
                "ndcg_before": ndcg_before,
                "ndcg_after": ndcg_after,
            }
        )
        if len(self.session.state.refinements) >= self.cfg.step_cap:
            self.done = True
        if self.cfg.stop_on_no_new_docs and not new_ids:
            self.done = True
        return reward

    def finish(self) -> dict:
        self.record["final_metrics"] = self.session.final_metrics()
        if self.record["final_metrics"]["ndcg5"] is not None:
            self.record["final_metrics"]["ndcg5_display"] = ndcg_display(
                self.record["final_metrics"]["ndcg5"]
            )
        return self.record


def run_episode(qa: QaPair, agent, env: SearchEnv, cfg: EpisodeConfig | None = None) -> dict:
    """Run one episode and return its record (a JSON-ready dict).

    The agent proposes refinements until STOP, the step cap, or (when
    enabled) a step that retrieves no new documents. Duplicate proposals
    abort the episode.
    """
    driver = EpisodeDriver(
        qa, env, cfg, agent_label=getattr(agent, "label", agent.__class__.__name__)
    )
    if hasattr(agent, "begin_episode"):
        agent.begin_episode(driver.session)
    while not driver.done:
        refinement = agent.propose(driver.session)
        if refinement.is_stop:
            driver.record_stop()
        else:
            driver.apply(refinement)
    return driver.finish()


def record_to_json(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False)


def write_episodes(records, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record_to_json(record) + "\n")


def read_episodes(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(json.loads(line))
    return records


# -- evaluation ---------------------------------------------------------------


def wh_group(question: str) -> str:
    tokens = normalize_text(question)
    if tokens and tokens[0] in WH_WORDS:
        return tokens[0]
    return "other"


def _aggregate(rows: list[dict]) -> dict:
    metrics = {}
    for key in ("ndcg5", "top5", "em", "headroom"):
        values = [row[key] for row in rows if row.get(key) is not None]
        metrics[key] = (sum(values) / len(values)) if values else None
    metrics["count"] = len(rows)
    return metrics


def summarize_records(records: list[dict], known_answers: set[tuple[str, ...]] | None = None) -> dict:
    """Aggregate per-question metrics, wh-word groups, optional known/unknown split."""
    rows = []
    for record in records:
        final = record.get("final_metrics") or {}
        rows.append(
            {
                "question": record["question"],
                "group": wh_group(record["question"]),
                "ndcg5": final.get("ndcg5"),
                "top5": final.get("top5"),
                "em": final.get("em"),
                "headroom": final.get("headroom"),
                "answers": record.get("answers"),
            }
        )
    report = {
        "num_questions": len(rows),
        "metrics": _aggregate(rows),
        "groups": {},
        "questions": [
            {k: row[k] for k in ("question", "group", "ndcg5", "top5", "em", "headroom")}
            for row in rows
        ],
    }
    for group in list(WH_WORDS) + ["other"]:
        group_rows = [row for row in rows if row["group"] == group]
        if group_rows:
            report["groups"][group] = _aggregate(group_rows)
    if known_answers is not None:
        known_rows, unknown_rows = [], []
        for row in rows:
            answers = row.get("answers") or []
            normalized = {tuple(normalize_text(a)) for a in answers}
            (known_rows if normalized & known_answers else unknown_rows).append(row)
        report["known"] = _aggregate(known_rows)
        report["unknown"] = _aggregate(unknown_rows)
    return report


def evaluate_dataset(
    qa_pairs,
    agent_factory,
    env: SearchEnv,
    cfg: EpisodeConfig | None = None,
    known_answers: set[tuple[str, ...]] | None = None,
) -> tuple[list[dict], dict]:
    """Run one episode per question; returns (records, summary report)."""
    records = []
    for qa in qa_pairs:
        agent = agent_factory()
        records.append(run_episode(qa, agent, env, cfg))
    return records, summarize_records(records, known_answers)


# -- agent combination ---------------------------------------------------------


def combine_records(record_a: dict, record_b: dict, env: SearchEnv) -> dict:
    """PS-merge of two agents' retrieved pools for the same question.

    Re-reads every retrieved document, re-aggregates the union by PS score
    and reports the combined metrics.
    """
    if record_a["question"] != record_b["question"]:
        raise ValueError("records answer different questions")
    qa = QaPair(question=record_a["question"], answers=tuple(record_a["answers"] or ()))
    session = env.session_for(qa)

    def pool_ids(record: dict) -> set[str]:
        ids = set(record["initial"]["result_ids"])
        for step in record["steps"]:
            ids.update(step["result_ids"])
        return ids

    for doc_id in sorted(pool_ids(record_a) | pool_ids(record_b)):
        if doc_id not in session.state.retrieved:
            session.state.retrieved[doc_id] = session.read(doc_id)
    return session.final_metrics()
