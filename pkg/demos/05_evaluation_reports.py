"""Evaluate agents over a QA set and compare their reports.

The report aggregates NDCG@5 / top-5 accuracy / exact-match / headroom,
with per-question rows and wh-word group breakdowns. Headroom is the NDCG
an oracle re-ranker would reach over everything the agent retrieved, so it
upper-bounds what better ranking alone could buy.
"""

from searchenv import SearchEnv, build_index
from searchenv.mcts import ORACLE_REWARD, MctsAgent, PlannerConfig
from searchenv.rocchio import generate_dataset
from searchenv.session import BaselineAgent, EpisodeConfig, combine_records, evaluate_dataset, summarize_records
from searchenv.synthetic import build_desk_corpus

desk = build_desk_corpus(n_questions=36, seed=7)
env = SearchEnv(build_index(desk.corpus))
questions = desk.qa_pairs


def show(name, report):
    m = report["metrics"]
    print(f"{name:12} ndcg5={m['ndcg5']:.3f} top5={m['top5']:.3f} em={m['em']:.3f} headroom={m['headroom']:.3f}")


baseline_records, baseline_report = evaluate_dataset(questions, BaselineAgent, env)
show("baseline", baseline_report)

rocchio_records = generate_dataset(questions, env)
show("rocchio", summarize_records(rocchio_records))

planner_records, planner_report = evaluate_dataset(
    questions,
    lambda: MctsAgent(PlannerConfig(simulations=100, mode=ORACLE_REWARD), label="mcts-oracle"),
    env,
    EpisodeConfig(step_cap=5),
)
show("mcts-oracle", planner_report)

merged = [combine_records(a, b, env) for a, b in zip(rocchio_records, planner_records)]
merged_headroom = sum(m["headroom"] for m in merged) / len(merged)
print(f"{'pooled':12} headroom={merged_headroom:.3f}  (union of both agents' retrieved documents)")

print("\nby question type (mcts-oracle):")
for group, metrics in planner_report["groups"].items():
    print(f"  {group:6} n={metrics['count']:3}  ndcg5={metrics['ndcg5']:.3f}")
