"""Plan query refinements with grammar-guided tree search.

The planner's tree edges are grammar rules; completing a derivation
executes the hypothetical query against the real engine (memoized) and
credits the state-score delta on that edge. The oracle-reward mode scores
with the true NDCG delta; the heuristic mode is answer-blind and relies on
the passage-score proxy.
"""

from searchenv import SearchEnv, build_index
from searchenv.mcts import HEURISTIC, ORACLE_REWARD, MctsAgent, PlannerConfig
from searchenv.scoring import ndcg_display
from searchenv.session import EpisodeConfig, run_episode
from searchenv.synthetic import build_desk_corpus

desk = build_desk_corpus(n_questions=40, seed=7)
env = SearchEnv(build_index(desk.corpus))

qa = desk.qa_pairs[12]
print(f"question: {qa.question}  (answer: {qa.answers[0]})")

oracle = MctsAgent(PlannerConfig(simulations=100, mode=ORACLE_REWARD), label="mcts-oracle")
record = run_episode(qa, oracle, env, EpisodeConfig(step_cap=5))
print(f"\noracle-reward planner: NDCG {ndcg_display(record['initial']['ndcg'])}"
      f" -> {record['final_metrics']['ndcg5_display']}")
for step in record["steps"]:
    label = step["refinement"] or "STOP"
    print(f"  {label:28} NDCG {ndcg_display(step['ndcg_after'])}  reward {step['reward']:+.4f}")

blind = MctsAgent(PlannerConfig(simulations=100, mode=HEURISTIC), label="mcts-heuristic")
record = run_episode(qa, blind, env, EpisodeConfig(step_cap=5))
print(f"\nanswer-blind planner:  NDCG {ndcg_display(record['initial']['ndcg'])}"
      f" -> {record['final_metrics']['ndcg5_display']}")
for step in record["steps"]:
    label = step["refinement"] or "STOP"
    print(f"  {label:28} NDCG {ndcg_display(step['ndcg_after'])}")

print("\n(the heuristic planner maximizes the passage-score proxy, so its NDCG")
print(" trajectory is whatever that proxy happens to buy on this question)")
