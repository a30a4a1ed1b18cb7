"""Synthesize improving search sessions from question/answer pairs.

Each episode greedily accepts refinements that strictly raise the session's
NDCG@5, with exact-match and exclusion candidates constrained by the result
vocabulary of the ideal query (question + answer). The resulting episodes
are training data: every step pairs a flat observation with the refinement
clause an imitation learner should predict.
"""

from searchenv import SearchEnv, build_index
from searchenv.rocchio import RocchioConfig, export_training_pairs, generate_session
from searchenv.scoring import ndcg_display
from searchenv.synthetic import build_desk_corpus

desk = build_desk_corpus(n_questions=40, seed=7)
env = SearchEnv(build_index(desk.corpus))

improved = 0
pairs = []
for qa in desk.qa_pairs[:20]:
    record = generate_session(qa, env, RocchioConfig())
    if record["steps"]:
        improved += 1
    pairs.extend(export_training_pairs([record]))
    if len(record["steps"]) >= 2:
        print(f"\n{qa.question}  (answer: {qa.answers[0]})")
        print(f"  q0 NDCG {ndcg_display(record['initial']['ndcg'])}")
        for step in record["steps"]:
            print(
                f"  + {step['refinement']:26} -> NDCG {ndcg_display(step['ndcg_after'])}"
                f"  ({step['searches_spent']} searches spent)"
            )

print(f"\n{improved}/20 questions improved over their base query")
print(f"{len(pairs)} (state, target) training pairs exported, e.g.:")
print("  input:", pairs[0]["input"][:150], "...")
print("  target:", pairs[0]["target"])
