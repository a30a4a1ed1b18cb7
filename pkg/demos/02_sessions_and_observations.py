"""Drive a search session by hand and inspect both observation formats.

A session accumulates every retrieved document; the observation shows the
five best by passage score as answer/title/window triples, serialized as
one flat string (for text-to-text agents) and as a layered token record
(for feature-based encoders).
"""

import json

from searchenv import SearchEnv, build_index, parse_refinement, serialize_flat, serialize_layered
from searchenv.synthetic import build_desk_corpus

desk = build_desk_corpus(n_questions=40, seed=7)
env = SearchEnv(build_index(desk.corpus))

qa = desk.qa_pairs[6]
session = env.session_for(qa)
print(f"question: {qa.question}")
print(f"initial NDCG@5: {session.ndcg():.4f}")

print("\nflat observation after the base query:")
print(" ", serialize_flat(session.observation())[:240], "...")

topic = qa.question.split()[-2]
for refinement_string in (f'-(title:"{topic}")',):
    refinement = parse_refinement(refinement_string)
    result, new_ids = session.apply(refinement)
    print(f"\napplied {refinement_string}: {len(new_ids)} new documents, NDCG@5 now {session.ndcg():.4f}")

print("\naggregated top-5 by passage score (the pool only grows):")
for doc_id, ps in session.current_top():
    print(f"  ps={ps:7.3f}  {doc_id}")

layered = serialize_layered(session.observation(), env.index)
rows = list(zip(layered.tokens, layered.types, layered.idf, layered.ps))
print("\nlayered record (first 12 rows of token/type/idf/ps):")
for token, type_label, idf, ps in rows[:12]:
    print(f"  {token:12} {type_label:8} idf={idf:5.2f} ps={ps:7.2f}")
print(f"  ... {len(rows)} rows total")

print("\nas JSONL:", json.dumps(layered.to_dict())[:120], "...")
