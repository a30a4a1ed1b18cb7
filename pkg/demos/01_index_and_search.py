"""Build an index over a synthetic desk corpus and run structured queries.

Shows the query syntax end to end: a plain question, then the same question
narrowed with +/- field operators, and what each operator does to the
result list.
"""

from searchenv import build_index, parse_query
from searchenv.synthetic import build_desk_corpus

desk = build_desk_corpus(n_questions=40, seed=7)
index = build_index(desk.corpus)
print(f"corpus: {len(desk.corpus)} passages from {len(desk.articles)} articles")

qa = desk.qa_pairs[0]
print(f"\nquestion: {qa.question}")
print(f"answer:   {qa.answers[0]}")

base = index.execute_query(parse_query(qa.question), 5)
print("\nplain query top-5:")
for doc_id, score in base.hits:
    doc = index.document_by_id(doc_id)
    print(f"  {score:6.2f}  {doc_id:14}  title={' '.join(doc.title_tokens)}")

# the decoy articles share the question's topic in their titles, so
# excluding that title term clears the way for body matches
topic = qa.question.split()[-2]
narrowed = parse_query(f'{qa.question} -(title:"{topic}")')
result = index.execute_query(narrowed, 5)
print(f"\nwith -(title:\"{topic}\") top-5:")
for doc_id, score in result.hits:
    doc = index.document_by_id(doc_id)
    answer_here = "  <-- contains the answer" if qa.answers[0] in " ".join(doc.content_tokens) else ""
    print(f"  {score:6.2f}  {doc_id:14}  title={' '.join(doc.title_tokens)}{answer_here}")

# must-terms filter AND score; unmatchable ones legally yield empty results
empty = index.execute_query(parse_query(f'{qa.question} +(contents:"zzzunseen")'), 5)
print(f"\nunmatchable must-term returns {len(empty)} hits (legal empty result)")
