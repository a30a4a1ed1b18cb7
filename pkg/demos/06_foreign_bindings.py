"""Drive the environment through the foreign-callable bindings.

The bindings speak only serialized forms: refinement strings in, flat and
layered observations out, the finished episode as one JSON line. This is
the surface external (non-Python) agents integrate against.

Requires the searchenv-bindings package (see bindings/ in the repo root).
"""

import json
import tempfile
from pathlib import Path

import searchenv_bindings as bindings
from searchenv.cli import main as cli_main
from searchenv.synthetic import build_desk_corpus, write_corpus_jsonl

workdir = Path(tempfile.mkdtemp(prefix="searchenv-demo-"))
desk = build_desk_corpus(n_questions=12, seed=7, noise_articles=40)
corpus_path = workdir / "corpus.jsonl"
write_corpus_jsonl(desk, str(corpus_path))
cli_main(["index", "build", "--corpus", str(corpus_path), "--out", str(workdir / "index")])

handle = bindings.open(str(workdir / "index"), {"step_cap": 10, "agent_label": "demo"})

qa = desk.qa_pairs[0]
obs = handle.reset(qa.question, list(qa.answers))
print("flat observation:", obs["flat"][:160], "...")

topic = qa.question.split()[-2]
payload = handle.step(f'-(title:"{topic}")')
print(f"\nstep reward: {payload['reward']:+.4f}  done: {payload['done']}")

try:
    handle.step("+(contents:oops)")
except bindings.BindingsError as err:
    print("structured error:", err.to_payload())

payload = handle.step("")  # empty string is STOP
print(f"stop: reward {payload['reward']:+.1f}, done {payload['done']}")

record = json.loads(handle.close())
print(f"\nepisode record: {len(record['steps'])} steps, final metrics {record['final_metrics']}")
