"""Command-line interface: indexing, search, episode generation, evaluation."""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys

from .corpus import ingest_jsonl, load_qa_jsonl, normalize_text
from .env import SearchEnv
from .index import SearchIndex, build_index
from .mcts import HEURISTIC, ORACLE_REWARD, MctsAgent, PlannerConfig
from .queries import parse_query
from .rocchio import RocchioConfig, generate_dataset, export_training_pairs
from .session import (
    BaselineAgent,
    EpisodeConfig,
    evaluate_dataset,
    read_episodes,
    summarize_records,
    write_episodes,
)

INDEX_META = "meta.json"
INDEX_CORPUS = "corpus.jsonl"


def save_index(source_corpus_path: str, out_dir: str, block_size: int) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    corpus = ingest_jsonl(source_corpus_path, block_size)  # validates before copying
    shutil.copyfile(source_corpus_path, os.path.join(out_dir, INDEX_CORPUS))
    meta = {
        "block_size": block_size,
        "articles": len(corpus.articles),
        "passages": len(corpus.documents),
    }
    with open(os.path.join(out_dir, INDEX_META), "w", encoding="utf-8") as handle:
        json.dump(meta, handle)
    return meta


def load_index(index_dir: str) -> SearchIndex:
    with open(os.path.join(index_dir, INDEX_META), encoding="utf-8") as handle:
        meta = json.load(handle)
    corpus = ingest_jsonl(os.path.join(index_dir, INDEX_CORPUS), meta["block_size"])
    return build_index(corpus)


def _make_agent(name: str, steps: int):
    if name == "baseline":
        return BaselineAgent()
    if name == "mcts-oracle":
        return MctsAgent(PlannerConfig(mode=ORACLE_REWARD, max_episode_steps=steps), label="mcts-oracle")
    if name == "mcts-heuristic":
        return MctsAgent(PlannerConfig(mode=HEURISTIC, max_episode_steps=steps), label="mcts-heuristic")
    raise ValueError(f"unknown agent {name!r}")


def _cmd_index_build(args) -> int:
    meta = save_index(args.corpus, args.out, args.block_size)
    print(json.dumps(meta))
    return 0


def _cmd_search(args) -> int:
    env = SearchEnv(load_index(args.index))
    result = env.index.execute_query(parse_query(args.query), args.k)
    print(
        json.dumps(
            {
                "query": result.query,
                "k": result.k,
                "results": [{"doc_id": d, "score": s} for d, s in result.hits],
            }
        )
    )
    return 0


def _cmd_rocchio_generate(args) -> int:
    env = SearchEnv(load_index(args.index))
    qa_pairs = load_qa_jsonl(args.qa)
    cfg = RocchioConfig(top_terms=args.n, max_searches=args.m, max_steps=args.max_steps)
    records = generate_dataset(qa_pairs, env, cfg)
    write_episodes(records, args.out)
    improved = sum(1 for r in records if r["steps"])
    print(json.dumps({"episodes": len(records), "with_steps": improved, "out": args.out}))
    return 0


def _cmd_session_run(args) -> int:
    env = SearchEnv(load_index(args.index))
    qa_pairs = load_qa_jsonl(args.qa)
    if args.agent == "rocchio":
        cfg = RocchioConfig(max_steps=args.steps)
        records = generate_dataset(qa_pairs, env, cfg)
    else:
        episode_cfg = EpisodeConfig(step_cap=args.steps, stop_on_no_new_docs=args.agent == "baseline")
        records, _ = evaluate_dataset(
            qa_pairs, lambda: _make_agent(args.agent, args.steps), env, episode_cfg
        )
    write_episodes(records, args.out)
    print(json.dumps({"episodes": len(records), "agent": args.agent, "out": args.out}))
    return 0


def _cmd_eval(args) -> int:
    records = read_episodes(args.episodes)
    known = None
    if args.known_answers:
        known = set()
        for qa in load_qa_jsonl(args.known_answers):
            for answer in qa.answers:
                known.add(tuple(normalize_text(answer)))
    print(json.dumps(summarize_records(records, known)))
    return 0


def _cmd_export_t5(args) -> int:
    records = read_episodes(args.episodes)
    pairs = export_training_pairs(records)
    with open(args.out, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(json.dumps(pair, ensure_ascii=False) + "\n")
    print(json.dumps({"pairs": len(pairs), "out": args.out}))
    return 0


def _cmd_headroom(args) -> int:
    records = read_episodes(args.episodes)
    rows = [
        {"question": r["question"], "headroom": (r.get("final_metrics") or {}).get("headroom")}
        for r in records
    ]
    values = [row["headroom"] for row in rows if row["headroom"] is not None]
    print(
        json.dumps(
            {
                "num_questions": len(rows),
                "headroom": (sum(values) / len(values)) if values else None,
                "per_question": rows,
            }
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="searchenv")
    sub = parser.add_subparsers(dest="command", required=True)

    index = sub.add_parser("index", help="index management")
    index_sub = index.add_subparsers(dest="index_command", required=True)
    build = index_sub.add_parser("build", help="ingest a corpus file and store an index")
    build.add_argument("--corpus", required=True)
    build.add_argument("--out", required=True)
    build.add_argument("--block-size", type=int, default=288)
    build.set_defaults(func=_cmd_index_build)

    search = sub.add_parser("search", help="run one structured query")
    search.add_argument("--index", required=True)
    search.add_argument("--query", required=True)
    search.add_argument("-k", type=int, default=5)
    search.set_defaults(func=_cmd_search)

    rocchio = sub.add_parser("rocchio", help="episode synthesis")
    rocchio_sub = rocchio.add_subparsers(dest="rocchio_command", required=True)
    generate = rocchio_sub.add_parser("generate", help="generate improving episodes from QA pairs")
    generate.add_argument("--index", required=True)
    generate.add_argument("--qa", required=True)
    generate.add_argument("--out", required=True)
    generate.add_argument("--n", type=int, default=100)
    generate.add_argument("--m", type=int, default=100)
    generate.add_argument("--max-steps", type=int, default=4)
    generate.set_defaults(func=_cmd_rocchio_generate)

    session = sub.add_parser("session", help="run episodes with an agent")
    session_sub = session.add_subparsers(dest="session_command", required=True)
    run = session_sub.add_parser("run", help="run one episode per QA pair")
    run.add_argument("--index", required=True)
    run.add_argument("--qa", required=True)
    run.add_argument(
        "--agent", required=True, choices=["baseline", "rocchio", "mcts-oracle", "mcts-heuristic"]
    )
    run.add_argument("--steps", type=int, default=10)
    run.add_argument("--out", required=True)
    run.set_defaults(func=_cmd_session_run)

    evaluate = sub.add_parser("eval", help="aggregate metrics from episode records")
    evaluate.add_argument("--episodes", required=True)
    evaluate.add_argument("--known-answers")
    evaluate.set_defaults(func=_cmd_eval)

    export = sub.add_parser("export-t5", help="emit (state, target) training pairs")
    export.add_argument("--episodes", required=True)
    export.add_argument("--out", required=True)
    export.set_defaults(func=_cmd_export_t5)

    headroom_cmd = sub.add_parser("headroom", help="headroom summary from episode records")
    headroom_cmd.add_argument("--episodes", required=True)
    headroom_cmd.set_defaults(func=_cmd_headroom)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # CLI contract: nonzero exit with a diagnostic
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
