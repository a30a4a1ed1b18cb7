"""Synthetic desk-scale corpus with controllable retrieval difficulty.

Each generated question gets: 1-3 relevant passages that contain the answer
and score well on question-term density (strong PS once retrieved), and a
handful of decoy articles whose titles match the question (strong initial
BM25) but whose bodies lack the answer. Refinement agents therefore start
with decoy-dominated rankings that informed query edits can fix.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .corpus import Corpus, QaPair, RawDocument

FILLERS = (
    "the of in a was to and for on by with at from as is are were its".split()
)
NEUTRAL = (
    "records archive notes survey report volume section entry page item list table figure "
    "review summary index append matter detail account passage chapter annals digest "
    "bulletin gazette ledger register journal catalog manual compendium abstract preface "
    "margin column footnote glossary excerpt edition imprint binding folio quire vellum "
    "scroll codex leaflet brochure circular minutes memoranda docket roster".split()
)
ASPECTS = (
    "process method treaty festival doctrine engine garden bridge canal league "
    "institute railway harbor museum market tunnel observatory forge mill academy".split()
)
VERBS = {
    "who": "discovered",
    "what": "named",
    "when": "established",
    "where": "located",
    "how": "organised",
    "which": "restored",
}

_CONSONANTS = "bcdfghjklmnprstvz"
_VOWELS = "aeiou"


class _Namer:
    """Deterministic pseudo-word factory; every word is unique."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set(FILLERS) | set(NEUTRAL) | set(ASPECTS) | set(VERBS.values())

    def word(self, syllables: int = 3) -> str:
        while True:
            w = "".join(
                self.rng.choice(_CONSONANTS) + self.rng.choice(_VOWELS)
                for _ in range(syllables)
            )
            if w not in self.used:
                self.used.add(w)
                return w

    def year(self) -> str:
        while True:
            y = str(self.rng.randint(2400, 2980))
            if y not in self.used:
                self.used.add(y)
                return y


@dataclass(frozen=True)
class DeskCorpus:
    corpus: Corpus
    qa_pairs: tuple[QaPair, ...]
    articles: tuple[RawDocument, ...]


def _pad(tokens: list[str], rng: random.Random, target: int, fillers_only: bool = False) -> list[str]:
    while len(tokens) < target:
        if fillers_only or rng.random() >= 0.5:
            tokens.append(rng.choice(FILLERS))
        else:
            tokens.append(rng.choice(NEUTRAL))
    return tokens


def build_desk_corpus(
    n_questions: int = 120,
    seed: int = 7,
    block_size: int = 288,
    noise_articles: int = 400,
) -> DeskCorpus:
    """Generate ~2k passages and one QA pair per question; fully seeded."""
    rng = random.Random(seed)
    namer = _Namer(rng)
    articles: list[RawDocument] = []
    qa_pairs: list[QaPair] = []

    wh_cycle = ["who", "what", "when", "where", "how", "which"]
    for qi in range(n_questions):
        wh = wh_cycle[qi % len(wh_cycle)]
        verb = VERBS[wh]
        topic = namer.word(3)
        subtopic = namer.word(3)
        aspect = rng.choice(ASPECTS)
        if wh in ("when", "how"):
            answer_tokens = [namer.year()]
        elif rng.random() < 0.2:
            answer_tokens = [namer.word(2), namer.word(3)]
        else:
            answer_tokens = [namer.word(3)]
        answer = " ".join(answer_tokens)

        question = {
            "who": f"who {verb} the {topic} {aspect}",
            "what": f"what was the {topic} {aspect} {verb} for",
            "when": f"when was the {topic} {aspect} {verb}",
            "where": f"where was the {topic} {aspect} {verb}",
            "how": f"how was the {topic} {aspect} {verb}",
            "which": f"which scholar {verb} the {topic} {aspect}",
        }[wh]
        qa_pairs.append(QaPair(question=question, answers=(answer,)))

        # Relevant passages: moderate question-term density in the body (wins
        # the passage score once retrieved) but no title match, so decoy
        # titles outrank them for the initial query. Only the first relevant
        # passage carries the subtopic bridge term; the rest are reachable
        # through the answer term once it has been observed, so sessions
        # need several steps to collect everything.
        n_relevant = 1 + (qi % 3)
        easy = qi % 5 == 4  # every fifth question starts partially solved
        bridge = qi % 10 == 3
        for ri in range(n_relevant):
            core = [
                rng.choice(FILLERS),
                topic,
                aspect,
                verb,
                rng.choice(FILLERS),
                topic,
            ]
            if ri == 0 and not bridge:
                core.append(subtopic)
            # the answer appears twice so the ideal query outranks decoy titles
            core.extend([*answer_tokens, rng.choice(FILLERS), *answer_tokens, rng.choice(FILLERS)])
            if bridge:
                # every filler present: no "exclude a missing filler" shortcut
                core.extend(FILLERS)
            # filler-only padding: no shared rare terms besides the answer,
            # so later relevant passages stay behind the answer-term bridge
            body = _pad(core, rng, 60 + rng.randrange(20), fillers_only=True)
            if bridge:
                title = f"{namer.word(3)} {namer.word(3)}"
            elif ri == 0:
                title = f"{subtopic} {rng.choice(NEUTRAL)}"
            else:
                title = f"{namer.word(3)} {rng.choice(NEUTRAL)}"
            articles.append(
                RawDocument(
                    article_id=f"rel-{qi}-{ri}",
                    title=title,
                    body=" ".join(body),
                )
            )

        # Decoys: question terms in the *title* (wins initial BM25), sparse bodies
        # without the answer; one decoy body carries the subtopic so it is
        # reachable from observed windows. "Bridge" questions instead use two
        # decoy families with disjoint title terms and no subtopic leak, so no
        # single refinement helps but a chained pair of exclusions does.
        if bridge:
            for di in range(10):
                junk = namer.word(3)
                core = [topic, aspect, verb, rng.choice(FILLERS), junk]
                # filler-only padding: no neutral word can excise several
                # decoys at once, so only chained exclusions reach the answer
                body = _pad(core, rng, 45 + rng.randrange(15), fillers_only=True)
                title = f"{topic} {namer.word(3)}" if di < 5 else f"{aspect} {verb} {namer.word(3)}"
                articles.append(
                    RawDocument(
                        article_id=f"dec-{qi}-{di}",
                        title=title,
                        body=" ".join(body),
                    )
                )
        else:
            n_decoys = 2 if easy else 5 + (qi % 2)
            for di in range(n_decoys):
                junk = namer.word(3)
                core = [topic, aspect, verb, rng.choice(FILLERS), junk, rng.choice(NEUTRAL)]
                if di == 0:
                    core.extend([subtopic, rng.choice(FILLERS)])
                body = _pad(core, rng, 45 + rng.randrange(15))
                articles.append(
                    RawDocument(
                        article_id=f"dec-{qi}-{di}",
                        title=f"{topic} {aspect} {rng.choice(NEUTRAL)}",
                        body=" ".join(body),
                    )
                )

    for ni in range(noise_articles):
        target = 70 + rng.randrange(40)
        if ni % 2 == 0:  # half the noise articles span two passage blocks
            target = 300 + rng.randrange(80)
        body = _pad([namer.word(3) for _ in range(4)], rng, target)
        articles.append(
            RawDocument(
                article_id=f"noise-{ni}",
                title=f"{namer.word(3)} {rng.choice(NEUTRAL)}",
                body=" ".join(body),
            )
        )

    corpus = Corpus(block_size=block_size)
    for article in articles:
        corpus.add_article(article)
    return DeskCorpus(corpus=corpus, qa_pairs=tuple(qa_pairs), articles=tuple(articles))


def write_corpus_jsonl(desk: DeskCorpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for article in desk.articles:
            handle.write(
                json.dumps(
                    {"id": article.article_id, "title": article.title, "contents": article.body},
                    ensure_ascii=False,
                )
                + "\n"
            )


def write_qa_jsonl(desk: DeskCorpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for qa in desk.qa_pairs:
            handle.write(
                json.dumps(
                    {"question": qa.question, "answers": list(qa.answers)}, ensure_ascii=False
                )
                + "\n"
            )
