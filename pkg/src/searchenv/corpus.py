"""Corpus ingestion: text normalization, passage blocking, JSONL loading."""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field

DEFAULT_BLOCK_SIZE = 288

# Unicode alphanumeric runs, underscore excluded. Digits are kept.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class CorpusError(ValueError):
    """Raised for malformed corpus or QA files."""


def normalize_text(raw: str) -> list[str]:
    """Tokenize a string: NFKC-normalize, lowercase, split on non-alphanumeric runs.

    The same tokenizer is used for indexing, query parsing and answer
    matching, so term comparisons are consistent everywhere.
    """
    if not raw:
        return []
    return _TOKEN_RE.findall(unicodedata.normalize("NFKC", raw).lower())


@dataclass(frozen=True)
class RawDocument:
    article_id: str
    title: str
    body: str


@dataclass(frozen=True)
class Document:
    """One passage block of an article; content_tokens has at most block_size tokens."""

    doc_id: str
    title_tokens: tuple[str, ...]
    content_tokens: tuple[str, ...]
    article_id: str


@dataclass(frozen=True)
class QaPair:
    question: str
    answers: tuple[str, ...]


def make_doc_id(article_id: str, ordinal: int) -> str:
    return f"{article_id}:{ordinal}"


def split_doc_id(doc_id: str) -> tuple[str, int]:
    article_id, _, ordinal = doc_id.rpartition(":")
    return article_id, int(ordinal)


def block_passages(doc: RawDocument, block_size: int = DEFAULT_BLOCK_SIZE) -> list[Document]:
    """Split an article body into consecutive token blocks of block_size.

    The last block may be shorter; an empty body yields no blocks. Every
    block carries the (tokenized) article title.
    """
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    tokens = normalize_text(doc.body)
    title_tokens = tuple(normalize_text(doc.title))
    blocks = []
    for ordinal, start in enumerate(range(0, len(tokens), block_size)):
        blocks.append(
            Document(
                doc_id=make_doc_id(doc.article_id, ordinal),
                title_tokens=title_tokens,
                content_tokens=tuple(tokens[start : start + block_size]),
                article_id=doc.article_id,
            )
        )
    return blocks


@dataclass
class Corpus:
    """Immutable after ingestion; safe for shared concurrent reads."""

    block_size: int = DEFAULT_BLOCK_SIZE
    articles: list[RawDocument] = field(default_factory=list)
    documents: list[Document] = field(default_factory=list)
    _by_doc_id: dict[str, Document] = field(default_factory=dict, repr=False)

    def add_article(self, raw: RawDocument) -> None:
        if any(a.article_id == raw.article_id for a in self.articles):
            raise CorpusError(f"duplicate article id: {raw.article_id!r}")
        self.articles.append(raw)
        for doc in block_passages(raw, self.block_size):
            self.documents.append(doc)
            self._by_doc_id[doc.doc_id] = doc

    def get(self, doc_id: str) -> Document:
        return self._by_doc_id[doc_id]

    def __len__(self) -> int:
        return len(self.documents)


def ingest_jsonl(path: str, block_size: int = DEFAULT_BLOCK_SIZE) -> Corpus:
    """Load a corpus file: one JSON object per line with keys id/title/contents."""
    corpus = Corpus(block_size=block_size)
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            for key in ("id", "title", "contents"):
                if key not in record:
                    raise CorpusError(f"line {lineno}: missing field {key}")
            article_id = str(record["id"])
            if not article_id:
                raise CorpusError(f"line {lineno}: empty id")
            if article_id in seen:
                raise CorpusError(f"line {lineno}: duplicate article id: {article_id!r}")
            seen.add(article_id)
            corpus.add_article(
                RawDocument(article_id=article_id, title=str(record["title"]), body=str(record["contents"]))
            )
    return corpus


def load_qa_jsonl(path: str) -> list[QaPair]:
    """Load question/answer pairs: JSONL with keys question, answers (non-empty array)."""
    pairs = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            for key in ("question", "answers"):
                if key not in record:
                    raise CorpusError(f"line {lineno}: missing field {key}")
            question = str(record["question"])
            answers = [str(a) for a in record["answers"]]
            if not question:
                raise CorpusError(f"line {lineno}: empty question")
            answers = [a for a in answers if normalize_text(a)]
            if not answers:
                raise CorpusError(f"line {lineno}: no usable answers")
            pairs.append(QaPair(question=question, answers=tuple(answers)))
    return pairs
