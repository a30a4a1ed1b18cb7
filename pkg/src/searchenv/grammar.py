"""The refinement grammar: a small CFG driven by a stack and an output buffer.

Productions (selected top-down, left-to-right):

    Q     => W Q | U Q | STOP
    U     => Op Field W
    Op    => - | +
    Field => title | contents
    W     => W[question] | W[title] | W[body] | W[answer] | W[index]

and per source W[x] either enumerates complete terms from that source's
vocabulary (default) or, in wordpiece mode, builds a term from a prefix
piece plus zero or more "##" suffix pieces, constrained by a trie over the
vocabulary so only real member terms can be completed.

A derivation walks rules by popping the stack top and pushing the rule's
right-hand side right-to-left; terminal pieces accumulate in the output
buffer, and whenever the stack is back to [Q] the buffer holds one finished
refinement.
"""

from __future__ import annotations

from dataclasses import dataclass

from .queries import CONTENTS, MINUS, OP_TERM, OR_TERM, PLUS, STOP, TITLE, Refinement

MAX_ACTIONS = 100

SRC_QUESTION = "question"
SRC_TITLE = "title"
SRC_BODY = "body"
SRC_ANSWER = "answer"
SRC_INDEX = "index"
SOURCES = (SRC_QUESTION, SRC_TITLE, SRC_BODY, SRC_ANSWER, SRC_INDEX)

# stack symbols
SYM_Q = "Q"
SYM_U = "U"
SYM_OP = "Op"
SYM_FIELD = "Field"
SYM_W = "W"


def term_symbol(source: str) -> str:
    return f"W[{source}]"


def more_symbol(source: str) -> str:
    return f"W+[{source}]"


class GrammarError(ValueError):
    pass


class VocabTrie:
    """Character trie over a term set; answers prefix/membership queries."""

    __slots__ = ("children", "terminal")

    def __init__(self, terms=()):
        self.children: dict[str, VocabTrie] = {}
        self.terminal = False
        for term in terms:
            self.insert(term)

    def insert(self, term: str) -> None:
        node = self
        for ch in term:
            node = node.children.setdefault(ch, VocabTrie())
        node.terminal = True

    def _walk(self, prefix: str) -> "VocabTrie | None":
        node = self
        for ch in prefix:
            node = node.children.get(ch)
            if node is None:
                return None
        return node

    def is_complete(self, term: str) -> bool:
        node = self._walk(term)
        return node is not None and node.terminal

    def has_continuation(self, prefix: str) -> bool:
        """True iff prefix is a proper prefix of some member."""
        node = self._walk(prefix)
        return node is not None and bool(node.children)

    def accepts_prefix(self, prefix: str) -> bool:
        return self._walk(prefix) is not None


@dataclass(frozen=True)
class WordpieceVocab:
    """Subword pieces: prefixes as written, suffixes stored without their '##'."""

    prefixes: tuple[str, ...]
    suffixes: tuple[str, ...]


def load_wordpiece_vocab(path: str) -> WordpieceVocab:
    """Read a piece-per-line vocabulary file; '##'-prefixed lines are suffixes."""
    prefixes, suffixes = [], []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            piece = line.strip()
            if not piece:
                continue
            if piece.startswith("##"):
                suffixes.append(piece[2:])
            else:
                prefixes.append(piece)
    return WordpieceVocab(prefixes=tuple(prefixes), suffixes=tuple(suffixes))


class SessionVocabularies:
    """Per-step term sources: question, titles, answer spans, windows, index."""

    def __init__(
        self,
        question_terms: frozenset[str],
        title_terms: frozenset[str],
        answer_terms: frozenset[str],
        body_terms: frozenset[str],
        index,
    ):
        self.question_terms = question_terms
        self.title_terms = title_terms
        self.answer_terms = answer_terms
        self.body_terms = body_terms
        self.index = index
        self._ranked: dict[str, tuple[str, ...]] = {}
        self._tries: dict[str, VocabTrie] = {}

    def terms(self, source: str) -> frozenset[str]:
        if source == SRC_QUESTION:
            return self.question_terms
        if source == SRC_TITLE:
            return self.title_terms
        if source == SRC_ANSWER:
            return self.answer_terms
        if source == SRC_BODY:
            return self.body_terms
        if source == SRC_INDEX:
            return frozenset(self.index.vocabulary())
        raise GrammarError(f"unknown vocabulary source {source!r}")

    def accessible_terms(self) -> frozenset[str]:
        """Union of the four observation-derived sources (the index excluded)."""
        return self.question_terms | self.title_terms | self.answer_terms | self.body_terms

    def ranked_terms(self, source: str, limit: int) -> tuple[str, ...]:
        """Terms ordered by descending contents IDF (ties lexicographic), capped."""
        key = source
        if key not in self._ranked:
            ranked = sorted(self.terms(source), key=lambda t: (-self.index.idf(t, CONTENTS), t))
            self._ranked[key] = tuple(ranked)
        return self._ranked[key][:limit]

    def trie(self, source: str) -> VocabTrie:
        if source not in self._tries:
            self._tries[source] = VocabTrie(self.terms(source))
        return self._tries[source]


def build_session_vocabs(observation, index) -> SessionVocabularies:
    """Collect the term sources from an observation's question and top-5 entries."""
    titles: set[str] = set()
    answers: set[str] = set()
    bodies: set[str] = set()
    for entry in observation.entries:
        titles.update(entry.title_tokens)
        answers.update(entry.answer_span)
        bodies.update(entry.window_tokens)
    return SessionVocabularies(
        question_terms=frozenset(observation.question_tokens),
        title_terms=frozenset(titles),
        answer_terms=frozenset(answers),
        body_terms=frozenset(bodies),
        index=index,
    )


@dataclass(frozen=True)
class Rule:
    """One production: pops `lhs`, pushes `push` (left-to-right), emits `piece`."""

    lhs: str
    label: str
    push: tuple[str, ...] = ()
    piece: str | None = None
    concat: bool = False  # suffix pieces extend the buffer's last entry
    term: str | None = None  # the complete term this rule finalizes, if any
    source: str | None = None
    is_stop: bool = False


@dataclass(frozen=True)
class GrammarState:
    """Derivation state: nonterminal stack (top last) and output buffer."""

    stack: tuple[str, ...] = (SYM_Q,)
    buffer: tuple[str, ...] = ()

    @property
    def terminal(self) -> bool:
        return not self.stack

    def top(self) -> str:
        if not self.stack:
            raise GrammarError("grammar state is terminal")
        return self.stack[-1]

    def partial_term(self) -> str:
        return self.buffer[-1] if self.buffer else ""


def _structural_rules(top: str, vocabs: SessionVocabularies | None) -> list[Rule]:
    if top == SYM_Q:
        return [
            Rule(lhs=SYM_Q, label="Q=>W Q", push=(SYM_W, SYM_Q)),
            Rule(lhs=SYM_Q, label="Q=>U Q", push=(SYM_U, SYM_Q)),
            Rule(lhs=SYM_Q, label="Q=>STOP", is_stop=True),
        ]
    if top == SYM_U:
        return [Rule(lhs=SYM_U, label="U=>Op Field W", push=(SYM_OP, SYM_FIELD, SYM_W))]
    if top == SYM_OP:
        return [
            Rule(lhs=SYM_OP, label="Op=>-", piece=MINUS),
            Rule(lhs=SYM_OP, label="Op=>+", piece=PLUS),
        ]
    if top == SYM_FIELD:
        return [
            Rule(lhs=SYM_FIELD, label="Field=>title", piece=TITLE),
            Rule(lhs=SYM_FIELD, label="Field=>contents", piece=CONTENTS),
        ]
    if top == SYM_W:
        rules = []
        for source in SOURCES:
            if vocabs is not None and vocabs.terms(source):
                rules.append(Rule(lhs=SYM_W, label=f"W=>W[{source}]", push=(term_symbol(source),)))
        return rules
    return []


def _whole_term_rules(source: str, vocabs: SessionVocabularies, max_actions: int) -> list[Rule]:
    rules = []
    for term in vocabs.ranked_terms(source, max_actions):
        rules.append(
            Rule(
                lhs=term_symbol(source),
                label=f"term[{source}]:{term}",
                piece=term,
                term=term,
                source=source,
            )
        )
    return rules


def _prefix_rules(
    source: str, vocabs: SessionVocabularies, pieces: WordpieceVocab, max_actions: int
) -> list[Rule]:
    trie = vocabs.trie(source)
    rules = []
    lhs = term_symbol(source)
    for piece in sorted(set(pieces.prefixes)):
        if trie.is_complete(piece):
            rules.append(
                Rule(lhs=lhs, label=f"prefix[{source}]:{piece}", piece=piece, term=piece, source=source)
            )
        if trie.has_continuation(piece):
            rules.append(
                Rule(
                    lhs=lhs,
                    label=f"prefix[{source}]:{piece}+",
                    piece=piece,
                    push=(more_symbol(source),),
                    source=source,
                )
            )
    return _cap_term_rules(rules, vocabs, max_actions)


def _suffix_rules(
    source: str,
    partial: str,
    vocabs: SessionVocabularies,
    pieces: WordpieceVocab,
    max_actions: int,
) -> list[Rule]:
    trie = vocabs.trie(source)
    rules = []
    lhs = more_symbol(source)
    for piece in sorted(set(pieces.suffixes)):
        extended = partial + piece
        if trie.is_complete(extended):
            rules.append(
                Rule(
                    lhs=lhs,
                    label=f"suffix[{source}]:##{piece}",
                    piece=piece,
                    concat=True,
                    term=extended,
                    source=source,
                )
            )
        if trie.has_continuation(extended):
            rules.append(
                Rule(
                    lhs=lhs,
                    label=f"suffix[{source}]:##{piece}+",
                    piece=piece,
                    concat=True,
                    push=(more_symbol(source),),
                    source=source,
                )
            )
    return _cap_term_rules(rules, vocabs, max_actions)


def _cap_term_rules(rules: list[Rule], vocabs: SessionVocabularies, max_actions: int) -> list[Rule]:
    if len(rules) <= max_actions:
        return rules
    def sort_key(rule: Rule):
        anchor = rule.term if rule.term is not None else rule.piece
        return (-vocabs.index.idf(anchor, CONTENTS), rule.label)
    return sorted(rules, key=sort_key)[:max_actions]


def applicable_rules(
    gs: GrammarState,
    vocabs: SessionVocabularies,
    wordpieces: WordpieceVocab | None = None,
    max_actions: int = MAX_ACTIONS,
) -> list[Rule]:
    """Rules whose left-hand side is the stack top, in declaration order, capped.

    Term enumerations beyond max_actions keep the highest-IDF terms
    (lexicographic ties); the returned list never exceeds max_actions.
    """
    top = gs.top()
    structural = _structural_rules(top, vocabs)
    if structural:
        return structural[:max_actions]
    for source in SOURCES:
        if top == term_symbol(source):
            if wordpieces is None:
                return _cap_term_rules(_whole_term_rules(source, vocabs, max_actions), vocabs, max_actions)
            return _prefix_rules(source, vocabs, wordpieces, max_actions)
        if top == more_symbol(source):
            if wordpieces is None:
                raise GrammarError("suffix state reached outside wordpiece mode")
            return _suffix_rules(source, gs.partial_term(), vocabs, wordpieces, max_actions)
    raise GrammarError(f"no rules for stack symbol {top!r}")


def apply_rule(gs: GrammarState, rule: Rule) -> tuple[GrammarState, Refinement | None]:
    """Advance one derivation step; returns the completed refinement, if any."""
    if gs.terminal:
        raise GrammarError("cannot apply a rule to a terminal state")
    if rule.lhs != gs.top():
        raise GrammarError(f"rule {rule.label!r} does not apply to {gs.top()!r}")
    stack = list(gs.stack[:-1])
    for symbol in reversed(rule.push):
        stack.append(symbol)
    buffer = list(gs.buffer)
    if rule.is_stop:
        return GrammarState(stack=tuple(stack), buffer=()), Refinement.stop()
    if rule.piece is not None:
        if rule.concat and buffer:
            buffer[-1] = buffer[-1] + rule.piece
        else:
            buffer.append(rule.piece)
    state = GrammarState(stack=tuple(stack), buffer=tuple(buffer))
    if state.stack == (SYM_Q,) and buffer:
        refinement = _refinement_from_buffer(buffer)
        return GrammarState(stack=state.stack, buffer=()), refinement
    return state, None


def _refinement_from_buffer(buffer: list[str]) -> Refinement:
    if len(buffer) == 1:
        return Refinement.or_term(buffer[0])
    if len(buffer) == 3:
        return Refinement.op_term(buffer[0], buffer[1], buffer[2])
    raise GrammarError(f"malformed output buffer {buffer!r}")


def derive_refinement(
    target: Refinement,
    vocabs: SessionVocabularies,
    wordpieces: WordpieceVocab | None = None,
    max_actions: int = MAX_ACTIONS,
) -> list[Rule] | None:
    """Search for a rule sequence from [Q] that emits `target`; None if unreachable.

    Used to check that agent-emitted refinements stay inside the grammar
    (including the action cap, so a capped-away term is correctly
    unreachable).
    """
    if target.kind == STOP:
        return [_structural_rules(SYM_Q, vocabs)[2]]

    def admissible(state: GrammarState, rule: Rule) -> bool:
        if rule.is_stop:
            return False
        if rule.label == "Q=>W Q":
            return target.kind == OR_TERM
        if rule.label == "Q=>U Q":
            return target.kind == OP_TERM
        if rule.lhs == SYM_OP:
            return rule.piece == target.op
        if rule.lhs == SYM_FIELD:
            return rule.piece == target.field
        if rule.piece is not None:  # term piece
            if rule.term is not None:
                return rule.term == target.term
            partial = (state.partial_term() + rule.piece) if rule.concat else rule.piece
            return target.term.startswith(partial) and partial != target.term
        return True

    def dfs(state: GrammarState, depth: int) -> list[Rule] | None:
        if depth > 16:
            return None
        for rule in applicable_rules(state, vocabs, wordpieces, max_actions):
            if not admissible(state, rule):
                continue
            next_state, completed = apply_rule(state, rule)
            if completed is not None:
                if completed == target:
                    return [rule]
                continue
            tail = dfs(next_state, depth + 1)
            if tail is not None:
                return [rule] + tail
        return None

    return dfs(GrammarState(), 0)
