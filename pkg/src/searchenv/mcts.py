"""Grammar-guided Monte Carlo tree search over query refinements.

Tree edges are grammar rules; whenever a simulation path finishes deriving
a refinement, the real engine executes the hypothetical query (memoized by
query string) and the resulting state-score delta is credited on that edge.
The engine thus plays the role of a perfect dynamics model; policy priors
and leaf values come from a pluggable evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .env import Session, merge_top
from .grammar import (
    MAX_ACTIONS,
    GrammarState,
    Rule,
    SessionVocabularies,
    WordpieceVocab,
    applicable_rules,
    apply_rule,
    build_session_vocabs,
)
from .queries import CONTENTS, MINUS, PLUS, TITLE, Refinement
from .scoring import RewardConfig

ORACLE_REWARD = "oracle"
HEURISTIC = "heuristic"


@dataclass(frozen=True)
class PlannerConfig:
    simulations: int = 100
    max_episode_steps: int = 10
    c1: float = 1.25
    c2: float = 19652.0
    mode: str = ORACLE_REWARD
    max_refinements_per_path: int = 5
    max_actions: int = MAX_ACTIONS
    wordpieces: WordpieceVocab | None = None

    def __post_init__(self):
        if self.simulations < 1:
            raise ValueError("simulations must be >= 1")
        if self.mode not in (ORACLE_REWARD, HEURISTIC):
            raise ValueError(f"unknown planner mode {self.mode!r}")


def squash(x: float) -> float:
    return x / (1.0 + abs(x))


def mean_ps(top) -> float:
    if not top:
        return 0.0
    return sum(ps for _, ps in top) / len(top)


@dataclass
class Edge:
    rule: Rule
    prior: float
    node: "MctsNode | None" = None


@dataclass
class MctsNode:
    gs: GrammarState
    query: object  # StructuredQuery of the hypothetical session at this node
    top: list  # (doc_id, ps) snapshot of the aggregated top-k
    ndcg: float | None  # oracle state score (None in heuristic mode)
    completions: int = 0
    reward_in: float = 0.0  # reward credited on the edge into this node
    completed_in: Refinement | None = None
    is_stop: bool = False
    terminal: bool = False
    visits: int = 0
    total_value: float = 0.0
    children: list[Edge] = field(default_factory=list)
    expanded: bool = False

    @property
    def mean_value(self) -> float:
        return self.total_value / self.visits if self.visits else 0.0


class HeuristicEvaluator:
    """Answer-blind priors and value: IDF-weighted terms, squashed mean PS."""

    def __init__(self, index):
        self.index = index

    def policy(self, node: MctsNode, rules: list[Rule]) -> list[float]:
        if not rules:
            return []
        anchors = [r.term if r.term is not None else r.piece for r in rules]
        if any(r.term is not None or (r.piece and r.lhs.startswith("W")) for r in rules):
            weights = [max(self.index.idf(a, CONTENTS), 0.0) if a else 0.0 for a in anchors]
            total = sum(weights)
            if total > 0:
                return [w / total for w in weights]
        return [1.0 / len(rules)] * len(rules)

    def value(self, node: MctsNode) -> float:
        if not node.top:
            return 0.0
        return squash(mean_ps(node.top))


def heuristic_evaluator(index) -> HeuristicEvaluator:
    return HeuristicEvaluator(index)


class OracleEvaluator(HeuristicEvaluator):
    """Evaluator for reward-oracle planning: IDF priors, zero leaf value.

    With true rewards credited on completing edges, a zero future-value
    estimate keeps child values equal to accumulated reward, so improving
    refinements dominate visit counts instead of being drowned by a large
    state-quality constant. Must-terms with no postings in the pending field
    get zero prior: their result is provably empty, so exploring them only
    collects penalties (plain index statistics, no answer knowledge).
    """

    # operator refinements filter the candidate set while bare terms only
    # re-rank, so the structural prior leans toward them; STOP keeps enough
    # mass that it can absorb visits when every productive action backfires
    STRUCTURAL_WEIGHTS = {"Q=>W Q": 0.15, "Q=>U Q": 0.65, "Q=>STOP": 0.20}

    def policy(self, node: MctsNode, rules: list[Rule]) -> list[float]:
        priors = super().policy(node, rules)
        if all(r.label in self.STRUCTURAL_WEIGHTS for r in rules):
            weights = [self.STRUCTURAL_WEIGHTS[r.label] for r in rules]
            total = sum(weights)
            return [w / total for w in weights]
        buffer = node.gs.buffer if node is not None else ()
        if len(buffer) >= 2 and buffer[0] == PLUS and any(r.term is not None for r in rules):
            field = buffer[1]
            gated = [
                0.0 if (r.term is not None and self.index.doc_frequency(r.term, field) == 0) else p
                for r, p in zip(rules, priors)
            ]
            total = sum(gated)
            if total > 0:
                return [g / total for g in gated]
        return priors

    def value(self, node: MctsNode) -> float:
        return 0.0


def oracle_evaluator(index) -> OracleEvaluator:
    return OracleEvaluator(index)


def default_evaluator(index, mode: str):
    return oracle_evaluator(index) if mode == ORACLE_REWARD else heuristic_evaluator(index)


class Planner:
    """One tree search per episode step; memoization is shared per session."""

    def __init__(self, session: Session, cfg: PlannerConfig, evaluator):
        self.session = session
        self.cfg = cfg
        self.evaluator = evaluator
        obs = session.observation()
        self.vocabs = build_session_vocabs(obs, session.env.index)
        self.reward_cfg: RewardConfig = session.env.config.reward
        self.episode_fresh = len(session.state.refinements) == 0

    # -- node construction -------------------------------------------------

    def make_root(self) -> MctsNode:
        ndcg = self.session.ndcg() if self.cfg.mode == ORACLE_REWARD else None
        root = MctsNode(
            gs=GrammarState(),
            query=self.session.current_query(),
            top=self.session.current_top(),
            ndcg=ndcg,
        )
        self.expand(root)
        root.visits = 1
        root.total_value = self.evaluator.value(root)
        return root

    def expand(self, node: MctsNode) -> None:
        if node.terminal or node.expanded:
            return
        rules = applicable_rules(node.gs, self.vocabs, self.cfg.wordpieces, self.cfg.max_actions)
        if not rules:
            node.terminal = True
            return
        priors = self.evaluator.policy(node, rules)
        node.children = [Edge(rule=r, prior=p) for r, p in zip(rules, priors)]
        node.expanded = True

    def materialize(self, parent: MctsNode, rule: Rule) -> MctsNode:
        gs, completed = apply_rule(parent.gs, rule)
        node = MctsNode(
            gs=gs,
            query=parent.query,
            top=parent.top,
            ndcg=parent.ndcg,
            completions=parent.completions,
            completed_in=completed,
        )
        if completed is None:
            return node
        if completed.is_stop:
            node.is_stop = True
            node.terminal = True
            if self.episode_fresh and parent.completions == 0:
                node.reward_in = self.reward_cfg.immediate_stop_penalty
            return node
        node.query = parent.query.extended(completed)
        result = self.session.execute(node.query)
        node.top = merge_top(parent.top, result, self.session.ps_of, self.session.env.config.k)
        if self.cfg.mode == ORACLE_REWARD:
            node.ndcg = self.session.ndcg_of_top(node.top)
            node.reward_in = node.ndcg - parent.ndcg
        else:
            node.reward_in = squash(mean_ps(node.top)) - squash(mean_ps(parent.top))
        if len(result) == 0:
            node.reward_in += self.reward_cfg.empty_result_penalty
        node.completions = parent.completions + 1
        if node.completions >= self.cfg.max_refinements_per_path:
            node.terminal = True
        return node

    # -- search --------------------------------------------------------------

    def select_child(self, node: MctsNode) -> Edge:
        best_edge = None
        best_score = None
        explore = self.cfg.c1 + math.log((node.visits + self.cfg.c2 + 1.0) / self.cfg.c2)
        sqrt_n = math.sqrt(node.visits)
        for edge in node.children:
            child_visits = edge.node.visits if edge.node else 0
            q = edge.node.mean_value if edge.node else 0.0
            score = q + edge.prior * sqrt_n / (1.0 + child_visits) * explore
            if best_score is None or score > best_score:
                best_score = score
                best_edge = edge
        if best_edge is None:
            raise ValueError("select_child on a node with no children")
        return best_edge

    def simulate(self, root: MctsNode, force_edge: Edge | None = None) -> None:
        """One pass: descend by pUCT, add exactly one tree node, then finish
        the derivation with a transient max-prior rollout so every simulation
        samples a completed refinement's true reward (at most one new engine
        query per simulation)."""
        path = [root]
        node = root
        while not node.terminal:
            edge = force_edge if node is root and force_edge is not None else self.select_child(node)
            if edge.node is None:
                edge.node = self.materialize(node, edge.rule)
                self.expand(edge.node)
                path.append(edge.node)
                break
            node = edge.node
            path.append(node)
        leaf = path[-1]
        if leaf.terminal:
            value = 0.0 if leaf.is_stop else self.evaluator.value(leaf)
        elif leaf.completed_in is not None:
            value = self.evaluator.value(leaf)
        else:
            value = self._rollout(leaf)
        value_up = value
        for n in reversed(path):
            value_up = n.reward_in + value_up
            n.visits += 1
            n.total_value += value_up

    def _rollout(self, node: MctsNode) -> float:
        """Finish the current derivation by always taking the max-prior rule;
        no tree nodes are created, only the completion reward is sampled."""
        current = node
        for _ in range(32):
            if current.terminal:
                return 0.0 if current.is_stop else self.evaluator.value(current)
            if not current.children:
                rules = applicable_rules(
                    current.gs, self.vocabs, self.cfg.wordpieces, self.cfg.max_actions
                )
                if not rules:
                    return 0.0
                priors = self.evaluator.policy(current, rules)
                edges = [Edge(rule=r, prior=p) for r, p in zip(rules, priors)]
            else:
                edges = current.children
            best = max(edges, key=lambda e: e.prior)
            current = self.materialize(current, best.rule)
            if current.completed_in is not None and not current.is_stop:
                return current.reward_in + self.evaluator.value(current)
            if current.is_stop:
                return current.reward_in
        return 0.0

    def plan(self) -> Refinement:
        root = self.make_root()
        # warm-up: sample each top-level action once so no branch's value
        # stays unknown while visit counts accumulate elsewhere
        for i in range(self.cfg.simulations):
            force = root.children[i] if i < len(root.children) else None
            self.simulate(root, force_edge=force)
        return self._walk(root)

    def _walk(self, root: MctsNode) -> Refinement:
        """Follow max-visit children until a refinement completes.

        Unvisited frontier nodes are completed grammatically without engine
        calls, so the per-step engine budget stays within the simulation
        count.
        """
        node = root
        gs = root.gs
        while True:
            if not node.expanded or not node.children:
                rules = applicable_rules(gs, self.vocabs, self.cfg.wordpieces, self.cfg.max_actions)
                if not rules:
                    return Refinement.stop()
                gs, completed = apply_rule(gs, rules[0])
                if completed is not None:
                    return completed
                node = MctsNode(gs=gs, query=node.query, top=node.top, ndcg=node.ndcg)
                continue
            edge = max(node.children, key=lambda e: (e.node.visits if e.node else 0))
            if edge.node is not None:
                if edge.node.completed_in is not None:
                    return edge.node.completed_in
                node = edge.node
                gs = node.gs
                continue
            gs, completed = apply_rule(gs, edge.rule)
            if completed is not None:
                return completed
            node = MctsNode(gs=gs, query=node.query, top=node.top, ndcg=node.ndcg)


def plan_step(session: Session, cfg: PlannerConfig, evaluator) -> Refinement:
    """Run a full tree search from the session's current state; deterministic."""
    return Planner(session, cfg, evaluator).plan()


class MctsAgent:
    """Episode agent around plan_step; duplicates degrade to STOP."""

    def __init__(self, cfg: PlannerConfig, evaluator_factory=None, label: str | None = None):
        self.cfg = cfg
        self.evaluator_factory = evaluator_factory
        self.label = label or f"mcts-{cfg.mode}"
        self._evaluator = None

    def begin_episode(self, session: Session) -> None:
        factory = self.evaluator_factory or (
            lambda s: default_evaluator(s.env.index, self.cfg.mode)
        )
        self._evaluator = factory(session)

    def propose(self, session: Session) -> Refinement:
        if self._evaluator is None:
            self.begin_episode(session)
        planned = plan_step(session, self.cfg, self._evaluator)
        if not planned.is_stop and planned in session.state.refinements:
            return Refinement.stop()
        return planned


class GreedyOneLookaheadAgent:
    """Budget-matched greedy baseline: one preview per candidate, argmax reward.

    Candidates follow the grammar's declaration order (sources question,
    titles, bodies, answers, index; terms by descending IDF; variants OR,
    +contents, -contents, +title, -title) and the per-step budget equals the
    planner's simulation count.
    """

    label = "greedy-oracle"

    def __init__(self, budget: int = 100, max_actions: int = MAX_ACTIONS):
        self.budget = budget
        self.max_actions = max_actions

    def begin_episode(self, session: Session) -> None:
        pass

    def candidate_refinements(self, session: Session, vocabs: SessionVocabularies):
        from .grammar import SOURCES

        applied = set(session.state.refinements)
        seen = set()
        for source in SOURCES:
            for term in vocabs.ranked_terms(source, self.max_actions):
                for refinement in (
                    Refinement.or_term(term),
                    Refinement.op_term(PLUS, CONTENTS, term),
                    Refinement.op_term(MINUS, CONTENTS, term),
                    Refinement.op_term(PLUS, TITLE, term),
                    Refinement.op_term(MINUS, TITLE, term),
                ):
                    if refinement in applied or refinement in seen:
                        continue
                    seen.add(refinement)
                    yield refinement

    def propose(self, session: Session) -> Refinement:
        vocabs = build_session_vocabs(session.observation(), session.env.index)
        ndcg_before = session.ndcg()
        best = None
        best_after = ndcg_before
        spent = 0
        for candidate in self.candidate_refinements(session, vocabs):
            if spent >= self.budget:
                break
            result = session.preview_result(candidate)
            spent += 1
            ndcg_after = session.ndcg_of_top(session.merged_top(result))
            if ndcg_after > best_after:
                best, best_after = candidate, ndcg_after
        return best if best is not None else Refinement.stop()
