"""Sequential debugging sessions: query, ask, update, repeat until confident.

Each round recomputes the leading diagnoses under the accumulated
accepted/forbidden sentences, replays all historical answers as Bayes
reweighting over the fresh set (diagnoses that were absent from a recorded
partition are classified against the problem state at ask time), then
selects the next query. The loop stops when the probability gap between the
two most likely diagnoses exceeds the acceptance threshold, when no
discriminating query remains, or when the query budget is exhausted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

from .diagnoses import Diagnosis, DiagnosisEngine
from .errors import NoDiagnosisError, OracleContradictionError
from .formulas import Formula, Not, conj, format_formula
from .kbfile import KnowledgeBase
from .probabilities import DiagnosisBelief, normalize
from .problem import DiagnosisProblem
from .queries import (
    EMPTY_PARTITION,
    ENTROPY,
    SPLIT_IN_HALF,
    Partition,
    QueryBuilder,
    Strategy,
    exclusion_keys,
    score,
    select_from_pool,
    select_query,
    select_query_ckk,
)
from .reasoner import Reasoner

AxiomSet = frozenset

ANSWERS = ("yes", "no", "unknown")

Oracle = Callable[[Partition], str]


@dataclass(frozen=True)
class SessionConfig:
    n: int = 9
    sigma: float = 0.95
    strategy: Strategy = ENTROPY
    gamma: float | None = None
    max_queries: int = 50
    stop_rule: str = "gap"  # "gap": top1-top2 > sigma; "top1": top1 > sigma

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError("sigma must lie in (0, 1]")
        if self.stop_rule not in ("gap", "top1"):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")


def stop_check(belief: DiagnosisBelief, config: SessionConfig) -> bool:
    """Accept the leader? Gap rule compares the two most probable diagnoses."""
    top1, top2 = belief.top_two()
    if config.stop_rule == "top1":
        return top1 > config.sigma
    return (top1 - top2) > config.sigma


@dataclass(frozen=True)
class HistoryEntry:
    partition: Partition
    answer: str
    p_len: int  # sizes of the accepted/forbidden sets when the query was asked
    n_len: int


@dataclass
class SessionStep:
    partition: Partition
    scores: dict[str, float]
    answer: str
    belief_after: dict[AxiomSet, float]


@dataclass
class Transcript:
    config: SessionConfig
    steps: list[SessionStep] = field(default_factory=list)
    status: str = "running"
    result: tuple[Diagnosis, ...] = ()

    def queries_asked(self) -> int:
        return len(self.steps)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "config": {
                "n": self.config.n,
                "sigma": self.config.sigma,
                "strategy": self.config.strategy.kind,
                "seed": self.config.strategy.seed,
                "gamma": self.config.gamma,
                "max_queries": self.config.max_queries,
                "stop_rule": self.config.stop_rule,
            },
            "steps": [
                {
                    "query": [format_formula(f) for f in step.partition.query],
                    "dx": [sorted(d) for d in sorted(step.partition.dx, key=sorted)],
                    "dnx": [sorted(d) for d in sorted(step.partition.dnx, key=sorted)],
                    "dz": [sorted(d) for d in sorted(step.partition.dz, key=sorted)],
                    "scores": step.scores,
                    "answer": step.answer,
                    "belief_after": {
                        ",".join(sorted(d)): p for d, p in sorted(step.belief_after.items(),
                                                                  key=lambda kv: sorted(kv[0]))
                    },
                }
                for step in self.steps
            ],
            "status": self.status,
            "result": [
                {"axioms": sorted(d.ids), "probability": d.probability} for d in self.result
            ],
        }


class SessionEngine(Protocol):
    """What a session needs: fresh leading diagnoses and query selection."""

    def recompute(self, problem: DiagnosisProblem, history: Sequence[HistoryEntry],
                  n: int) -> tuple[list[Diagnosis], DiagnosisBelief]: ...

    def select(self, problem: DiagnosisProblem, belief: DiagnosisBelief,
               config: SessionConfig, exclude: frozenset) -> Partition: ...


def _replay_likelihood(classification: str, answer: str) -> float:
    if classification == "dz":
        return 0.5
    if answer == "yes":
        return 1.0 if classification == "dx" else 0.0
    return 1.0 if classification == "dnx" else 0.0


class KbSessionEngine:
    """Session backend that recomputes diagnoses and queries from the KB."""

    def __init__(self, problem: DiagnosisProblem, axiom_probs: Mapping[str, float],
                 reasoner: Reasoner | None = None, engine: DiagnosisEngine | None = None):
        self.reasoner = reasoner or Reasoner()
        self.engine = engine or DiagnosisEngine(self.reasoner)
        self.initial_problem = problem
        self.axiom_probs = dict(axiom_probs)

    def recompute(self, problem: DiagnosisProblem, history: Sequence[HistoryEntry],
                  n: int) -> tuple[list[Diagnosis], DiagnosisBelief]:
        leading = self.engine.leading_diagnoses(problem, self.axiom_probs, n)
        weights: dict[AxiomSet, float] = {}
        for diag in leading:
            w = diag.probability
            for entry in history:
                if entry.answer == "unknown":
                    continue
                w *= _replay_likelihood(
                    self._classify(diag.ids, entry, problem), entry.answer)
            weights[diag.ids] = w
        belief = normalize(DiagnosisBelief(weights))
        updated = sorted(
            (Diagnosis(ids, belief.probability(ids)) for ids in weights),
            key=lambda d: (-d.probability, len(d.ids), d.sorted_ids()))
        return updated, belief

    def _classify(self, ids: AxiomSet, entry: HistoryEntry, problem: DiagnosisProblem) -> str:
        part = entry.partition
        if ids in part.dx:
            return "dx"
        if ids in part.dnx:
            return "dnx"
        if ids in part.dz:
            return "dz"
        # a diagnosis the recorded partition never saw: classify it against
        # the problem state at ask time
        snapshot = problem.at_history(entry.p_len, entry.n_len)
        repair = snapshot.repair_sentences(ids)
        query = conj(part.query)
        if not self.reasoner.is_consistent(repair + [Not(query)]):
            return "dx"
        if not self.reasoner.is_consistent(repair + list(part.query)):
            return "dnx"
        return "dz"

    def select(self, problem: DiagnosisProblem, belief: DiagnosisBelief,
               config: SessionConfig, exclude: frozenset) -> Partition:
        builder = QueryBuilder(problem, list(belief.probs), self.reasoner)
        if config.gamma is not None and config.strategy.kind == "entropy":
            return select_query_ckk(builder, belief, config.gamma, exclude)
        return select_query(builder, belief, config.strategy, exclude)


class StaticPoolEngine:
    """Session backend over a fixed partition pool and fixed diagnoses.

    Used to drive sessions from externally supplied partition tables: the
    leading set never grows, answers only eliminate members, and selection
    scans the pool with partitions restricted to the still-alive diagnoses.
    """

    def __init__(self, priors: Mapping[AxiomSet, float], pool: Sequence[Partition]):
        self.priors = {frozenset(d): p for d, p in priors.items()}
        self.pool = list(pool)

    def recompute(self, problem: DiagnosisProblem, history: Sequence[HistoryEntry],
                  n: int) -> tuple[list[Diagnosis], DiagnosisBelief]:
        weights: dict[AxiomSet, float] = {}
        for ids, prior in self.priors.items():
            w = prior
            for entry in history:
                if entry.answer == "unknown":
                    continue
                part = entry.partition
                if ids in part.dx:
                    klass = "dx"
                elif ids in part.dnx:
                    klass = "dnx"
                else:
                    klass = "dz" if ids in part.dz else "outside"
                if klass == "outside":
                    continue
                w *= _replay_likelihood(klass, entry.answer)
            if w > 0.0:
                weights[ids] = w
        if not weights:
            raise NoDiagnosisError("every pool diagnosis was rejected")
        belief = normalize(DiagnosisBelief(weights))
        leading = sorted(
            (Diagnosis(ids, belief.probability(ids)) for ids in weights),
            key=lambda d: (-d.probability, len(d.ids), d.sorted_ids()))
        return leading[:n], belief

    def select(self, problem: DiagnosisProblem, belief: DiagnosisBelief,
               config: SessionConfig, exclude: frozenset) -> Partition:
        alive = frozenset(d for d, p in belief.probs.items() if p > 0.0)
        restricted = [
            Partition(part.query, part.dx & alive, part.dnx & alive, part.dz & alive)
            for part in self.pool
        ]
        return select_from_pool(restricted, belief, config.strategy, exclude)


class DebugSession:
    """State machine for one debugging session."""

    def __init__(self, engine: SessionEngine, config: SessionConfig,
                 problem: DiagnosisProblem):
        self.engine = engine
        self.config = config
        self.problem = problem
        self.history: list[HistoryEntry] = []
        self._excluded: set = set()  # fingerprint and class keys of asked queries
        self.leading: list[Diagnosis] = []
        self.belief: DiagnosisBelief = DiagnosisBelief({}, normalized=False)
        self.current: Partition = EMPTY_PARTITION
        self.transcript = Transcript(config)
        self.status = "running"
        self._advance()

    # -- state inspection ----------------------------------------------------

    @property
    def running(self) -> bool:
        return self.status == "running"

    def result(self) -> tuple[Diagnosis, ...]:
        return self.transcript.result

    def current_scores(self) -> dict[str, float]:
        return {
            "entropy": score(self.current, self.belief, ENTROPY),
            "split_in_half": score(self.current, self.belief, SPLIT_IN_HALF),
        }

    # -- transitions -----------------------------------------------------------

    def answer(self, value: str) -> None:
        if value not in ANSWERS:
            raise ValueError(f"answer must be one of {ANSWERS}, got {value!r}")
        if not self.running:
            raise RuntimeError(f"session is not running (status {self.status})")
        part = self.current
        entry = HistoryEntry(part, value, len(self.problem.p_tests), len(self.problem.n_tests))
        self.history.append(entry)
        self._excluded.update(exclusion_keys(part))
        if value == "yes":
            self.problem = self.problem.extended(p=part.query)
        elif value == "no":
            # "no" denies the conjunction, not each sentence: a repair may
            # entail part of the query and must survive the answer
            self.problem = self.problem.extended(n=(conj(part.query),))
        scores = {
            "entropy": score(part, self.belief, ENTROPY),
            "split_in_half": score(part, self.belief, SPLIT_IN_HALF),
        }
        try:
            self._advance()
        except NoDiagnosisError as exc:
            raise OracleContradictionError(
                "the answers rule out every candidate diagnosis") from exc
        self.transcript.steps.append(
            SessionStep(part, scores, value, dict(self.belief.probs)))

    def _advance(self) -> None:
        self.leading, self.belief = self.engine.recompute(
            self.problem, self.history, self.config.n)
        if stop_check(self.belief, self.config):
            self._stop("stopped_threshold")
            return
        if len(self.history) >= self.config.max_queries:
            self._stop("stopped_budget")
            return
        part = self.engine.select(self.problem, self.belief, self.config,
                                  frozenset(self._excluded))
        if part.is_empty():
            self._stop("stopped_no_query")
            return
        self.current = part

    def _stop(self, status: str) -> None:
        self.status = status
        self.current = EMPTY_PARTITION
        top = self.leading[0].probability if self.leading else 0.0
        tied = tuple(d for d in self.leading if abs(d.probability - top) <= 1e-12)
        self.transcript.status = status
        self.transcript.result = tied


def run_session(engine: SessionEngine, oracle: Oracle, config: SessionConfig,
                problem: DiagnosisProblem) -> tuple[tuple[Diagnosis, ...], Transcript]:
    """Drive a session to completion with the given oracle."""
    session = DebugSession(engine, config, problem)
    while session.running:
        session.answer(oracle(session.current))
    return session.result(), session.transcript


def simulated_oracle(target_kb: KnowledgeBase, reasoner: Reasoner | None = None) -> Oracle:
    """Answers from a corrected KB: yes iff it entails the whole query."""
    reasoner = reasoner or Reasoner()
    theory: list[Formula] = []
    for ax in target_kb.axioms:
        theory.extend(ax.formulas)
    theory.extend(target_kb.background)
    theory.extend(target_kb.p_tests)

    def oracle(part: Partition) -> str:
        return "yes" if reasoner.entails(theory, conj(part.query)) else "no"

    return oracle


def membership_oracle(target: AxiomSet) -> Oracle:
    """Answers by the target's side of each partition (for fixture pools)."""
    target = frozenset(target)

    def oracle(part: Partition) -> str:
        if target in part.dx:
            return "yes"
        if target in part.dnx:
            return "no"
        return "unknown"

    return oracle


def greedy_split_trace(problem: DiagnosisProblem, axiom_probs: Mapping[str, float],
                       oracle: Oracle, n: int = 9,
                       reasoner: Reasoner | None = None) -> list[Partition]:
    """Queries asked by the halving heuristic until nothing discriminates."""
    engine = KbSessionEngine(problem, axiom_probs, reasoner)
    config = SessionConfig(n=n, sigma=1.0, strategy=SPLIT_IN_HALF)
    _, transcript = run_session(engine, oracle, config, problem)
    return [step.partition for step in transcript.steps]
