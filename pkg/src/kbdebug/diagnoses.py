"""Minimal diagnoses: brute-force enumeration and uniform-cost HS-Tree search.

The tree interleaves hitting-set construction with on-demand minimal
conflict computation. Nodes are expanded in order of decreasing hitting-set
probability: with per-axiom fault probabilities below one half the product
form of the prior is strictly decreasing along tree edges, so the path cost
sum of -log(p/(1-p)) visits candidate diagnoses most probable first and the
first n goals are exactly the n most probable minimal diagnoses.

Previously discovered conflicts are consulted before invoking the conflict
finder again; they stay valid when the accepted/forbidden test sets grow,
though they may lose minimality, which only costs tree width, never
correctness (goals are verified directly).
"""

from __future__ import annotations

import heapq
import itertools
import math
import threading
import warnings
from dataclasses import dataclass
from typing import Mapping

from .conflicts import quickxplain
from .errors import SearchBudgetError, SizeLimitError
from .probabilities import diagnosis_prior
from .problem import DiagnosisProblem
from .reasoner import Reasoner

AxiomSet = frozenset


@dataclass(frozen=True)
class Diagnosis:
    """A candidate repair: axioms to change, with its current probability."""

    ids: AxiomSet
    probability: float

    def sorted_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.ids))


def is_diagnosis(candidate, problem: DiagnosisProblem, reasoner: Reasoner) -> bool:
    """Does removing these axioms satisfy consistency and every test?"""
    ids = problem.check_ids(candidate)
    sentences = problem.repair_sentences(ids)
    if not reasoner.is_consistent(sentences):
        return False
    return not any(reasoner.entails(sentences, n) for n in problem.n_tests)


def brute_force_minimal_diagnoses(problem: DiagnosisProblem, reasoner: Reasoner | None = None,
                                  max_axioms: int = 20) -> set[AxiomSet]:
    """All inclusion-minimal diagnoses by subset enumeration (test oracle)."""
    ids = problem.axiom_ids
    if len(ids) > max_axioms:
        raise SizeLimitError(f"{len(ids)} axioms exceed the brute-force limit of {max_axioms}")
    checker = problem.checker()
    found: list[AxiomSet] = []
    for size in range(0, len(ids) + 1):
        for combo in itertools.combinations(ids, size):
            candidate = frozenset(combo)
            if any(existing <= candidate for existing in found):
                continue
            if checker.is_diagnosis(candidate):
                found.append(candidate)
    return set(found)


def _edge_weights(axiom_probs: Mapping[str, float], axiom_ids) -> dict[str, float]:
    weights = {}
    high = []
    for axiom_id in axiom_ids:
        p = axiom_probs[axiom_id]
        if not 0.0 < p < 1.0:
            raise ValueError(f"fault probability for {axiom_id!r} must lie in (0,1), got {p}")
        if p >= 0.5:
            high.append(axiom_id)
        weights[axiom_id] = -math.log(p / (1.0 - p))
    if high:
        warnings.warn(
            f"fault probabilities >= 0.5 for {sorted(high)}; search order may "
            "visit non-minimal candidates early", stacklevel=3)
    return weights


class DiagnosisEngine:
    """HS-Tree search bound to one KB, with a shared minimal-conflict cache."""

    def __init__(self, reasoner: Reasoner | None = None, node_budget: int = 100_000):
        self.reasoner = reasoner or Reasoner()
        self.node_budget = node_budget
        self._conflicts: list[AxiomSet] = []
        self._kb = None
        self._lock = threading.Lock()

    def known_conflicts(self) -> tuple[AxiomSet, ...]:
        with self._lock:
            return tuple(self._conflicts)

    def _conflict_for(self, path: AxiomSet, problem: DiagnosisProblem,
                      checker) -> AxiomSet | None:
        """A conflict disjoint from the path: reuse one or compute fresh."""
        with self._lock:
            if self._kb is not problem.kb:
                self._conflicts = []
                self._kb = problem.kb
            for conflict in self._conflicts:
                if not (conflict & path):
                    return conflict
        candidates = [axiom_id for axiom_id in problem.axiom_ids if axiom_id not in path]
        conflict = quickxplain(candidates, problem, self.reasoner, checker=checker)
        if conflict is not None:
            with self._lock:
                if conflict not in self._conflicts:
                    self._conflicts.append(conflict)
        return conflict

    def leading_diagnoses(self, problem: DiagnosisProblem, axiom_probs: Mapping[str, float],
                          n: int) -> list[Diagnosis]:
        """Up to n most probable minimal diagnoses, probabilities normalized.

        Fewer than n come back only when no further minimal diagnosis
        exists. Ties in probability break toward fewer axioms, then
        lexicographic axiom ids.
        """
        if n < 1:
            raise ValueError("n must be at least 1")
        problem.validate(self.reasoner)
        order = problem.axiom_ids
        weights = _edge_weights(axiom_probs, order)
        checker = problem.checker()

        heap: list[tuple[float, int, tuple[str, ...]]] = [(0.0, 0, ())]
        enqueued: set[AxiomSet] = {frozenset()}
        goals: list[AxiomSet] = []
        pops = 0
        while heap and len(goals) < n:
            pops += 1
            if pops > self.node_budget:
                raise SearchBudgetError(f"hitting-set search exceeded {self.node_budget} nodes")
            cost, _, path_ids = heapq.heappop(heap)
            path = frozenset(path_ids)
            if any(goal <= path for goal in goals):
                continue
            conflict = self._conflict_for(path, problem, checker)
            if conflict is None:
                if self._minimal_goal(path, checker):
                    goals.append(path)
                continue
            for axiom_id in (a for a in order if a in conflict):
                child = path | {axiom_id}
                if child in enqueued:
                    continue
                enqueued.add(child)
                heapq.heappush(
                    heap,
                    (cost + weights[axiom_id], len(child), tuple(sorted(child))))

        priors = {goal: diagnosis_prior(goal, order, axiom_probs) for goal in goals}
        ranked = sorted(goals, key=lambda g: (-priors[g], len(g), tuple(sorted(g))))
        total = sum(priors.values())
        return [Diagnosis(g, priors[g] / total) for g in ranked]

    @staticmethod
    def _minimal_goal(path: AxiomSet, checker) -> bool:
        # the conflict finder already certified the path as a diagnosis;
        # diagnoses are monotone, so remove-one is an exact minimality test
        return not any(checker.is_diagnosis(path - {axiom_id}) for axiom_id in path)
