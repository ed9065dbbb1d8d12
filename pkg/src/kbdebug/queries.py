"""Discriminating queries over leading diagnoses: generation, scoring, selection.

A query is a set of sentences that some repairs entail (predicting a yes
answer), some contradict (predicting no), and some neither. Candidate
queries arise as common entailments of the repairs in a seed set; scoring
is strategy-dependent (one-step expected-entropy, split-in-half, or seeded
random) and selection searches the subset lattice of the leading diagnoses
either exhaustively (depth-first, most probable diagnosis first) or in the
set-differencing order of the complete Karmarkar-Karp partitioning scheme
with an early-exit score threshold.
"""

from __future__ import annotations

import bisect
import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .conflicts import minimal_subset
from .errors import PartitionBoundError
from .formulas import Formula, Not, atoms as formula_atoms, conj, format_formula, formula_sort_key
from .probabilities import DiagnosisBelief, answer_probabilities
from .problem import DiagnosisProblem
from .reasoner import Reasoner

AxiomSet = frozenset


@dataclass(frozen=True)
class Partition:
    """A query with the induced split of the leading diagnoses."""

    query: tuple[Formula, ...]
    dx: frozenset  # predict yes
    dnx: frozenset  # predict no
    dz: frozenset  # no prediction

    def is_empty(self) -> bool:
        return not self.query

    def leading_sets(self) -> frozenset:
        return self.dx | self.dnx | self.dz

    def fingerprint(self) -> tuple[str, ...]:
        return tuple(sorted(format_formula(f) for f in self.query))


EMPTY_PARTITION = Partition((), frozenset(), frozenset(), frozenset())

STRATEGY_KINDS = ("entropy", "split_in_half", "random")


@dataclass(frozen=True)
class Strategy:
    kind: str
    seed: int = 0

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}")


ENTROPY = Strategy("entropy")
SPLIT_IN_HALF = Strategy("split_in_half")


def _plog2p(p: float) -> float:
    return p * math.log2(p) if p > 0.0 else 0.0


def score(part: Partition, belief: DiagnosisBelief, strategy: Strategy) -> float:
    """Query quality in [0,1]; lower is better, the empty partition scores 1."""
    if part.is_empty():
        return 1.0
    if strategy.kind == "entropy":
        p_yes, p_no = answer_probabilities(part, belief)
        p_dz = sum(belief.probability(d) for d in part.dz)
        return _plog2p(p_yes) + _plog2p(p_no) + p_dz + 1.0
    if strategy.kind == "split_in_half":
        total = len(part.dx) + len(part.dnx) + len(part.dz)
        return (abs(len(part.dx) - len(part.dnx)) + len(part.dz)) / total
    digest = hashlib.sha256(
        repr((strategy.seed,) + part.fingerprint()).encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class QueryBuilder:
    """Query construction for one leading set, with per-round caches.

    Repair entailments are enumerated once per diagnosis; partition
    classification is memoized by the entailment set, so the exponential
    subset searches mostly hit caches.
    """

    def __init__(self, problem: DiagnosisProblem, leading: Iterable[AxiomSet],
                 reasoner: Reasoner | None = None):
        self.problem = problem
        self.reasoner = reasoner or Reasoner()
        self.leading = tuple(dict.fromkeys(frozenset(d) for d in leading))
        vocab = set(problem.kb.atom_names())
        for f in problem.p_tests + problem.n_tests:
            vocab |= formula_atoms(f)
        self.vocab = sorted(vocab)
        self._base = tuple(problem.base_sentences())
        self._entailments: dict[AxiomSet, frozenset] = {}
        self._baseline_entailed: frozenset | None = None
        self._classified: dict[frozenset, Partition] = {}
        self._minimized: dict[tuple[str, ...], Partition] = {}
        self.candidate_calls = 0

    # -- entailment caches ---------------------------------------------------

    def entailments(self, diagnosis: AxiomSet) -> frozenset:
        cached = self._entailments.get(diagnosis)
        if cached is None:
            sentences = self.problem.repair_sentences(diagnosis)
            cached = frozenset(
                self.reasoner.enumerate_entailments(sentences, self.vocab, baseline=self._base))
            self._entailments[diagnosis] = cached
        return cached

    def baseline_entailed(self) -> frozenset:
        if self._baseline_entailed is None:
            self._baseline_entailed = frozenset(
                self.reasoner.enumerate_entailments(self._base, self.vocab))
        return self._baseline_entailed

    # -- partition construction ----------------------------------------------

    def candidate(self, dx_seed: Iterable[AxiomSet]) -> Partition:
        """Common-entailment query for a seed set, or the empty partition."""
        self.candidate_calls += 1
        seeds = [frozenset(d) for d in dx_seed]
        if not seeds:
            return EMPTY_PARTITION
        common = set(self.entailments(seeds[0]))
        for d in seeds[1:]:
            common &= self.entailments(d)
            if not common:
                return EMPTY_PARTITION
        common -= self.baseline_entailed()
        if not common:
            return EMPTY_PARTITION
        return self._classify(frozenset(common))

    def _classify(self, sentences: frozenset) -> Partition:
        cached = self._classified.get(sentences)
        if cached is None:
            cached = self._classify_fresh(sentences)
            self._classified[sentences] = cached
        return cached

    def _classify_fresh(self, sentences: frozenset) -> Partition:
        query = conj(sorted(sentences, key=formula_sort_key))
        dx, dnx, dz = [], [], []
        for d in self.leading:
            if sentences <= self.entailments(d):
                dx.append(d)
                continue
            repair = self.problem.repair_sentences(d)
            if not self.reasoner.is_consistent(repair + [Not(query)]):
                dx.append(d)
            elif not self.reasoner.is_consistent(repair + sorted(sentences, key=formula_sort_key)):
                dnx.append(d)
            else:
                dz.append(d)
        return Partition(
            tuple(sorted(sentences, key=formula_sort_key)),
            frozenset(dx), frozenset(dnx), frozenset(dz))

    # -- minimization ----------------------------------------------------------

    def minimize(self, part: Partition) -> Partition:
        """Irreducible sub-query with the identical classification."""
        if part.is_empty():
            return part
        cached = self._minimized.get(part.fingerprint())
        if cached is not None:
            return cached
        target = (part.dx, part.dnx, part.dz)

        def preserves(subset: Sequence[Formula]) -> bool:
            if not subset:
                return False
            classified = self._classify(frozenset(subset))
            return (classified.dx, classified.dnx, classified.dz) == target

        reduced = minimal_subset(list(part.query), preserves)
        result = Partition(tuple(sorted(reduced, key=formula_sort_key)),
                           part.dx, part.dnx, part.dz)
        self._minimized[part.fingerprint()] = result
        self._minimized[result.fingerprint()] = result
        return result


def create_query(dx_seed: Iterable[AxiomSet], leading: Iterable[AxiomSet],
                 problem: DiagnosisProblem, reasoner: Reasoner | None = None) -> Partition:
    """One-shot partition for a seed set (see QueryBuilder for batched use)."""
    return QueryBuilder(problem, leading, reasoner).candidate(dx_seed)


def minimize_query(part: Partition, problem: DiagnosisProblem,
                   reasoner: Reasoner | None = None) -> Partition:
    return QueryBuilder(problem, part.leading_sets(), reasoner).minimize(part)


def generate_partitions(leading: Iterable[AxiomSet], problem: DiagnosisProblem,
                        reasoner: Reasoner | None = None, bound: int = 9) -> list[Partition]:
    """All distinct partitions over non-empty seed subsets of the leading set.

    Duplicates (same induced split) keep the smallest query. Exponential in
    the leading count, hence the bound.
    """
    builder = QueryBuilder(problem, leading, reasoner)
    diagnoses = builder.leading
    if len(diagnoses) > bound:
        raise PartitionBoundError(
            f"{len(diagnoses)} leading diagnoses exceed the partition bound of {bound}")
    seen: dict[tuple, Partition] = {}
    for mask in range(1, 2 ** len(diagnoses)):
        seeds = [d for i, d in enumerate(diagnoses) if mask >> i & 1]
        part = builder.candidate(seeds)
        if part.is_empty():
            continue
        key = (part.dx, part.dnx, part.dz)
        kept = seen.get(key)
        if kept is None or len(part.query) < len(kept.query):
            seen[key] = part
    return sorted(seen.values(), key=lambda p: p.fingerprint())


def _ranked(belief: DiagnosisBelief) -> list[AxiomSet]:
    return sorted(belief.probs, key=lambda d: (-belief.probs[d], len(d), tuple(sorted(d))))


def discriminates(part: Partition) -> bool:
    """Can some answer eliminate a diagnosis? Needs two nonempty parts."""
    return sum(1 for side in (part.dx, part.dnx, part.dz) if side) >= 2


def exclusion_keys(part: Partition) -> tuple:
    """Keys under which an asked query is excluded from re-selection.

    The sentence fingerprint catches literal repeats; the class triple
    catches unminimized candidates that would minimize to an already
    asked query (minimization preserves the induced split).
    """
    return (part.fingerprint(), (part.dx, part.dnx, part.dz))


def _excluded(part: Partition, exclude: frozenset) -> bool:
    return part.fingerprint() in exclude or (part.dx, part.dnx, part.dz) in exclude


class _Found(Exception):
    def __init__(self, part: Partition):
        self.part = part


class _Selection:
    """Tracks the best partition; ties resolve to the smaller minimized query."""

    def __init__(self, builder: QueryBuilder, belief: DiagnosisBelief, strategy: Strategy,
                 exclude: frozenset):
        self.builder = builder
        self.belief = belief
        self.strategy = strategy
        self.exclude = exclude
        self.best: Partition | None = None
        self.best_score = math.inf

    def offer(self, part: Partition) -> float:
        if part.is_empty() or not discriminates(part) or _excluded(part, self.exclude):
            return math.inf
        value = score(part, self.belief, self.strategy)
        if value < self.best_score - 1e-12:
            self.best, self.best_score = part, value
        elif abs(value - self.best_score) <= 1e-12 and self.best is not None:
            kept = self.builder.minimize(self.best)
            offered = self.builder.minimize(part)
            if len(offered.query) < len(kept.query):
                self.best, self.best_score = part, value
        return value

    def result(self) -> Partition:
        if self.best is None:
            return EMPTY_PARTITION
        return self.builder.minimize(self.best)


def select_query(builder: QueryBuilder, belief: DiagnosisBelief, strategy: Strategy,
                 exclude: Iterable[tuple[str, ...]] = ()) -> Partition:
    """Exhaustive minimum-score query over all seed subsets, minimized.

    Depth-first over include/exclude decisions with diagnoses ordered by
    descending probability and the include branch explored first, so
    promising seed sets are evaluated early. Returns the empty partition iff
    no discriminating query exists (or all were excluded).
    """
    diagnoses = _ranked(belief)
    selection = _Selection(builder, belief, strategy, frozenset(exclude))

    def walk(index: int, seeds: list[AxiomSet]) -> None:
        if index == len(diagnoses):
            if seeds:
                selection.offer(builder.candidate(seeds))
            return
        seeds.append(diagnoses[index])
        walk(index + 1, seeds)
        seeds.pop()
        walk(index + 1, seeds)

    walk(0, [])
    return selection.result()


def select_query_ckk(builder: QueryBuilder, belief: DiagnosisBelief, gamma: float,
                     exclude: Iterable[tuple[str, ...]] = ()) -> Partition:
    """Entropy-score query search in set-differencing order with early exit.

    Explores two-way splits of the leading diagnoses, pairing the largest
    probability masses first (difference branch before sum branch), and
    stops at the first query scoring below gamma; otherwise the best
    partition found after exhausting every split is returned. Each seed
    subset is evaluated at most once, so the number of query constructions
    never exceeds the exhaustive search's.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    selection = _Selection(builder, belief, ENTROPY, frozenset(exclude))
    diagnoses = _ranked(belief)

    def offer_sides(*sides: frozenset) -> None:
        for side in sides:
            if not side:
                continue
            value = selection.offer(builder.candidate(sorted(side, key=lambda d: tuple(sorted(d)))))
            if value < gamma:
                raise _Found(selection.result())

    def walk(items: list[tuple[float, frozenset, frozenset]]) -> None:
        if len(items) == 1:
            _, side_a, side_b = items[0]
            offer_sides(side_a, side_b)
            return
        (w1, a1, b1) = items[0]
        (w2, a2, b2) = items[1]
        rest = items[2:]
        for merged in (
            (w1 - w2, a1 | b2, b1 | a2),  # oppose the two largest first
            (w1 + w2, a1 | a2, b1 | b2),
        ):
            ordered = list(rest)
            bisect.insort(ordered, merged, key=lambda item: (-item[0], _side_key(item)))
            walk(ordered)

    start = [(belief.probs[d], frozenset([d]), frozenset()) for d in diagnoses]
    start.sort(key=lambda item: (-item[0], _side_key(item)))
    try:
        if start:
            walk(start)
    except _Found as found:
        return found.part
    return selection.result()


def _side_key(item: tuple[float, frozenset, frozenset]) -> tuple:
    _, side_a, side_b = item
    return (tuple(sorted(tuple(sorted(d)) for d in side_a)),
            tuple(sorted(tuple(sorted(d)) for d in side_b)))


def select_from_pool(pool: Sequence[Partition], belief: DiagnosisBelief, strategy: Strategy,
                     exclude: Iterable[tuple[str, ...]] = ()) -> Partition:
    """Minimum-score partition from a fixed pool (ties keep pool order)."""
    excluded = frozenset(exclude)
    best: Partition | None = None
    best_score = math.inf
    for part in pool:
        if part.is_empty() or not discriminates(part) or _excluded(part, excluded):
            continue
        value = score(part, belief, strategy)
        if value < best_score - 1e-12:
            best, best_score = part, value
        elif abs(value - best_score) <= 1e-12 and best is not None \
                and len(part.query) < len(best.query):
            best, best_score = part, value
    return best if best is not None else EMPTY_PARTITION
