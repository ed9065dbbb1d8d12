"""Minimal conflict sets on demand, computed with QuickXplain.

A set of axioms is a conflict when, together with the background and the
accepted entailments, it is unsatisfiable or entails a forbidden sentence.
Folding the forbidden-sentence case into the predicate means the divide and
conquer minimization needs a single oracle. The same recursion also serves
the query minimizer, so the generic core lives here.
"""

from __future__ import annotations

from typing import Callable, Sequence, TypeVar

from .problem import DiagnosisProblem
from .reasoner import Reasoner

T = TypeVar("T")

ConflictSet = frozenset

_PredicateT = Callable[[Sequence[T]], bool]


def minimal_subset(items: Sequence[T], holds: _PredicateT) -> list[T]:
    """Smallest-by-inclusion sublist on which a grow-monotone predicate holds.

    Requires holds(items) to be true and holds to be monotone: once true
    for a set it stays true for every superset. Items earlier in the list
    are preferred, matching the preferred-constraints behaviour of the
    original divide-and-conquer formulation; the split point is the middle
    of the current slice.
    """
    if not holds(items):
        raise ValueError("predicate does not hold on the full set")
    if holds([]):
        return []
    return _qx([], items, False, holds)


def _qx(base: list[T], items: Sequence[T], base_changed: bool, holds: _PredicateT) -> list[T]:
    if base_changed and holds(base):
        return []
    if len(items) == 1:
        return list(items)
    half = len(items) // 2
    left, right = list(items[:half]), list(items[half:])
    delta2 = _qx(base + left, right, bool(left), holds)
    delta1 = _qx(base + delta2, left, bool(delta2), holds)
    return delta1 + delta2


def check_conflict(axiom_ids, problem: DiagnosisProblem, reasoner: Reasoner | None = None) -> bool:
    """Do these axioms clash with the background, tests, or each other?"""
    ids = problem.check_ids(axiom_ids)
    return problem.checker().is_conflict(sorted(ids))


def quickxplain(candidates: Sequence[str], problem: DiagnosisProblem,
                reasoner: Reasoner | None = None,
                checker=None) -> ConflictSet | None:
    """A minimal conflict among the candidate axioms, or None if they are clean.

    Candidate order is preserved as the preference order; ties in the
    recursion resolve toward axioms that appear earlier (file order by
    default), which keeps results deterministic.
    """
    candidates = list(candidates)
    problem.check_ids(candidates)
    if checker is None:
        checker = problem.checker()

    def holds(ids: Sequence[str]) -> bool:
        return bool(ids) and checker.is_conflict(ids)

    if not holds(candidates):
        return None
    return frozenset(minimal_subset(candidates, holds))
