import random

import pytest

from kbdebug.conflicts import check_conflict, minimal_subset, quickxplain
from kbdebug.errors import UnknownAxiomError
from kbdebug.formulas import Atom
from kbdebug.problem import DiagnosisProblem

from .oracles import all_minimal_conflicts, random_problem


def test_ex1_full_conflict(ex1_problem, reasoner):
    assert quickxplain(list(ex1_problem.axiom_ids), ex1_problem, reasoner) == \
        frozenset({"ax1", "ax2", "ax3", "ax4"})


def test_single_axiom_is_clean(ex1_problem, reasoner):
    assert quickxplain(["ax1"], ex1_problem, reasoner) is None


def test_forbidden_sentence_makes_conflict(ex1_problem, reasoner):
    problem = ex1_problem.extended(n=(Atom("D_w"),))
    assert quickxplain(["ax1", "ax2", "ax3"], problem, reasoner) == \
        frozenset({"ax1", "ax2", "ax3"})


def test_check_conflict_examples(ex1_problem, reasoner):
    assert check_conflict(["ax1", "ax2", "ax3", "ax4"], ex1_problem, reasoner)
    assert not check_conflict(["ax2", "ax3"], ex1_problem, reasoner)
    assert not check_conflict([], ex1_problem, reasoner)


def test_unknown_axiom_id(ex1_problem, reasoner):
    with pytest.raises(UnknownAxiomError):
        check_conflict(["nope"], ex1_problem, reasoner)


def test_output_is_subset_of_candidates(ex2_problem, reasoner):
    candidates = ["ax3", "ax4", "ax1"]
    conflict = quickxplain(candidates, ex2_problem, reasoner)
    assert conflict == frozenset({"ax1", "ax3", "ax4"})
    assert conflict <= set(candidates)


def test_minimal_subset_prefers_early_items():
    # predicate: the set contains at least two even numbers
    items = [2, 4, 5, 6]
    result = minimal_subset(items, lambda s: sum(1 for x in s if x % 2 == 0) >= 2)
    assert result == [2, 4]


def test_minimal_subset_requires_predicate_on_full_set():
    with pytest.raises(ValueError):
        minimal_subset([1, 2], lambda s: False)


def test_random_instances_minimal_and_match_brute_force():
    rng = random.Random(11)
    checked = 0
    while checked < 25:
        problem = random_problem(rng, max_axioms=6, max_atoms=5)
        ids = list(problem.axiom_ids)
        conflict = quickxplain(ids, problem)
        exact = all_minimal_conflicts(problem)
        if conflict is None:
            assert not exact
            continue
        checked += 1
        assert conflict in exact
        # remove-one re-check of both defining invariants
        assert check_conflict(conflict, problem)
        for axiom_id in conflict:
            assert not check_conflict(conflict - {axiom_id}, problem)
