import random

import pytest

from kbdebug.diagnoses import (
    Diagnosis,
    DiagnosisEngine,
    brute_force_minimal_diagnoses,
    is_diagnosis,
)
from kbdebug.errors import NoDiagnosisError, SizeLimitError, UnknownAxiomError
from kbdebug.formulas import Atom, Not
from kbdebug.kbfile import KnowledgeBase, parse_kb
from kbdebug.probabilities import diagnosis_prior
from kbdebug.problem import DiagnosisProblem
from kbdebug.reasoner import Reasoner

from .ex2_fixture import AXIOM_PROBS, PRIOR_ROW, DIAGNOSES
from .oracles import random_problem, truth_table_is_diagnosis


def test_is_diagnosis_with_tests(ex1_problem, reasoner):
    problem = ex1_problem.extended(p=(Atom("B_w"),), n=(Atom("C_w"),))
    assert is_diagnosis({"ax2"}, problem, reasoner)
    # removing ax1 contradicts the required entailment B_w
    assert not is_diagnosis({"ax1"}, problem, reasoner)
    # removing ax3 still entails the forbidden C_w
    assert not is_diagnosis({"ax3"}, problem, reasoner)


def test_is_diagnosis_unknown_id(ex1_problem, reasoner):
    with pytest.raises(UnknownAxiomError):
        is_diagnosis({"zz"}, ex1_problem, reasoner)


def test_brute_force_ex1(ex1_problem):
    assert brute_force_minimal_diagnoses(ex1_problem) == {
        frozenset({"ax1"}), frozenset({"ax2"}), frozenset({"ax3"}), frozenset({"ax4"})}


def test_brute_force_consistent_kb():
    problem = DiagnosisProblem.from_kb(parse_kb("[axioms]\nax1: X\n"))
    assert brute_force_minimal_diagnoses(problem) == {frozenset()}


def test_brute_force_ex2(ex2_problem):
    assert brute_force_minimal_diagnoses(ex2_problem) == set(DIAGNOSES)


def test_brute_force_size_limit():
    kb = KnowledgeBase(tuple(
        parse_kb(f"[axioms]\nax{i}: X{i}\n").axioms[0] for i in range(21)))
    with pytest.raises(SizeLimitError):
        brute_force_minimal_diagnoses(DiagnosisProblem.from_kb(kb), max_axioms=20)


def test_leading_ex1_uniform(ex1_problem):
    engine = DiagnosisEngine()
    leads = engine.leading_diagnoses(ex1_problem, {a: 0.01 for a in ex1_problem.axiom_ids}, 9)
    assert [sorted(d.ids) for d in leads] == [["ax1"], ["ax2"], ["ax3"], ["ax4"]]
    assert all(abs(d.probability - 0.25) < 1e-12 for d in leads)


def test_leading_ex2_matches_published_priors(ex2_problem, ex2_profile):
    from kbdebug.probabilities import axiom_probabilities

    engine = DiagnosisEngine()
    probs = axiom_probabilities(ex2_problem.kb, ex2_profile)
    leads = engine.leading_diagnoses(ex2_problem, probs, 9)
    by_ids = {d.ids: d.probability for d in leads}
    assert set(by_ids) == set(DIAGNOSES)
    for ids, published in PRIOR_ROW.items():
        assert abs(by_ids[ids] - published) < 0.01


def test_leading_after_forbidden_answer(ex1_problem):
    problem = ex1_problem.extended(n=(Atom("C_w"),))
    engine = DiagnosisEngine()
    leads = engine.leading_diagnoses(problem, {a: 0.01 for a in problem.axiom_ids}, 9)
    assert {frozenset(d.ids) for d in leads} == {frozenset({"ax1"}), frozenset({"ax2"})}


def test_leading_requires_valid_problem(ex1_problem):
    broken = ex1_problem.extended(p=(Atom("Z"),), n=(Atom("Z"),))
    with pytest.raises(NoDiagnosisError):
        DiagnosisEngine().leading_diagnoses(broken, {a: 0.01 for a in broken.axiom_ids}, 3)


def test_high_probability_warns(ex1_problem):
    probs = {a: 0.01 for a in ex1_problem.axiom_ids}
    probs["ax1"] = 0.7
    with pytest.warns(UserWarning):
        DiagnosisEngine().leading_diagnoses(ex1_problem, probs, 2)


def test_leading_matches_brute_force_on_random_instances():
    rng = random.Random(23)
    checked = 0
    while checked < 15:
        problem = random_problem(rng, max_axioms=7, max_atoms=5)
        try:
            problem.validate(Reasoner())
        except NoDiagnosisError:
            continue
        checked += 1
        probs = {a: rng.uniform(0.01, 0.3) for a in problem.axiom_ids}
        engine = DiagnosisEngine()
        leads = engine.leading_diagnoses(problem, probs, 64)
        exact = brute_force_minimal_diagnoses(problem)
        assert {d.ids for d in leads} == exact
        # ordering is non-increasing in the product-form prior
        priors = [diagnosis_prior(d.ids, problem.axiom_ids, probs) for d in leads]
        assert all(priors[i] >= priors[i + 1] - 1e-15 for i in range(len(priors) - 1))
        # every reported diagnosis hits every discovered conflict
        for conflict in engine.known_conflicts():
            assert all(d.ids & conflict for d in leads)
        # independent truth-table verification of diagnosis-hood
        for d in leads:
            assert truth_table_is_diagnosis(d.ids, problem)


def test_rejection_is_monotone(ex1_problem, reasoner):
    # adding answers never turns a non-diagnosis into a diagnosis
    extended = ex1_problem.extended(p=(Atom("B_w"),), n=(Atom("C_w"),))
    for ids in ({"ax1"}, {"ax2"}, {"ax3"}, {"ax4"}, {"ax1", "ax2"}):
        if is_diagnosis(ids, extended, reasoner):
            assert is_diagnosis(ids, ex1_problem, reasoner)


def test_diagnosis_dataclass_sorted_ids():
    d = Diagnosis(frozenset({"b", "a"}), 0.5)
    assert d.sorted_ids() == ("a", "b")
