import json
import random

import pytest

from kbdebug.diagnoses import DiagnosisEngine, is_diagnosis
from kbdebug.errors import OracleContradictionError
from kbdebug.formulas import Atom, Not, Or, format_formula
from kbdebug.kbfile import KnowledgeBase, parse_kb
from kbdebug.probabilities import DiagnosisBelief, axiom_probabilities
from kbdebug.problem import DiagnosisProblem
from kbdebug.queries import EMPTY_PARTITION, Strategy
from kbdebug.reasoner import Reasoner
from kbdebug.sessions import (
    DebugSession,
    KbSessionEngine,
    SessionConfig,
    StaticPoolEngine,
    greedy_split_trace,
    membership_oracle,
    run_session,
    simulated_oracle,
    stop_check,
)

from .ex2_fixture import D3, D4, POOL, priors_from_axiom_probs
from .oracles import random_problem

UNIFORM = {f"ax{i}": 0.01 for i in range(1, 5)}


def _ex1_engine(ex1_problem, overrides=None):
    probs = dict(UNIFORM)
    if overrides:
        probs.update(overrides)
    return KbSessionEngine(ex1_problem, probs)


def _ex1_target_kb(ex1_kb, removed="ax1"):
    return KnowledgeBase(
        tuple(ax for ax in ex1_kb.axioms if ax.id != removed),
        ex1_kb.background)


def test_stop_check_examples():
    config = SessionConfig(sigma=0.95)
    high = DiagnosisBelief({D4: 0.9918, D3: 0.0082}, normalized=True)
    assert stop_check(high, config)

    config65 = SessionConfig(sigma=0.65)
    spread = DiagnosisBelief({D4: 0.7585, frozenset({"a"}): 0.2352,
                              D3: 0.0063}, normalized=True)
    assert not stop_check(spread, config65)  # gap 0.5233 < 0.65

    single = DiagnosisBelief({D4: 1.0}, normalized=True)
    assert stop_check(single, SessionConfig(sigma=0.99))


def test_stop_rule_top1():
    spread = DiagnosisBelief({D4: 0.7585, frozenset({"a"}): 0.2352,
                              D3: 0.0063}, normalized=True)
    assert stop_check(spread, SessionConfig(sigma=0.65, stop_rule="top1"))


def test_entropy_session_ex1(ex1_kb, ex1_problem):
    oracle = simulated_oracle(_ex1_target_kb(ex1_kb))
    engine = _ex1_engine(ex1_problem)
    result, transcript = run_session(engine, oracle, SessionConfig(), ex1_problem)
    assert transcript.queries_asked() == 2
    assert [sorted(d.ids) for d in result] == [["ax1"]]
    asked = [[format_formula(f) for f in step.partition.query] for step in transcript.steps]
    assert asked == [["C_w"], ["B_w"]]
    assert [step.answer for step in transcript.steps] == ["no", "no"]


def test_elevated_prior_one_query(ex1_kb, ex1_problem):
    oracle = simulated_oracle(_ex1_target_kb(ex1_kb))
    engine = _ex1_engine(ex1_problem, {"ax1": 0.025})
    result, transcript = run_session(engine, oracle, SessionConfig(), ex1_problem)
    assert transcript.queries_asked() == 1
    assert [format_formula(f) for f in transcript.steps[0].partition.query] == ["B_w"]
    assert [sorted(d.ids) for d in result] == [["ax1"]]


def test_ex2_pool_entropy_exhaustive():
    engine = StaticPoolEngine(priors_from_axiom_probs(), POOL)
    problem = DiagnosisProblem(KnowledgeBase())
    result, transcript = run_session(
        engine, membership_oracle(D4),
        SessionConfig(sigma=1.0, strategy=Strategy("entropy")), problem)
    assert transcript.queries_asked() == 3
    assert [sorted(d.ids) for d in result] == [["ax2", "ax4"]]
    sequence = [step.partition.fingerprint() for step in transcript.steps]
    assert sequence == [POOL[2].fingerprint(), POOL[3].fingerprint(), POOL[0].fingerprint()]
    final = transcript.steps[-1].belief_after
    assert final[D4] == pytest.approx(1.0)


def test_ex2_pool_entropy_threshold_stops_early():
    engine = StaticPoolEngine(priors_from_axiom_probs(), POOL)
    problem = DiagnosisProblem(KnowledgeBase())
    result, transcript = run_session(
        engine, membership_oracle(D4),
        SessionConfig(sigma=0.95, strategy=Strategy("entropy")), problem)
    assert transcript.queries_asked() == 2
    assert transcript.status == "stopped_threshold"
    final = transcript.steps[-1].belief_after
    assert final[D4] == pytest.approx(0.9918, abs=2e-3)
    assert final[D3] == pytest.approx(0.0082, abs=2e-3)


def test_ex2_pool_split_needs_three():
    engine = StaticPoolEngine(priors_from_axiom_probs(), POOL)
    problem = DiagnosisProblem(KnowledgeBase())
    result, transcript = run_session(
        engine, membership_oracle(D4),
        SessionConfig(sigma=1.0, strategy=Strategy("split_in_half")), problem)
    assert transcript.queries_asked() == 3
    assert [step.partition.fingerprint() for step in transcript.steps] == \
        [POOL[0].fingerprint(), POOL[1].fingerprint(), POOL[3].fingerprint()]
    assert [sorted(d.ids) for d in result] == [["ax2", "ax4"]]


def test_grounded_ex2_sessions_match_published_counts(ex2_kb, ex2_problem, ex2_profile):
    # the grounded KB generates its own seven partitions; query sentences
    # differ from the original modelling but the session lengths agree
    probs = axiom_probabilities(ex2_problem.kb, ex2_profile)
    target = frozenset(["ax4", "ax2"])
    target_kb = KnowledgeBase(
        tuple(ax for ax in ex2_kb.axioms if ax.id not in target), ex2_kb.background)
    for sigma, expected_queries, status in ((1.0, 3, "stopped_no_query"),
                                            (0.95, 2, "stopped_threshold")):
        engine = KbSessionEngine(ex2_problem, probs, Reasoner())
        result, transcript = run_session(
            engine, simulated_oracle(target_kb), SessionConfig(sigma=sigma), ex2_problem)
        assert transcript.queries_asked() == expected_queries
        assert transcript.status == status
        assert [sorted(d.ids) for d in result] == [["ax2", "ax4"]]


def test_greedy_split_trace_ex1(ex1_kb, ex1_problem):
    oracle = simulated_oracle(_ex1_target_kb(ex1_kb))
    trace = greedy_split_trace(ex1_problem, UNIFORM, oracle)
    assert len(trace) == 2


def test_greedy_split_trace_single_diagnosis():
    kb = parse_kb("[axioms]\nax1: X\nax2: Y\n[background]\n!X\n")
    problem = DiagnosisProblem.from_kb(kb)
    trace = greedy_split_trace(problem, {"ax1": 0.01, "ax2": 0.01}, lambda part: "yes")
    assert trace == []


def test_simulated_oracle_answers(ex1_kb, reasoner):
    oracle = simulated_oracle(_ex1_target_kb(ex1_kb), reasoner)
    from kbdebug.queries import Partition

    ask_c = Partition((Atom("C_w"),), frozenset(), frozenset(), frozenset())
    assert oracle(ask_c) == "no"
    ask_b = Partition((Atom("B_w"),), frozenset(), frozenset(), frozenset())
    assert oracle(ask_b) == "no"
    tautology = Partition((Or((Atom("Z"), Not(Atom("Z")))),), frozenset(), frozenset(), frozenset())
    assert oracle(tautology) == "yes"


def test_unknown_answer_moves_to_next_query(ex1_problem):
    engine = _ex1_engine(ex1_problem)
    session = DebugSession(engine, SessionConfig(), ex1_problem)
    first = session.current
    assert [format_formula(f) for f in first.query] == ["C_w"]
    session.answer("unknown")
    assert session.running
    second = session.current
    assert second.fingerprint() != first.fingerprint()
    # P and N untouched
    assert session.problem.p_tests == ()
    assert session.problem.n_tests == ()


def test_unknown_exhausts_queries(ex1_problem):
    engine = _ex1_engine(ex1_problem)
    session = DebugSession(engine, SessionConfig(), ex1_problem)
    while session.running:
        session.answer("unknown")
    assert session.status == "stopped_no_query"
    # all four diagnoses survive untouched
    assert len(session.leading) == 4


def test_max_queries_budget(ex1_problem):
    engine = _ex1_engine(ex1_problem)
    session = DebugSession(engine, SessionConfig(max_queries=1), ex1_problem)
    session.answer("unknown")
    assert session.status == "stopped_budget"


def test_contradictory_answers_surface_as_oracle_error():
    # when the accumulated answers admit no diagnosis at all, the session
    # reports the oracle contradiction instead of the raw search error
    from kbdebug.errors import NoDiagnosisError

    class ExplodingEngine:
        def __init__(self, inner):
            self.inner = inner

        def recompute(self, problem, history, n):
            if history:
                raise NoDiagnosisError("answers rule out everything")
            return self.inner.recompute(problem, history, n)

        def select(self, problem, belief, config, exclude):
            return self.inner.select(problem, belief, config, exclude)

    engine = ExplodingEngine(StaticPoolEngine(priors_from_axiom_probs(), POOL))
    problem = DiagnosisProblem(KnowledgeBase())
    session = DebugSession(engine, SessionConfig(), problem)
    with pytest.raises(OracleContradictionError):
        session.answer("no")


def test_replay_determinism(ex1_kb, ex1_problem):
    oracle = simulated_oracle(_ex1_target_kb(ex1_kb, removed="ax3"))
    runs = []
    for _ in range(2):
        engine = _ex1_engine(ex1_problem)
        result, transcript = run_session(engine, oracle, SessionConfig(), ex1_problem)
        runs.append(json.dumps(transcript.to_dict(), sort_keys=True))
    assert runs[0] == runs[1]


def test_target_never_eliminated_random():
    rng = random.Random(31)
    reasoner = Reasoner()
    checked = 0
    while checked < 8:
        problem = random_problem(rng, max_axioms=6, max_atoms=5)
        from kbdebug.diagnoses import brute_force_minimal_diagnoses
        from kbdebug.errors import NoDiagnosisError

        try:
            problem.validate(reasoner)
        except NoDiagnosisError:
            continue
        diagnoses = sorted(brute_force_minimal_diagnoses(problem), key=sorted)
        if len(diagnoses) < 2:
            continue
        checked += 1
        target = diagnoses[rng.randrange(len(diagnoses))]
        target_kb = KnowledgeBase(
            tuple(ax for ax in problem.kb.axioms if ax.id not in target),
            problem.kb.background)
        oracle = simulated_oracle(target_kb, reasoner)
        probs = {a: 0.05 for a in problem.axiom_ids}
        engine = KbSessionEngine(problem, probs, reasoner)
        session = DebugSession(engine, SessionConfig(sigma=1.0), problem)
        while session.running:
            session.answer(oracle(session.current))
            assert is_diagnosis(target, session.problem, reasoner)
        assert any(d.ids == target for d in session.result()) or \
            is_diagnosis(target, session.problem, reasoner)


def test_transcript_structure(ex1_kb, ex1_problem):
    oracle = simulated_oracle(_ex1_target_kb(ex1_kb))
    engine = _ex1_engine(ex1_problem)
    _, transcript = run_session(engine, oracle, SessionConfig(), ex1_problem)
    doc = transcript.to_dict()
    assert doc["schema"] == 1
    assert doc["config"]["sigma"] == 0.95
    assert doc["status"] == "stopped_threshold"
    assert doc["result"] == [{"axioms": ["ax1"], "probability": 1.0}]
    step = doc["steps"][0]
    assert set(step) == {"query", "dx", "dnx", "dz", "scores", "answer", "belief_after"}
    assert step["scores"]["entropy"] == pytest.approx(0.0)
