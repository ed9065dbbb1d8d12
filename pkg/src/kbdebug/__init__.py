"""Interactive debugger for inconsistent propositional knowledge bases."""

from .diagnoses import Diagnosis, DiagnosisEngine, brute_force_minimal_diagnoses, is_diagnosis
from .errors import (
    GeneratorBudgetError,
    InconsistentInputError,
    KbDebugError,
    KbParseError,
    NoDiagnosisError,
    OracleContradictionError,
    ReasonerLimitError,
)
from .kbfile import Axiom, KnowledgeBase, parse_formula, parse_kb, serialize_kb
from .probabilities import (
    DiagnosisBelief,
    FaultProfile,
    answer_probabilities,
    axiom_fault_probability,
    axiom_probabilities,
    bayes_update,
    diagnosis_prior,
    normalize,
)
from .problem import DiagnosisProblem
from .conflicts import check_conflict, quickxplain
from .queries import (
    EMPTY_PARTITION,
    Partition,
    QueryBuilder,
    Strategy,
    create_query,
    generate_partitions,
    minimize_query,
    score,
    select_query,
    select_query_ckk,
)
from .reasoner import Reasoner
from .sessions import (
    DebugSession,
    KbSessionEngine,
    SessionConfig,
    StaticPoolEngine,
    Transcript,
    greedy_split_trace,
    membership_oracle,
    run_session,
    simulated_oracle,
    stop_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
