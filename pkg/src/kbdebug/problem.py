"""Diagnosis problem instances: KB axioms, background, and running P/N tests."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoDiagnosisError, UnknownAxiomError
from .formulas import Formula, format_formula
from .kbfile import Axiom, KnowledgeBase
from .reasoner import ProblemChecker, Reasoner


@dataclass(frozen=True)
class DiagnosisProblem:
    """The tuple of KB axioms, background theory, and accumulated tests.

    p_tests holds sentences the target KB must entail, n_tests sentences it
    must not. Instances are immutable; answering a query produces an
    extended copy.
    """

    kb: KnowledgeBase
    p_tests: tuple[Formula, ...] = ()
    n_tests: tuple[Formula, ...] = ()

    @staticmethod
    def from_kb(kb: KnowledgeBase) -> "DiagnosisProblem":
        return DiagnosisProblem(kb, kb.p_tests, kb.n_tests)

    @property
    def axiom_ids(self) -> tuple[str, ...]:
        return self.kb.axiom_ids()

    def axiom(self, axiom_id: str) -> Axiom:
        try:
            return self.kb.axiom(axiom_id)
        except KeyError:
            raise UnknownAxiomError(f"unknown axiom id {axiom_id!r}") from None

    def check_ids(self, ids) -> frozenset[str]:
        ids = frozenset(ids)
        known = set(self.axiom_ids)
        for axiom_id in ids:
            if axiom_id not in known:
                raise UnknownAxiomError(f"unknown axiom id {axiom_id!r}")
        return ids

    def axiom_sentences(self, ids) -> list[Formula]:
        sentences: list[Formula] = []
        for axiom_id in ids:
            sentences.extend(self.axiom(axiom_id).formulas)
        return sentences

    def base_sentences(self) -> list[Formula]:
        """Background plus the conjunction of accepted entailments."""
        return list(self.kb.background) + list(self.p_tests)

    def candidate_sentences(self, ids) -> list[Formula]:
        """Sentences of the given axioms together with base sentences."""
        return self.axiom_sentences(ids) + self.base_sentences()

    def repair_sentences(self, removed: frozenset[str]) -> list[Formula]:
        """(O minus removed) with background and accepted entailments."""
        keep = [axiom_id for axiom_id in self.axiom_ids if axiom_id not in removed]
        return self.candidate_sentences(keep)

    def extended(self, p: tuple[Formula, ...] = (), n: tuple[Formula, ...] = ()) -> "DiagnosisProblem":
        return DiagnosisProblem(self.kb, self.p_tests + tuple(p), self.n_tests + tuple(n))

    def at_history(self, p_len: int, n_len: int) -> "DiagnosisProblem":
        """Snapshot with only the first p_len/n_len accumulated tests."""
        return DiagnosisProblem(self.kb, self.p_tests[:p_len], self.n_tests[:n_len])

    def checker(self, step_limit: int = 2_000_000) -> ProblemChecker:
        """Selector-based checker for repeated subset queries on this state."""
        return ProblemChecker(
            self.base_sentences(),
            {ax.id: ax.formulas for ax in self.kb.axioms},
            list(self.n_tests),
            step_limit,
        )

    def validate(self, reasoner: Reasoner) -> None:
        """Raise NoDiagnosisError when no diagnosis can exist."""
        base = self.base_sentences()
        if not reasoner.is_consistent(base):
            raise NoDiagnosisError("background and accepted entailments are unsatisfiable")
        for n in self.n_tests:
            if reasoner.entails(base, n):
                raise NoDiagnosisError(
                    f"background and accepted entailments entail forbidden {format_formula(n)}"
                )
