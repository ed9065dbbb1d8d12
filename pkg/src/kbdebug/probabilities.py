"""Fault probabilities and belief updates over candidate diagnoses.

An axiom's failure probability derives from the error probabilities of the
syntax elements it uses: assuming elements fail independently, the chance
that at least one fails is 1 minus the product of the per-occurrence
survival probabilities (the closed form of the inclusion-exclusion sum).
Diagnosis priors multiply failure probabilities of the removed axioms with
survival probabilities of the kept ones. Oracle answers reweight the belief
by Bayes' rule with likelihood 1 for diagnoses that predicted the answer,
0 for rejected ones, and one half for diagnoses that predict nothing.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping

from .errors import OracleContradictionError
from .kbfile import Axiom, KnowledgeBase

if TYPE_CHECKING:
    from .queries import Partition

AxiomSet = frozenset


@dataclass(frozen=True)
class FaultProfile:
    """Per-element error probabilities with optional per-axiom overrides."""

    element_probs: Mapping[str, float]
    axiom_overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, p in list(self.element_probs.items()) + list(self.axiom_overrides.items()):
            if not 0.0 < p < 1.0:
                raise ValueError(f"probability for {name!r} must lie strictly in (0,1), got {p}")

    @staticmethod
    def uniform(elements, p: float = 0.01) -> "FaultProfile":
        return FaultProfile({name: p for name in elements})

    @staticmethod
    def from_json(text: str) -> "FaultProfile":
        doc = json.loads(text)
        if doc.get("schema") != 1:
            raise ValueError("profile document must declare schema: 1")
        return FaultProfile(doc["elements"], doc.get("axiom_overrides", {}))

    def to_json(self) -> str:
        return json.dumps(
            {"schema": 1, "elements": dict(self.element_probs),
             "axiom_overrides": dict(self.axiom_overrides)},
            indent=2, sort_keys=True)


def axiom_fault_probability(ax: Axiom, profile: FaultProfile) -> float:
    """Probability that at least one syntax element of the axiom is faulty."""
    override = profile.axiom_overrides.get(ax.id)
    if override is not None:
        return override
    survive = 1.0
    for name, count in ax.elements:
        p = profile.element_probs.get(name)
        if p is None:
            raise KeyError(f"no element probability for {name!r} (axiom {ax.id})")
        survive *= (1.0 - p) ** count
    return 1.0 - survive


def axiom_probabilities(kb: KnowledgeBase, profile: FaultProfile) -> dict[str, float]:
    probs = {ax.id: axiom_fault_probability(ax, profile) for ax in kb.axioms}
    high = [axiom_id for axiom_id, p in probs.items() if p >= 0.5]
    if high:
        warnings.warn(
            f"axiom fault probabilities at or above 0.5 for {sorted(high)}; "
            "most-probable-minimal-diagnosis pruning assumes p < 0.5",
            stacklevel=2)
    return probs


def diagnosis_prior(diagnosis: AxiomSet, axiom_ids, axiom_probs: Mapping[str, float]) -> float:
    """Unnormalized prior: removed axioms fail, all others survive.

    Factors are multiplied in a canonical order (failures first, each group
    sorted by id) so symmetric diagnoses get bit-identical priors and
    probability ties break deterministically downstream.
    """
    diagnosis = frozenset(diagnosis)
    prior = 1.0
    for axiom_id in sorted(diagnosis):
        prior *= axiom_probs[axiom_id]
    for axiom_id in sorted(set(axiom_ids) - diagnosis):
        prior *= 1.0 - axiom_probs[axiom_id]
    return prior


@dataclass(frozen=True)
class DiagnosisBelief:
    """Probability mass over candidate diagnoses (keyed by axiom-id sets)."""

    probs: Mapping[AxiomSet, float]
    normalized: bool = False

    def __post_init__(self):
        for p in self.probs.values():
            if p < 0:
                raise ValueError("belief values must be non-negative")
        if self.normalized:
            total = sum(self.probs.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"normalized belief sums to {total}")

    def probability(self, diagnosis: AxiomSet) -> float:
        return self.probs.get(frozenset(diagnosis), 0.0)

    def support(self) -> frozenset[AxiomSet]:
        return frozenset(d for d, p in self.probs.items() if p > 0.0)

    def top_two(self) -> tuple[float, float]:
        values = sorted(self.probs.values(), reverse=True)
        first = values[0] if values else 0.0
        second = values[1] if len(values) > 1 else 0.0
        return first, second


def normalize(belief: DiagnosisBelief) -> DiagnosisBelief:
    total = sum(belief.probs.values())
    if total <= 0.0:
        raise ValueError("cannot normalize an all-zero belief")
    return DiagnosisBelief({d: p / total for d, p in belief.probs.items()}, normalized=True)


def _mass(diagnoses, belief: DiagnosisBelief) -> float:
    return sum(belief.probability(d) for d in diagnoses)


def answer_probabilities(part: "Partition", belief: DiagnosisBelief) -> tuple[float, float]:
    """(p_yes, p_no) for a query, treating no-prediction diagnoses as coin flips."""
    half_dz = _mass(part.dz, belief) / 2.0
    p_yes = _mass(part.dx, belief) + half_dz
    p_no = _mass(part.dnx, belief) + half_dz
    return p_yes, p_no


def bayes_update(belief: DiagnosisBelief, part: "Partition", answer: str) -> DiagnosisBelief:
    """Posterior belief after the oracle answered 'yes' or 'no' to the query."""
    if answer not in ("yes", "no"):
        raise ValueError(f"answer must be 'yes' or 'no', got {answer!r}")
    p_yes, p_no = answer_probabilities(part, belief)
    denominator = p_yes if answer == "yes" else p_no
    if denominator <= 0.0:
        raise OracleContradictionError(
            f"answer {answer!r} has probability zero under the current belief")
    rejected = frozenset(part.dnx if answer == "yes" else part.dx)
    dz = frozenset(part.dz)
    posterior: dict[AxiomSet, float] = {}
    for d, p in belief.probs.items():
        if d in rejected:
            posterior[d] = 0.0
        elif d in dz:
            posterior[d] = p / 2.0
        else:
            # predicted the answer, or outside the partition entirely
            posterior[d] = p
    return normalize(DiagnosisBelief(posterior))
