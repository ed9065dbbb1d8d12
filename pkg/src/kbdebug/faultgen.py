"""Controlled fault injection and prior sampling for strategy experiments.

The generator takes a consistent KB and plants contradictions until the
requested diagnosis landscape exists: at least m minimal diagnoses of the
requested minimum cardinality. Each injection picks an axiom, applies a
fault pattern sampled by its probability tier, and alters related axioms
( those sharing an atom, standing in for the concept taxonomy) so that the
edit actually contradicts something. Conflicts planted on disjoint axiom
groups multiply: k injections of group size g yield g**k minimal diagnoses
of cardinality k, which the generator checks after each step by rerunning
the diagnosis engine.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .diagnoses import DiagnosisEngine
from .errors import GeneratorBudgetError
from .formulas import And, Atom, Formula, Implies, Not, Or
from .kbfile import Axiom, KnowledgeBase
from .probabilities import FaultProfile
from .problem import DiagnosisProblem
from .reasoner import Reasoner

AxiomSet = frozenset

# transform(axiom, rng, fresh_atoms, partner_count) ->
#   (mutated axiom, one formula payload per partner)
TransformT = Callable[[Axiom, random.Random, Callable[[], str], int],
                      tuple[Axiom, tuple[tuple[Formula, ...], ...]]]


@dataclass(frozen=True)
class FaultPattern:
    name: str
    probability: float
    transform: TransformT = field(compare=False)
    applies: Callable[[Axiom], bool] = field(compare=False, default=lambda ax: True)
    max_partners: int = 1

    def __post_init__(self):
        if not 0.0 < self.probability < 1.0:
            raise ValueError("pattern probability must lie in (0,1)")


def _implication_positions(ax: Axiom) -> list[int]:
    return [i for i, f in enumerate(ax.formulas) if isinstance(f, Implies)]


def _junction_positions(ax: Axiom) -> list[int]:
    def has_junction(f: Formula) -> bool:
        if isinstance(f, (And, Or)):
            return True
        if isinstance(f, Not):
            return has_junction(f.child)
        if isinstance(f, Implies):
            return has_junction(f.lhs) or has_junction(f.rhs)
        return False

    return [i for i, f in enumerate(ax.formulas) if has_junction(f)]


def _has_quantifier_tag(ax: Axiom) -> bool:
    counts = ax.element_counts
    return counts.get("exists", 0) > 0 or counts.get("forall", 0) > 0


def _negate_consequent(ax: Axiom, rng: random.Random,
                       flip_tag: bool) -> tuple[Axiom, tuple[tuple[Formula, ...], ...]]:
    pos = rng.choice(_implication_positions(ax))
    impl = ax.formulas[pos]
    assert isinstance(impl, Implies)
    mutated_formulas = list(ax.formulas)
    mutated_formulas[pos] = Implies(impl.lhs, Not(impl.rhs))
    elements = ax.element_counts
    elements["not"] += 1
    if flip_tag:
        source, target = ("exists", "forall") if elements.get("exists", 0) else ("forall", "exists")
        elements[source] -= 1
        if not elements[source]:
            del elements[source]
        elements[target] += 1
    mutated = Axiom.make(ax.id, mutated_formulas, elements)
    # the taxonomy partner asserts what the flipped restriction now denies
    return mutated, ((impl.lhs, impl.rhs),)


def _restriction_flip(ax: Axiom, rng: random.Random, fresh: Callable[[], str],
                      partners: int) -> tuple[Axiom, tuple[tuple[Formula, ...], ...]]:
    return _negate_consequent(ax, rng, flip_tag=True)


def _swap_junction(f: Formula) -> Formula:
    if isinstance(f, And):
        return Or(f.children)
    if isinstance(f, Or):
        return And(f.children)
    if isinstance(f, Not):
        return Not(_swap_junction(f.child))
    if isinstance(f, Implies):
        if _contains_junction(f.rhs):
            return Implies(f.lhs, _swap_junction(f.rhs))
        return Implies(_swap_junction(f.lhs), f.rhs)
    return f


def _contains_junction(f: Formula) -> bool:
    if isinstance(f, (And, Or)):
        return True
    if isinstance(f, Not):
        return _contains_junction(f.child)
    if isinstance(f, Implies):
        return _contains_junction(f.lhs) or _contains_junction(f.rhs)
    return False


def _connective_swap(ax: Axiom, rng: random.Random, fresh: Callable[[], str],
                     partners: int) -> tuple[Axiom, tuple[tuple[Formula, ...], ...]]:
    pos = rng.choice(_junction_positions(ax))
    mutated_formulas = list(ax.formulas)
    swapped = _swap_junction(mutated_formulas[pos])
    mutated_formulas[pos] = swapped
    mutated = Axiom.make(ax.id, mutated_formulas, _swapped_elements(ax))
    # the partner insists on the original reading, contradicting the swap
    return mutated, ((Not(swapped),),)


def _swapped_elements(ax: Axiom) -> Counter:
    counts = ax.element_counts
    ands, ors = counts.get("and", 0), counts.get("or", 0)
    counts["and"], counts["or"] = ors, ands
    for key in ("and", "or"):
        if not counts[key]:
            del counts[key]
    if not counts:
        counts["atom"] = 1
    return counts


def _fresh_pair(ax: Axiom, rng: random.Random, fresh: Callable[[], str],
                partners: int) -> tuple[Axiom, tuple[tuple[Formula, ...], ...]]:
    names = [fresh() for _ in range(max(1, partners))]
    negs: list[Formula] = [Not(Atom(name)) for name in names]
    filler: Formula = negs[0] if len(negs) == 1 else Or(tuple(negs))
    elements = ax.element_counts
    elements["not"] += len(negs)
    if len(negs) > 1:
        elements["or"] += len(negs) - 1
    mutated = Axiom.make(ax.id, list(ax.formulas) + [filler], elements)
    return mutated, tuple((Atom(name),) for name in names)


DEFAULT_PATTERNS: tuple[FaultPattern, ...] = (
    FaultPattern("restriction_flip", 0.025, _restriction_flip,
                 lambda ax: _has_quantifier_tag(ax) and bool(_implication_positions(ax))),
    FaultPattern("connective_swap", 0.01, _connective_swap,
                 lambda ax: bool(_junction_positions(ax))),
    FaultPattern("disjointness_overuse", 0.01, _fresh_pair, max_partners=8),
    FaultPattern("negation_misuse", 0.001, _fresh_pair),
)


@dataclass(frozen=True)
class GeneratorSpec:
    m: int  # minimum number of minimum-cardinality diagnoses
    target_cardinality: int
    patterns: tuple[FaultPattern, ...] = DEFAULT_PATTERNS
    seed: int = 0
    max_attempts: int = 40

    def __post_init__(self):
        if self.m < 1 or self.target_cardinality < 1:
            raise ValueError("m and target_cardinality must be at least 1")
        total = sum(p.probability for p in self.patterns)
        if total > 1.0:
            raise ValueError(f"pattern probabilities sum to {total} > 1")


@dataclass(frozen=True)
class InjectionResult:
    kb: KnowledgeBase
    target: AxiomSet
    corrected: tuple[Axiom, ...]  # original versions of the target's axioms
    originals: dict[str, Axiom]  # originals of every mutated axiom
    patterns_used: tuple[str, ...]


def _group_sizes(m: int, cardinality: int) -> list[int]:
    sizes = [2] * cardinality
    i = 0
    while math.prod(sizes) < m:
        sizes[i % cardinality] += 1
        i += 1
    return sizes


def _related(kb: KnowledgeBase, primary: Axiom, pool: Sequence[str]) -> list[str]:
    shared = [axiom_id for axiom_id in pool
              if kb.axiom(axiom_id).atom_names() & primary.atom_names()]
    return shared or list(pool)


def _min_cardinality_diagnoses(problem: DiagnosisProblem, engine: DiagnosisEngine,
                               want: int) -> list[AxiomSet]:
    uniform = {axiom_id: 0.01 for axiom_id in problem.axiom_ids}
    leading = engine.leading_diagnoses(problem, uniform, n=max(want, 1) + 1)
    if not leading:
        return []
    smallest = len(leading[0].ids)
    return [d.ids for d in leading if len(d.ids) == smallest]


def inject_faults(kb: KnowledgeBase, spec: GeneratorSpec,
                  reasoner: Reasoner | None = None) -> InjectionResult:
    """Alter a consistent KB until the requested diagnosis landscape exists."""
    reasoner = reasoner or Reasoner()
    problem = DiagnosisProblem.from_kb(kb)
    if not reasoner.is_consistent(problem.candidate_sentences(kb.axiom_ids())):
        raise ValueError("input must be consistent")
    sizes = _group_sizes(spec.m, spec.target_cardinality)
    if sum(sizes) > len(kb.axioms):
        raise GeneratorBudgetError(
            f"need {sum(sizes)} axioms for {spec.m} diagnoses of cardinality "
            f"{spec.target_cardinality}, KB has {len(kb.axioms)}",
            achieved=0, wanted=spec.m)

    rng = random.Random(spec.seed)
    fresh_counter = iter(range(10_000))

    def fresh() -> str:
        return f"X{next(fresh_counter)}"

    current = kb
    originals: dict[str, Axiom] = {}
    untouched = list(kb.axiom_ids())
    used_patterns: list[str] = []

    for step, group in enumerate(sizes, start=1):
        partners_needed = group - 1
        committed = False
        for _ in range(spec.max_attempts):
            primary_id = rng.choice(untouched)
            primary = current.axiom(primary_id)
            applicable = [p for p in spec.patterns
                          if p.applies(primary) and partners_needed <= p.max_partners]
            if not applicable:
                continue
            weights = [p.probability for p in applicable]
            pattern = rng.choices(applicable, weights=weights, k=1)[0]
            partner_pool = [a for a in untouched if a != primary_id]
            related = _related(current, primary, partner_pool)
            if len(related) < partners_needed:
                continue
            partner_ids = rng.sample(related, partners_needed)
            mutated, payloads = pattern.transform(primary, rng, fresh, partners_needed)
            candidate = current.replace_axiom(mutated)
            for partner_id, payload in zip(partner_ids, payloads):
                partner = candidate.axiom(partner_id)
                candidate = candidate.replace_axiom(
                    Axiom.make(partner_id, list(partner.formulas) + list(payload),
                               partner.element_counts + _payload_elements(payload)))
            engine = DiagnosisEngine(reasoner)
            found = _min_cardinality_diagnoses(DiagnosisProblem.from_kb(candidate), engine, spec.m)
            if not found or len(found[0]) != step:
                continue  # the edit interfered with earlier conflicts; retry
            for axiom_id in (primary_id, *partner_ids):
                originals.setdefault(axiom_id, kb.axiom(axiom_id))
                untouched.remove(axiom_id)
            current = candidate
            used_patterns.append(pattern.name)
            committed = True
            break
        if not committed:
            raise GeneratorBudgetError(
                f"could not plant conflict {step} of {len(sizes)} within "
                f"{spec.max_attempts} attempts",
                achieved=step - 1, wanted=len(sizes))

    engine = DiagnosisEngine(reasoner)
    final = _min_cardinality_diagnoses(DiagnosisProblem.from_kb(current), engine, spec.m)
    if len(final) < spec.m or (final and len(final[0]) != spec.target_cardinality):
        raise GeneratorBudgetError(
            f"reached {len(final)} minimum-cardinality diagnoses, wanted {spec.m}",
            achieved=len(final), wanted=spec.m)
    target = sorted(final, key=lambda d: tuple(sorted(d)))[rng.randrange(len(final))]
    corrected = tuple(originals[axiom_id] for axiom_id in sorted(target) if axiom_id in originals)
    return InjectionResult(current, target, corrected, originals, tuple(used_patterns))


def corrected_kb(result_kb: KnowledgeBase, target: AxiomSet,
                 originals: dict[str, Axiom]) -> KnowledgeBase:
    """The target KB: faulty axioms of the chosen diagnosis restored."""
    restored = result_kb
    for axiom_id in target:
        original = originals.get(axiom_id)
        if original is not None:
            restored = restored.replace_axiom(original)
    return restored


def _payload_elements(payload: tuple[Formula, ...]) -> Counter:
    from .formulas import extract_elements

    counts: Counter = Counter()
    for f in payload:
        counts.update(extract_elements(f))
    return counts


# -- prior-profile sampling --------------------------------------------------


@dataclass(frozen=True)
class PriorDistribution:
    kind: str  # "extreme" | "moderate" | "uniform"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in ("extreme", "moderate", "uniform"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind != "uniform" and self.lam <= 0:
            raise ValueError("exponential distributions need lambda > 0")

    @staticmethod
    def extreme() -> "PriorDistribution":
        return PriorDistribution("extreme", 1.75)

    @staticmethod
    def moderate() -> "PriorDistribution":
        return PriorDistribution("moderate", 0.5)

    @staticmethod
    def uniform() -> "PriorDistribution":
        return PriorDistribution("uniform")

    @staticmethod
    def named(name: str) -> "PriorDistribution":
        return {"extreme": PriorDistribution.extreme,
                "moderate": PriorDistribution.moderate,
                "uniform": PriorDistribution.uniform}[name]()


_P_LOW = 0.001
_P_HIGH = 0.5
_P_EPS = 1e-6
_P_SLOPE = 0.25  # probability gained per unit of the raw exponential draw


def sample_profile(dist: PriorDistribution, elements: Iterable[str], seed: int = 0,
                   uniform_p: float = 0.01) -> FaultProfile:
    """Per-element fault probabilities drawn from the chosen distribution.

    Exponential draws are mapped by a fixed-slope affine map, clipped into
    the open interval (0.001, 0.5). The map preserves order, and because the
    clip bites harder for the wider moderate distribution, a large rate
    parameter concentrates high probability on few elements while a small
    one flattens the profile.
    """
    names = sorted(set(elements))
    if not names:
        raise ValueError("no elements to sample for")
    if dist.kind == "uniform":
        return FaultProfile({name: uniform_p for name in names})
    rng = random.Random(seed)
    probs = {}
    for name in names:
        draw = rng.expovariate(dist.lam)
        value = _P_LOW + _P_EPS + _P_SLOPE * draw
        probs[name] = min(value, _P_HIGH - _P_EPS)
    return FaultProfile(probs)


# -- case classification ------------------------------------------------------


def classify_cases(diagnoses_with_priors: Sequence[tuple[AxiomSet, float]]
                   ) -> tuple[list[AxiomSet], list[AxiomSet], list[AxiomSet]]:
    """Split prior-ordered diagnoses into good / average / bad thirds.

    The good set is the prefix with cumulative probability up to 1/3, the
    average set extends it to 2/3, the rest is bad. A dominant leader would
    leave classes empty, so the top diagnosis falls back into good and the
    next one into average; every diagnosis lands in exactly one class.
    """
    if not diagnoses_with_priors:
        raise ValueError("no diagnoses to classify")
    probs = [p for _, p in diagnoses_with_priors]
    if any(probs[i] < probs[i + 1] - 1e-12 for i in range(len(probs) - 1)):
        raise ValueError("diagnoses must be ordered by non-increasing probability")
    good: list[AxiomSet] = []
    avg: list[AxiomSet] = []
    bad: list[AxiomSet] = []
    cumulative = 0.0
    for ids, p in diagnoses_with_priors:
        cumulative += p
        if cumulative <= 1.0 / 3.0 + 1e-12:
            good.append(ids)
        elif cumulative <= 2.0 / 3.0 + 1e-12:
            avg.append(ids)
        else:
            bad.append(ids)
    if not good:
        source = avg if avg else bad
        good.append(source.pop(0))
    if not avg and (len(good) + len(bad)) < len(diagnoses_with_priors) + 1 and bad:
        avg.append(bad.pop(0))
    elif not avg and not bad and len(good) > 1:
        avg.append(good.pop())
    return good, avg, bad


# -- synthetic base KBs --------------------------------------------------------


def chain_kb(length: int, prefix: str = "A") -> KnowledgeBase:
    """A pure implication chain; consistent for any length."""
    axioms = [
        Axiom.make(f"ax{i}", [Implies(Atom(f"{prefix}{i - 1}"), Atom(f"{prefix}{i}"))])
        for i in range(1, length + 1)
    ]
    return KnowledgeBase(tuple(axioms), background=(Atom(f"{prefix}0"),))


def mixed_kb(length: int) -> KnowledgeBase:
    """An implication chain with conjunctions, disjunctions, and tagged axioms.

    Every third axiom carries a conjunctive consequent, every fourth an
    extra disjunction, and tagged quantifier elements appear periodically so
    each fault pattern finds applicable axioms.
    """
    axioms = []
    for i in range(1, length + 1):
        lhs = Atom(f"A{i - 1}")
        consequent: Formula = Atom(f"A{i}")
        if i % 3 == 0:
            consequent = And((Atom(f"A{i}"), Atom(f"B{i}")))
        formulas: list[Formula] = [Implies(lhs, consequent)]
        if i % 4 == 0:
            formulas.append(Implies(Atom(f"B{i - 1}"), Or((Atom(f"B{i}"), Atom(f"C{i}")))))
        elements = None
        if i % 5 == 0:
            elements = Counter()
            for f in formulas:
                from .formulas import extract_elements

                elements.update(extract_elements(f))
            elements["exists" if i % 2 else "forall"] += 1
        axioms.append(Axiom.make(f"ax{i}", formulas, elements))
    return KnowledgeBase(tuple(axioms), background=(Atom("A0"), Atom("B0")))


def base_kb(descriptor: str) -> KnowledgeBase:
    """Builders referenced from experiment configs, e.g. "chain:12"."""
    kind, _, arg = descriptor.partition(":")
    length = int(arg) if arg else 12
    if kind == "chain":
        return chain_kb(length)
    if kind == "mixed":
        return mixed_kb(length)
    raise ValueError(f"unknown base KB descriptor {descriptor!r}")
