"""Batch strategy-comparison experiments: trials, CSV rows, summary tables.

Every trial samples a fault-probability profile, computes all minimal
diagnoses of the (generated or given) faulty KB, classifies them into
good/average/bad by cumulative prior mass, draws a target from the chosen
class, and runs one simulated session per strategy against the corrected
KB. Randomness derives from the single config seed via stable hashing, so
any trial can be reproduced in isolation.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
import warnings
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import random

from .diagnoses import DiagnosisEngine
from .errors import KbDebugError
from .faultgen import (
    GeneratorSpec,
    PriorDistribution,
    base_kb,
    classify_cases,
    corrected_kb,
    inject_faults,
    sample_profile,
)
from .kbfile import KnowledgeBase, parse_kb
from .probabilities import axiom_probabilities
from .problem import DiagnosisProblem
from .queries import Strategy
from .reasoner import Reasoner
from .sessions import KbSessionEngine, SessionConfig, run_session, simulated_oracle

AxiomSet = frozenset


@dataclass(frozen=True)
class ExperimentRow:
    kb_name: str
    distribution: str
    case: str
    strategy: str
    trial: int
    queries_asked: int
    stopped_by: str
    wall_ms: int
    target_found: bool


CSV_FIELDS = tuple(f.name for f in fields(ExperimentRow))

CASES = ("good", "avg", "bad")
STRATEGY_NAMES = {"entropy": "entropy", "split": "split_in_half", "random": "random"}


@dataclass(frozen=True)
class KbEntry:
    name: str
    path: str | None = None
    base: str | None = None
    inject_m: int | None = None
    inject_cardinality: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    trials: int
    kbs: tuple[KbEntry, ...]
    distributions: tuple[str, ...] = ("uniform",)
    cases: tuple[str, ...] = ("good",)
    strategies: tuple[str, ...] = ("entropy", "split")
    n: int = 9
    sigma: float = 0.85
    gamma: float | None = None
    max_queries: int = 30

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        if doc.get("schema") != 1:
            raise ValueError("experiment config must declare schema: 1")
        kbs = []
        for item in doc["kbs"]:
            inject = item.get("inject", {})
            kbs.append(KbEntry(
                name=item["name"],
                path=item.get("path"),
                base=item.get("base"),
                inject_m=inject.get("m"),
                inject_cardinality=inject.get("target_cardinality"),
            ))
        return ExperimentConfig(
            seed=doc.get("seed", 0),
            trials=doc["trials"],
            kbs=tuple(kbs),
            distributions=tuple(doc.get("distributions", ["uniform"])),
            cases=tuple(doc.get("cases", ["good"])),
            strategies=tuple(doc.get("strategies", ["entropy", "split"])),
            n=doc.get("n", 9),
            sigma=doc.get("sigma", 0.85),
            gamma=doc.get("gamma"),
            max_queries=doc.get("max_queries", 30),
        )


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from the run seed and trial coordinates."""
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class TrialFailure:
    kb_name: str
    distribution: str
    case: str
    trial: int
    reason: str


def _load_kb(entry: KbEntry, seed: int, reasoner: Reasoner,
             base_dir: Path | None) -> tuple[KnowledgeBase, dict, AxiomSet | None]:
    if entry.path:
        path = Path(entry.path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return parse_kb(path.read_text()), {}, None
    base = base_kb(entry.base or "chain:12")
    spec = GeneratorSpec(
        m=entry.inject_m or 6,
        target_cardinality=entry.inject_cardinality or 2,
        seed=derive_seed(seed, entry.name, "inject"),
    )
    result = inject_faults(base, spec, reasoner)
    return result.kb, result.originals, result.target


def _element_names(kb: KnowledgeBase) -> set[str]:
    names: set[str] = set()
    for ax in kb.axioms:
        names |= {name for name, _ in ax.elements}
    return names


def run_experiment(config: ExperimentConfig,
                   base_dir: Path | None = None) -> tuple[list[ExperimentRow], list[TrialFailure]]:
    rows: list[ExperimentRow] = []
    failures: list[TrialFailure] = []
    for entry in config.kbs:
        reasoner = Reasoner()
        kb, originals, _ = _load_kb(entry, config.seed, reasoner, base_dir)
        problem = DiagnosisProblem.from_kb(kb)
        elements = _element_names(kb)
        engine = DiagnosisEngine(reasoner)
        for distribution in config.distributions:
            for case in config.cases:
                for trial in range(config.trials):
                    trial_seed = derive_seed(config.seed, entry.name, distribution, case, trial)
                    try:
                        rows.extend(_run_trial(
                            config, entry, problem, originals, elements, engine, reasoner,
                            distribution, case, trial, trial_seed))
                    except KbDebugError as exc:
                        failures.append(TrialFailure(
                            entry.name, distribution, case, trial, str(exc)))
    rows.sort(key=lambda r: (r.kb_name, r.distribution, r.case, r.strategy, r.trial))
    return rows, failures


def _run_trial(config: ExperimentConfig, entry: KbEntry, problem: DiagnosisProblem,
               originals: dict, elements: set[str], engine: DiagnosisEngine,
               reasoner: Reasoner, distribution: str, case: str, trial: int,
               trial_seed: int) -> list[ExperimentRow]:
    profile = sample_profile(PriorDistribution.named(distribution), elements, trial_seed)
    with warnings.catch_warnings():
        # sampled element probabilities stay below 0.5 but can combine above
        # it for multi-element axioms; the p >= 0.5 warning is expected here
        warnings.simplefilter("ignore")
        axiom_probs = axiom_probabilities(problem.kb, profile)
        return _run_trial_sessions(
            config, entry, problem, originals, engine, reasoner,
            distribution, case, trial, trial_seed, axiom_probs)


def _run_trial_sessions(config: ExperimentConfig, entry: KbEntry, problem: DiagnosisProblem,
                        originals: dict, engine: DiagnosisEngine, reasoner: Reasoner,
                        distribution: str, case: str, trial: int, trial_seed: int,
                        axiom_probs: dict) -> list[ExperimentRow]:
    all_minimal = engine.leading_diagnoses(problem, axiom_probs, n=64)
    ranked = [(d.ids, d.probability) for d in all_minimal]
    good, avg, bad = classify_cases(ranked)
    pool = {"good": good, "avg": avg, "bad": bad}[case]
    if not pool:
        raise KbDebugError(f"case {case!r} is empty for this prior sample")
    rng = random.Random(trial_seed)
    target = sorted(pool, key=lambda d: tuple(sorted(d)))[rng.randrange(len(pool))]
    target_kb = corrected_kb(problem.kb, target, originals)
    oracle = simulated_oracle(target_kb, reasoner)

    out: list[ExperimentRow] = []
    for strategy_name in config.strategies:
        strategy = Strategy(STRATEGY_NAMES[strategy_name], seed=trial_seed)
        session_config = SessionConfig(
            n=config.n, sigma=config.sigma, strategy=strategy,
            gamma=config.gamma if strategy.kind == "entropy" else None,
            max_queries=config.max_queries)
        session_engine = KbSessionEngine(problem, axiom_probs, reasoner)
        started = time.perf_counter()
        result, transcript = run_session(session_engine, oracle, session_config, problem)
        wall_ms = int((time.perf_counter() - started) * 1000)
        out.append(ExperimentRow(
            kb_name=entry.name,
            distribution=distribution,
            case=case,
            strategy=strategy_name,
            trial=trial,
            queries_asked=transcript.queries_asked(),
            stopped_by=transcript.status,
            wall_ms=wall_ms,
            target_found=any(d.ids == target for d in result),
        ))
    return out


def rows_to_csv(rows: Iterable[ExperimentRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([getattr(row, f) for f in CSV_FIELDS])
    return buffer.getvalue()


def rows_from_csv(text: str) -> list[ExperimentRow]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for record in reader:
        out.append(ExperimentRow(
            kb_name=record["kb_name"],
            distribution=record["distribution"],
            case=record["case"],
            strategy=record["strategy"],
            trial=int(record["trial"]),
            queries_asked=int(record["queries_asked"]),
            stopped_by=record["stopped_by"],
            wall_ms=int(record["wall_ms"]),
            target_found=record["target_found"] == "True",
        ))
    return out


def summarize(rows: Sequence[ExperimentRow]) -> str:
    """Min/avg/max queries per (kb, distribution, case, strategy) cell."""
    groups: dict[tuple, list[int]] = {}
    for row in rows:
        groups.setdefault(
            (row.kb_name, row.distribution, row.case, row.strategy), []).append(row.queries_asked)
    lines = [f"{'kb':<16} {'distribution':<12} {'case':<5} {'strategy':<8} "
             f"{'min':>4} {'avg':>6} {'max':>4} {'trials':>6}"]
    for key in sorted(groups):
        counts = groups[key]
        kb_name, distribution, case, strategy = key
        lines.append(
            f"{kb_name:<16} {distribution:<12} {case:<5} {strategy:<8} "
            f"{min(counts):>4} {sum(counts) / len(counts):>6.2f} {max(counts):>4} "
            f"{len(counts):>6}")
    return "\n".join(lines)
