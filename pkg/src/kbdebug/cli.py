"""Command-line entry points: diagnose, session, experiment, inject, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .diagnoses import DiagnosisEngine, brute_force_minimal_diagnoses
from .errors import (
    GeneratorBudgetError,
    InconsistentInputError,
    KbDebugError,
    KbParseError,
    OracleContradictionError,
)
from .experiments import ExperimentConfig, run_experiment, rows_to_csv, summarize
from .faultgen import GeneratorSpec, inject_faults
from .formulas import format_formula
from .kbfile import KnowledgeBase, parse_kb, serialize_kb
from .probabilities import FaultProfile, axiom_probabilities
from .problem import DiagnosisProblem
from .queries import Strategy
from .reasoner import Reasoner
from .sessions import (
    KbSessionEngine,
    Partition,
    SessionConfig,
    run_session,
    simulated_oracle,
)

_STRATEGIES = {"entropy": "entropy", "split": "split_in_half", "random": "random"}


def _read_kb(path: str) -> KnowledgeBase:
    return parse_kb(Path(path).read_text())


def _read_profile(path: str) -> FaultProfile:
    return FaultProfile.from_json(Path(path).read_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbdebug",
        description="Interactive debugger for inconsistent propositional knowledge bases")
    sub = parser.add_subparsers(dest="command", required=True)

    diag = sub.add_parser("diagnose", help="print leading diagnoses and conflicts")
    diag.add_argument("--kb", required=True)
    diag.add_argument("--profile", required=True)
    diag.add_argument("--n", type=int, default=9)
    diag.add_argument("--brute-force", action="store_true",
                      help="cross-check with exhaustive enumeration")

    sess = sub.add_parser("session", help="run an interactive or simulated session")
    sess.add_argument("--kb", required=True)
    sess.add_argument("--profile", required=True)
    sess.add_argument("--n", type=int, default=9)
    sess.add_argument("--sigma", type=float, default=0.95)
    sess.add_argument("--strategy", choices=sorted(_STRATEGIES), default="entropy")
    sess.add_argument("--gamma", type=float, default=None)
    sess.add_argument("--seed", type=int, default=0)
    sess.add_argument("--stop-rule", choices=["gap", "top1"], default="gap")
    sess.add_argument("--max-queries", type=int, default=50)
    sess.add_argument("--oracle", choices=["interactive", "simulated"], default="interactive")
    sess.add_argument("--target-file", help="sidecar JSON with the simulated target")
    sess.add_argument("--out", help="write the transcript JSON here")

    exp = sub.add_parser("experiment", help="batch strategy comparison with CSV output")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out", help="CSV output path (default: stdout)")

    inj = sub.add_parser("inject", help="plant faults into a consistent KB")
    inj.add_argument("--kb", required=True)
    inj.add_argument("--m", type=int, default=6,
                     help="minimum number of minimum-cardinality diagnoses")
    inj.add_argument("--cardinality", type=int, default=2)
    inj.add_argument("--seed", type=int, default=0)
    inj.add_argument("--out", required=True, help="faulty KB output path")
    inj.add_argument("--sidecar", help="target/repair JSON path (default: <out>.target.json)")

    srv = sub.add_parser("serve", help="run the HTTP session service")
    srv.add_argument("--bind", default="127.0.0.1:8000")
    srv.add_argument("--ui", default=None, help="directory with the built web UI")

    return parser


def cmd_diagnose(args) -> int:
    kb = _read_kb(args.kb)
    profile = _read_profile(args.profile)
    problem = DiagnosisProblem.from_kb(kb)
    reasoner = Reasoner()
    engine = DiagnosisEngine(reasoner)
    axiom_probs = axiom_probabilities(kb, profile)
    leading = engine.leading_diagnoses(problem, axiom_probs, args.n)
    if leading and not leading[0].ids:
        print("no conflicts: the KB satisfies all requirements as-is")
        return 2
    print(f"leading diagnoses (n={args.n}):")
    for diag in leading:
        print(f"  [{', '.join(sorted(diag.ids))}]  p={diag.probability:.4f}")
    print("minimal conflicts discovered:")
    for conflict in engine.known_conflicts():
        print(f"  {{{', '.join(sorted(conflict))}}}")
    if args.brute_force:
        exact = brute_force_minimal_diagnoses(problem, reasoner)
        print(f"brute-force minimal diagnoses ({len(exact)}):")
        for ids in sorted(exact, key=lambda d: (len(d), tuple(sorted(d)))):
            print(f"  [{', '.join(sorted(ids))}]")
        mismatch = {d.ids for d in leading} - exact
        if mismatch:
            print("MISMATCH against brute force!", file=sys.stderr)
            return 1
    return 0


def _interactive_oracle(part: Partition) -> str:
    print("does the intended KB entail all of the following?")
    for f in part.query:
        print(f"    {format_formula(f)}")
    while True:
        reply = input("  [y]es / [n]o / [u]nknown > ").strip().lower()
        if reply in ("y", "yes"):
            return "yes"
        if reply in ("n", "no"):
            return "no"
        if reply in ("u", "unknown"):
            return "unknown"


def _target_kb_from_sidecar(kb: KnowledgeBase, sidecar_path: str) -> KnowledgeBase:
    doc = json.loads(Path(sidecar_path).read_text())
    if doc.get("schema") != 1:
        raise ValueError("target sidecar must declare schema: 1")
    target = frozenset(doc["target"])
    corrected_lines = doc.get("corrected", {})
    restored = kb
    for axiom_id in target:
        line = corrected_lines.get(axiom_id)
        if line is not None:
            mini = parse_kb("[axioms]\n" + line + "\n", validate=False)
            restored = restored.replace_axiom(mini.axioms[0])
        else:
            restored = KnowledgeBase(
                tuple(ax for ax in restored.axioms if ax.id != axiom_id),
                restored.background, restored.p_tests, restored.n_tests)
    return restored


def cmd_session(args) -> int:
    kb = _read_kb(args.kb)
    profile = _read_profile(args.profile)
    problem = DiagnosisProblem.from_kb(kb)
    reasoner = Reasoner()
    axiom_probs = axiom_probabilities(kb, profile)
    config = SessionConfig(
        n=args.n, sigma=args.sigma,
        strategy=Strategy(_STRATEGIES[args.strategy], seed=args.seed),
        gamma=args.gamma, max_queries=args.max_queries, stop_rule=args.stop_rule)
    if args.oracle == "simulated":
        if not args.target_file:
            print("error: --oracle simulated requires --target-file", file=sys.stderr)
            return 1
        oracle = simulated_oracle(_target_kb_from_sidecar(kb, args.target_file), reasoner)
    else:
        oracle = _interactive_oracle
    engine = KbSessionEngine(problem, axiom_probs, reasoner)
    result, transcript = run_session(engine, oracle, config, problem)
    print(f"stopped: {transcript.status} after {transcript.queries_asked()} queries")
    for diag in result:
        print(f"  diagnosis [{', '.join(sorted(diag.ids))}]  p={diag.probability:.4f}")
    if args.out:
        Path(args.out).write_text(json.dumps(transcript.to_dict(), indent=2) + "\n")
        print(f"transcript written to {args.out}")
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_json(Path(args.config).read_text())
    rows, failures = run_experiment(config, base_dir=Path(args.config).resolve().parent)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(rows)} rows written to {args.out}")
    else:
        sys.stdout.write(text)
    print(summarize(rows))
    if failures:
        print(f"{len(failures)} trial failures:")
        for failure in failures:
            print(f"  {failure.kb_name}/{failure.distribution}/{failure.case}"
                  f"/trial{failure.trial}: {failure.reason}")
    return 0


def cmd_inject(args) -> int:
    kb = _read_kb(args.kb)
    try:
        result = inject_faults(kb, GeneratorSpec(
            m=args.m, target_cardinality=args.cardinality, seed=args.seed))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    Path(args.out).write_text(serialize_kb(result.kb))
    sidecar_path = args.sidecar or f"{args.out}.target.json"
    corrected_lines = {}
    for ax in result.corrected:
        line = serialize_kb(KnowledgeBase((ax,))).splitlines()[1]
        corrected_lines[ax.id] = line
    sidecar = {
        "schema": 1,
        "target": sorted(result.target),
        "corrected": corrected_lines,
        "patterns": list(result.patterns_used),
        "seed": args.seed,
    }
    Path(sidecar_path).write_text(json.dumps(sidecar, indent=2) + "\n")
    print(f"faulty KB written to {args.out}; target {sorted(result.target)} "
          f"in {sidecar_path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    host, _, port = args.bind.rpartition(":")
    app = create_app(ui_dir=Path(args.ui) if args.ui else None)
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: could not serve on {args.bind}: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "diagnose": cmd_diagnose,
        "session": cmd_session,
        "experiment": cmd_experiment,
        "inject": cmd_inject,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except KbParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except InconsistentInputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return 1
    except OracleContradictionError as exc:
        print(f"contradictory answers: {exc}", file=sys.stderr)
        return 3
    except GeneratorBudgetError as exc:
        print(f"generator gave up: {exc} (reached {exc.achieved} of {exc.wanted})",
              file=sys.stderr)
        return 1
    except KbDebugError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
