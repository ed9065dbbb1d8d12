"""Propositional consistency and entailment via DPLL with unit propagation.

The solver is complete: formulas are translated once to CNF (structural
encoding with cached clause templates, so repeated checks over the same
axioms pay the translation cost only once) and solved by recursive DPLL.
Entailment queries reuse one solver instance through assumption literals,
which keeps the enumeration of candidate entailments cheap.

A configurable step budget bounds the search; exceeding it raises
ReasonerLimitError, which is distinct from an unsatisfiable answer.
"""

from __future__ import annotations

import itertools
import threading
from typing import Iterable, Sequence

from .errors import ReasonerLimitError
from .formulas import And, Atom, Formula, Implies, Not, Or

# literal templates: (name, positive); names are atom names or aux markers
_Lit = tuple[str, bool]

_aux_counter = itertools.count()
_cnf_cache: dict[Formula, tuple[_Lit, tuple[tuple[_Lit, ...], ...]]] = {}
_cnf_lock = threading.Lock()


def _neg(lit: _Lit) -> _Lit:
    return (lit[0], not lit[1])


def _template(f: Formula) -> tuple[_Lit, tuple[tuple[_Lit, ...], ...]]:
    """Root literal plus defining clauses for a formula (cached)."""
    cached = _cnf_cache.get(f)
    if cached is not None:
        return cached
    if isinstance(f, Atom):
        result: tuple[_Lit, tuple[tuple[_Lit, ...], ...]] = ((f.name, True), ())
    elif isinstance(f, Not):
        root, clauses = _template(f.child)
        result = (_neg(root), clauses)
    elif isinstance(f, (And, Or)):
        roots = []
        clauses: list[tuple[_Lit, ...]] = []
        for child in f.children:
            r, cs = _template(child)
            roots.append(r)
            clauses.extend(cs)
        aux = (f"@aux{next(_aux_counter)}", True)
        if isinstance(f, And):
            for r in roots:
                clauses.append((_neg(aux), r))
            clauses.append(tuple([aux] + [_neg(r) for r in roots]))
        else:
            clauses.append(tuple([_neg(aux)] + roots))
            for r in roots:
                clauses.append((aux, _neg(r)))
        result = (aux, tuple(clauses))
    else:
        lroot, lclauses = _template(f.lhs)
        rroot, rclauses = _template(f.rhs)
        clauses = list(lclauses) + list(rclauses)
        aux = (f"@aux{next(_aux_counter)}", True)
        clauses.append((_neg(aux), _neg(lroot), rroot))
        clauses.append((aux, lroot))
        clauses.append((aux, _neg(rroot)))
        result = (aux, tuple(clauses))
    with _cnf_lock:
        _cnf_cache[f] = result
    return result


class Solver:
    """One CNF instance, queryable repeatedly under assumption literals."""

    def __init__(self, formulas: Iterable[Formula], extra_vars: Iterable[str] = (),
                 step_limit: int = 2_000_000,
                 guarded: Sequence[tuple[str, Sequence[Formula]]] = ()):
        self.step_limit = step_limit
        self._var_ids: dict[str, int] = {}
        self._clauses: list[list[int]] = []
        self._occ: list[list[int]] = [[]]  # indexed by var, clause indices
        for name in extra_vars:
            self._ensure_var(name)
        for f in formulas:
            root, clauses = _template(f)
            for clause in clauses:
                self._add_clause(clause)
            self._add_clause((root,))
        for guard_name, group in guarded:
            guard = (guard_name, False)
            for f in group:
                root, clauses = _template(f)
                for clause in clauses:
                    self._add_clause(clause)
                self._add_clause((guard, root))
        nvars = len(self._var_ids)
        self._assign = [0] * (nvars + 1)  # 0 unknown, 1 true, -1 false
        self._trail: list[int] = []
        self._units = [clause[0] for clause in self._clauses if len(clause) == 1]
        self._steps = 0

    def _ensure_var(self, name: str) -> int:
        vid = self._var_ids.get(name)
        if vid is None:
            vid = len(self._var_ids) + 1
            self._var_ids[name] = vid
            self._occ.append([])
        return vid

    def _add_clause(self, clause: Sequence[_Lit]) -> None:
        lits = []
        for name, positive in clause:
            vid = self._ensure_var(name)
            lits.append(vid if positive else -vid)
        idx = len(self._clauses)
        self._clauses.append(lits)
        for lit in lits:
            self._occ[abs(lit)].append(idx)

    def var(self, name: str) -> int:
        vid = self._var_ids.get(name)
        if vid is None:
            raise KeyError(name)
        return vid

    # -- search ------------------------------------------------------------

    def _set(self, lit: int) -> bool:
        var = abs(lit)
        val = 1 if lit > 0 else -1
        cur = self._assign[var]
        if cur != 0:
            return cur == val
        self._assign[var] = val
        self._trail.append(var)
        return True

    def _undo_to(self, mark: int) -> None:
        while len(self._trail) > mark:
            self._assign[self._trail.pop()] = 0

    def _propagate(self, start: int) -> bool:
        assign = self._assign
        clauses = self._clauses
        trail = self._trail
        i = start
        while i < len(trail):
            var = trail[i]
            i += 1
            self._steps += 1
            if self._steps > self.step_limit:
                raise ReasonerLimitError("propagation budget exceeded")
            for idx in self._occ[var]:
                clause = clauses[idx]
                unit = 0
                satisfied = False
                unassigned = 0
                for lit in clause:
                    v = assign[abs(lit)]
                    if v == 0:
                        unassigned += 1
                        unit = lit
                        if unassigned > 1:
                            break
                    elif (v == 1) == (lit > 0):
                        satisfied = True
                        break
                if satisfied or unassigned > 1:
                    continue
                if unassigned == 0:
                    return False
                if not self._set(unit):
                    return False
        return True

    def _search(self) -> bool:
        assign = self._assign
        var = 0
        for v in range(1, len(assign)):
            if assign[v] == 0:
                var = v
                break
        if var == 0:
            return True
        for lit in (var, -var):
            self._steps += 1
            if self._steps > self.step_limit:
                raise ReasonerLimitError("decision budget exceeded")
            mark = len(self._trail)
            self._set(lit)
            if self._propagate(mark) and self._search():
                return True
            self._undo_to(mark)
        return False

    def solve(self, assumptions: Sequence[int] = ()) -> bool:
        """Satisfiable under the given assumption literals?"""
        self._steps = 0
        mark = len(self._trail)
        try:
            for lit in self._units:
                if not self._set(lit):
                    return False
            for lit in assumptions:
                if not self._set(lit):
                    return False
            return self._propagate(mark) and self._search()
        finally:
            self._undo_to(mark)


class ProblemChecker:
    """Subset consistency and test checks over one problem, via selectors.

    Every axiom's formulas are guarded by a selector variable, and every
    forbidden sentence's negation by another, so asking whether an axiom
    subset is consistent, conflicts, or repairs the KB is a single
    assumption-based query on one shared solver instance.
    """

    def __init__(self, base_sentences: Sequence[Formula],
                 axiom_formulas: dict[str, Sequence[Formula]],
                 n_tests: Sequence[Formula], step_limit: int = 2_000_000):
        guarded = [(f"@sel:{axiom_id}", formulas)
                   for axiom_id, formulas in axiom_formulas.items()]
        guarded += [(f"@ntest:{i}", (Not(n),)) for i, n in enumerate(n_tests)]
        self._solver = Solver(base_sentences, step_limit=step_limit, guarded=guarded)
        self._sel = {axiom_id: self._solver.var(f"@sel:{axiom_id}")
                     for axiom_id in axiom_formulas}
        self._ntest = [self._solver.var(f"@ntest:{i}") for i in range(len(n_tests))]
        self._all_ids = frozenset(axiom_formulas)

    def consistent(self, present: Iterable[str]) -> bool:
        return self._solver.solve([self._sel[axiom_id] for axiom_id in present])

    def entails_forbidden(self, present: Iterable[str], index: int) -> bool:
        assumptions = [self._sel[axiom_id] for axiom_id in present]
        assumptions.append(self._ntest[index])
        return not self._solver.solve(assumptions)

    def is_conflict(self, present: Iterable[str]) -> bool:
        present = list(present)
        if not self.consistent(present):
            return True
        return any(self.entails_forbidden(present, i) for i in range(len(self._ntest)))

    def is_diagnosis(self, removed: Iterable[str]) -> bool:
        present = sorted(self._all_ids - frozenset(removed))
        if not self.consistent(present):
            return False
        return not any(self.entails_forbidden(present, i) for i in range(len(self._ntest)))


class Reasoner:
    """Stateless facade over Solver with a transparent result cache."""

    def __init__(self, step_limit: int = 2_000_000, cache_size: int = 100_000):
        self.step_limit = step_limit
        self._cache: dict[frozenset[Formula], bool] = {}
        self._cache_size = cache_size
        self._lock = threading.Lock()

    def is_consistent(self, formulas: Iterable[Formula]) -> bool:
        """True iff some assignment satisfies every formula."""
        key = frozenset(formulas)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        result = Solver(key, step_limit=self.step_limit).solve()
        with self._lock:
            if len(self._cache) >= self._cache_size:
                self._cache.clear()
            self._cache[key] = result
        return result

    def entails(self, formulas: Iterable[Formula], f: Formula) -> bool:
        """True iff the set together with the negation of f is unsatisfiable."""
        return not self.is_consistent(list(formulas) + [Not(f)])

    def enumerate_entailments(self, formulas: Sequence[Formula], vocab: Iterable[str],
                              baseline: Sequence[Formula] = ()) -> list[Formula]:
        """Entailed atoms and atom-to-atom implications over a vocabulary.

        Atoms: every a in vocab with s |= a. Implications: a -> b for
        distinct vocabulary atoms where a is unsettled in s (neither a nor
        !a entailed), s |= a -> b, and the implication does not already
        follow from the baseline sentences alone. Output is deterministic:
        atoms sorted by name, then implications sorted by (a, b).
        """
        names = sorted(set(vocab))
        solver = Solver(formulas, extra_vars=names, step_limit=self.step_limit)
        if not solver.solve():
            raise ValueError("sentence set is inconsistent")
        base_solver = None
        if baseline:
            base_solver = Solver(baseline, extra_vars=names, step_limit=self.step_limit)

        entailed: list[Formula] = []
        unsettled: list[str] = []
        status: dict[str, int] = {}
        for name in names:
            v = solver.var(name)
            if not solver.solve((-v,)):
                status[name] = 1
                entailed.append(Atom(name))
            elif not solver.solve((v,)):
                status[name] = -1
            else:
                status[name] = 0
                unsettled.append(name)

        implications: list[Formula] = []
        for a in unsettled:
            va = solver.var(a)
            for b in names:
                if b == a:
                    continue
                vb = solver.var(b)
                if solver.solve((va, -vb)):
                    continue
                if base_solver is not None and not base_solver.solve(
                        (base_solver.var(a), -base_solver.var(b))):
                    continue
                implications.append(Implies(Atom(a), Atom(b)))
        return entailed + implications
