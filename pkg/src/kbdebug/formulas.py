"""Propositional formula trees, evaluation, and syntax-element extraction.

Formulas are immutable and hashable, so they can be shared freely across
threads and used as cache keys. Connective occurrences double as the
"syntax elements" that fault profiles assign error probabilities to;
an n-ary conjunction/disjunction with k children counts as k-1
occurrences so that nesting does not change the count.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Union

ATOM_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# Element names with a fixed meaning; profiles may add free-form tags.
KNOWN_ELEMENTS = ("impl", "and", "or", "not", "exists", "forall", "subsumes", "equiv")

# Tag assigned to axioms whose formulas contain no connective at all, so
# every axiom has a non-empty element multiset to derive a probability from.
ATOM_ELEMENT = "atom"


class _HashCached:
    """Deep trees get hashed a lot; memoize per node."""

    __hash_fields__: tuple[str, ...] = ()

    def __hash__(self):
        try:
            return self._hash_cache
        except AttributeError:
            value = hash((type(self).__name__,
                          tuple(getattr(self, f) for f in self.__hash_fields__)))
            object.__setattr__(self, "_hash_cache", value)
            return value


@dataclass(frozen=True)
class Atom(_HashCached):
    name: str

    __hash_fields__ = ("name",)
    __hash__ = _HashCached.__hash__

    def __post_init__(self):
        if not ATOM_NAME_RE.match(self.name):
            raise ValueError(f"invalid atom name: {self.name!r}")


@dataclass(frozen=True)
class Not(_HashCached):
    child: "Formula"

    __hash_fields__ = ("child",)
    __hash__ = _HashCached.__hash__


@dataclass(frozen=True)
class And(_HashCached):
    children: tuple["Formula", ...]

    __hash_fields__ = ("children",)
    __hash__ = _HashCached.__hash__

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("'and' needs at least two children")


@dataclass(frozen=True)
class Or(_HashCached):
    children: tuple["Formula", ...]

    __hash_fields__ = ("children",)
    __hash__ = _HashCached.__hash__

    def __post_init__(self):
        if len(self.children) < 2:
            raise ValueError("'or' needs at least two children")


@dataclass(frozen=True)
class Implies(_HashCached):
    lhs: "Formula"
    rhs: "Formula"

    __hash_fields__ = ("lhs", "rhs")
    __hash__ = _HashCached.__hash__


Formula = Union[Atom, Not, And, Or, Implies]


def conj(formulas) -> Formula:
    """Conjunction of one or more formulas, unwrapped when single."""
    formulas = tuple(formulas)
    if not formulas:
        raise ValueError("empty conjunction")
    if len(formulas) == 1:
        return formulas[0]
    return And(formulas)


def atoms(f: Formula) -> frozenset[str]:
    """All atom names occurring in the formula."""
    found: set[str] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            found.add(node.name)
        elif isinstance(node, Not):
            stack.append(node.child)
        elif isinstance(node, (And, Or)):
            stack.extend(node.children)
        else:
            stack.append(node.lhs)
            stack.append(node.rhs)
    return frozenset(found)


def evaluate(f: Formula, assignment: Mapping[str, bool]) -> bool:
    """Truth value under a total assignment of the formula's atoms."""
    if isinstance(f, Atom):
        return assignment[f.name]
    if isinstance(f, Not):
        return not evaluate(f.child, assignment)
    if isinstance(f, And):
        return all(evaluate(c, assignment) for c in f.children)
    if isinstance(f, Or):
        return any(evaluate(c, assignment) for c in f.children)
    return (not evaluate(f.lhs, assignment)) or evaluate(f.rhs, assignment)


def extract_elements(f: Formula) -> Counter:
    """Multiset of connective occurrences: impl, and, or, not.

    Atoms contribute nothing; an n-ary and/or contributes n-1 occurrences.
    """
    counts: Counter = Counter()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            continue
        if isinstance(node, Not):
            counts["not"] += 1
            stack.append(node.child)
        elif isinstance(node, And):
            counts["and"] += len(node.children) - 1
            stack.extend(node.children)
        elif isinstance(node, Or):
            counts["or"] += len(node.children) - 1
            stack.extend(node.children)
        else:
            counts["impl"] += 1
            stack.append(node.lhs)
            stack.append(node.rhs)
    return counts


# Precedence levels for the text syntax, loosest first.
_LEVEL_IMPLIES = 0
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_UNARY = 3


def format_formula(f: Formula) -> str:
    """Render a formula in the KB file syntax with minimal parentheses.

    Nested and/or of the same operator are parenthesized rather than
    flattened so that parsing the output reproduces the exact tree.
    """
    return _format(f, _LEVEL_IMPLIES)


def _format(f: Formula, level: int) -> str:
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        text = "!" + _format(f.child, _LEVEL_UNARY)
        own = _LEVEL_UNARY
    elif isinstance(f, And):
        text = " & ".join(_format(c, _LEVEL_AND + 1) for c in f.children)
        own = _LEVEL_AND
    elif isinstance(f, Or):
        text = " | ".join(_format(c, _LEVEL_OR + 1) for c in f.children)
        own = _LEVEL_OR
    else:
        # right-associative: lhs binds tighter, rhs may be another implication
        text = _format(f.lhs, _LEVEL_IMPLIES + 1) + " -> " + _format(f.rhs, _LEVEL_IMPLIES)
        own = _LEVEL_IMPLIES
    if own < level:
        return "(" + text + ")"
    return text


def formula_sort_key(f: Formula) -> tuple[int, str]:
    """Deterministic ordering: atoms first, then by rendered text."""
    return (0 if isinstance(f, Atom) else 1, format_formula(f))
