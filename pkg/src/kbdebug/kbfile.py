"""KB file format: parsing, serialization, and the KnowledgeBase model.

File layout (UTF-8 text, ``#`` starts a comment):

    [axioms]
    ax1 : A -> B
    ax2 @elems=exists:1,and:2 : B -> C & D ; X -> Y
    [background]
    A
    [P]
    ...
    [N]
    ...

Sections appear in that order; the last three are optional. An axiom line
carries an identifier, an optional ``@elems=`` annotation overriding the
derived syntax-element multiset, and one or more formulas separated by
``;`` (interpreted conjunctively). Formula syntax, loosest to tightest:
``->`` (right-assoc), ``|``, ``&``, ``!``, parentheses, atom.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import DuplicateAxiomIdError, InconsistentInputError, KbParseError
from .formulas import (
    ATOM_ELEMENT,
    ATOM_NAME_RE,
    And,
    Atom,
    Formula,
    Implies,
    Not,
    Or,
    atoms,
    extract_elements,
    format_formula,
)


@dataclass(frozen=True)
class Axiom:
    """One removable unit of the KB: an id plus conjunctive formulas."""

    id: str
    formulas: tuple[Formula, ...]
    elements: tuple[tuple[str, int], ...] = ()
    elements_overridden: bool = False

    @staticmethod
    def make(axiom_id: str, formulas: Iterable[Formula], elements: Counter | None = None) -> "Axiom":
        formulas = tuple(formulas)
        if not formulas:
            raise ValueError(f"axiom {axiom_id}: needs at least one formula")
        overridden = elements is not None
        if elements is None:
            elements = Counter()
            for f in formulas:
                elements.update(extract_elements(f))
            if not elements:
                elements[ATOM_ELEMENT] = 1
        if not elements:
            raise ValueError(f"axiom {axiom_id}: empty element override")
        pairs = tuple(sorted(elements.items()))
        return Axiom(axiom_id, formulas, pairs, overridden)

    @property
    def element_counts(self) -> Counter:
        return Counter(dict(self.elements))

    def atom_names(self) -> frozenset[str]:
        names: set[str] = set()
        for f in self.formulas:
            names |= atoms(f)
        return frozenset(names)


@dataclass(frozen=True)
class KnowledgeBase:
    axioms: tuple[Axiom, ...] = ()
    background: tuple[Formula, ...] = ()
    p_tests: tuple[Formula, ...] = ()
    n_tests: tuple[Formula, ...] = ()

    def __post_init__(self):
        seen = set()
        for ax in self.axioms:
            if ax.id in seen:
                raise ValueError(f"duplicate axiom id {ax.id!r}")
            seen.add(ax.id)

    def axiom(self, axiom_id: str) -> Axiom:
        for ax in self.axioms:
            if ax.id == axiom_id:
                return ax
        raise KeyError(axiom_id)

    def axiom_ids(self) -> tuple[str, ...]:
        return tuple(ax.id for ax in self.axioms)

    def atom_names(self) -> frozenset[str]:
        names: set[str] = set()
        for ax in self.axioms:
            names |= ax.atom_names()
        for f in self.background + self.p_tests + self.n_tests:
            names |= atoms(f)
        return frozenset(names)

    def replace_axiom(self, axiom: Axiom) -> "KnowledgeBase":
        new = tuple(axiom if ax.id == axiom.id else ax for ax in self.axioms)
        return KnowledgeBase(new, self.background, self.p_tests, self.n_tests)


# --- formula text parsing -------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(->|\||&|!|\(|\)|[A-Za-z_][A-Za-z0-9_]*|.)")


class _FormulaParser:
    """Recursive-descent parser over one formula string."""

    def __init__(self, text: str, line: int, col_offset: int):
        self.text = text
        self.line = line
        self.col_offset = col_offset
        self.tokens: list[tuple[str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                break
            tok = m.group(1)
            start = m.start(1)
            pos = m.end()
            if tok.strip():
                self.tokens.append((tok, start))
        self.index = 0

    def _error(self, message: str, at: int | None = None) -> KbParseError:
        if at is None:
            at = self.tokens[self.index][1] if self.index < len(self.tokens) else len(self.text)
        return KbParseError(message, self.line, self.col_offset + at + 1)

    def peek(self) -> str | None:
        if self.index < len(self.tokens):
            return self.tokens[self.index][0]
        return None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise self._error("unexpected end of formula")
        self.index += 1
        return tok

    def parse(self) -> Formula:
        if not self.tokens:
            raise self._error("empty formula", at=0)
        f = self.parse_implies()
        if self.index < len(self.tokens):
            raise self._error(f"unexpected token {self.peek()!r}")
        return f

    def parse_implies(self) -> Formula:
        lhs = self.parse_or()
        if self.peek() == "->":
            self.take()
            return Implies(lhs, self.parse_implies())
        return lhs

    def parse_or(self) -> Formula:
        parts = [self.parse_and()]
        while self.peek() == "|":
            self.take()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def parse_and(self) -> Formula:
        parts = [self.parse_unary()]
        while self.peek() == "&":
            self.take()
            parts.append(self.parse_unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise self._error("unexpected end of formula")
        if tok == "!":
            self.take()
            return Not(self.parse_unary())
        if tok == "(":
            self.take()
            inner = self.parse_implies()
            if self.peek() != ")":
                raise self._error("expected ')'")
            self.take()
            return inner
        if ATOM_NAME_RE.match(tok):
            self.take()
            return Atom(tok)
        raise self._error(f"unexpected token {tok!r}")


def parse_formula(text: str, line: int = 1, col_offset: int = 0) -> Formula:
    return _FormulaParser(text, line, col_offset).parse()


# --- KB file parsing ------------------------------------------------------

_SECTIONS = ("axioms", "background", "P", "N")
_AXIOM_LINE_RE = re.compile(
    r"^\s*(?P<id>[A-Za-z_][A-Za-z0-9_]*)\s*"
    r"(?P<elems>@elems=\s*[A-Za-z_][A-Za-z0-9_]*\s*:\s*\d+"
    r"(?:\s*,\s*[A-Za-z_][A-Za-z0-9_]*\s*:\s*\d+)*)?\s*"
    r":\s*(?P<body>.*)$"
)
_ELEM_ITEM_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(\d+)\Z")


def _strip_comment(raw: str) -> str:
    cut = raw.find("#")
    return raw if cut == -1 else raw[:cut]


def _parse_elems(annotation: str, line_no: int, offset: int) -> Counter:
    body = annotation[len("@elems="):].strip()
    counts: Counter = Counter()
    if not body:
        raise KbParseError("empty @elems annotation", line_no, offset + 1)
    for item in body.split(","):
        m = _ELEM_ITEM_RE.match(item.strip())
        if not m:
            raise KbParseError(f"bad @elems item {item.strip()!r}", line_no, offset + 1)
        name, count = m.group(1), int(m.group(2))
        if count < 1:
            raise KbParseError(f"@elems count must be positive in {item.strip()!r}", line_no, offset + 1)
        counts[name] += count
    return counts


def _iter_lines(text: str) -> Iterator[tuple[int, str]]:
    for i, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).rstrip()
        if line.strip():
            yield i, line


def parse_kb(text: str, validate: bool = True) -> KnowledgeBase:
    """Parse a KB document; optionally check the diagnosis-existence invariant.

    Raises KbParseError (with position) on syntax problems,
    DuplicateAxiomIdError on repeated axiom ids, and
    InconsistentInputError when background plus required entailments are
    already broken (no diagnosis can exist for such an input).
    """
    section = None
    axioms: list[Axiom] = []
    seen_ids: set[str] = set()
    sections: dict[str, list[Formula]] = {"background": [], "P": [], "N": []}
    section_order: list[str] = []

    for line_no, line in _iter_lines(text):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if name not in _SECTIONS:
                raise KbParseError(f"unknown section [{name}]", line_no, line.index("[") + 1)
            if section_order and _SECTIONS.index(name) <= _SECTIONS.index(section_order[-1]):
                raise KbParseError(f"section [{name}] out of order", line_no, line.index("[") + 1)
            section_order.append(name)
            section = name
            continue
        if section is None:
            raise KbParseError("content before [axioms] section", line_no, 1)
        if section == "axioms":
            m = _AXIOM_LINE_RE.match(line)
            if not m:
                raise KbParseError("expected '<id> [@elems=...] : <formula>'", line_no, 1)
            axiom_id = m.group("id")
            if axiom_id in seen_ids:
                raise DuplicateAxiomIdError(f"duplicate axiom id {axiom_id!r}", line_no, 1)
            seen_ids.add(axiom_id)
            elems = None
            if m.group("elems"):
                elems = _parse_elems(m.group("elems").strip(), line_no, m.start("elems"))
            body = m.group("body")
            body_offset = m.start("body")
            formulas = []
            piece_start = 0
            for piece in body.split(";"):
                if not piece.strip():
                    raise KbParseError("empty formula", line_no, body_offset + piece_start + 1)
                formulas.append(parse_formula(piece, line_no, body_offset + piece_start))
                piece_start += len(piece) + 1
            axioms.append(Axiom.make(axiom_id, formulas, elems))
        else:
            sections[section].append(parse_formula(line, line_no, 0))

    kb = KnowledgeBase(
        axioms=tuple(axioms),
        background=tuple(sections["background"]),
        p_tests=tuple(sections["P"]),
        n_tests=tuple(sections["N"]),
    )
    if validate:
        _check_problem_invariant(kb)
    return kb


def _check_problem_invariant(kb: KnowledgeBase) -> None:
    # A diagnosis exists iff B plus the conjunction of P is consistent and
    # entails no member of N; anything else is a broken input.
    from .reasoner import Reasoner

    reasoner = Reasoner()
    base = list(kb.background) + list(kb.p_tests)
    if not reasoner.is_consistent(base):
        raise InconsistentInputError("background and [P] sentences are jointly unsatisfiable")
    for n in kb.n_tests:
        if reasoner.entails(base, n):
            raise InconsistentInputError(
                f"background and [P] already entail forbidden sentence {format_formula(n)}"
            )


def serialize_kb(kb: KnowledgeBase) -> str:
    """Render a KB back to its file format; inverse of parse_kb."""
    lines = ["[axioms]"]
    for ax in kb.axioms:
        body = " ; ".join(format_formula(f) for f in ax.formulas)
        if ax.elements_overridden:
            elems = ",".join(f"{name}:{count}" for name, count in ax.elements)
            lines.append(f"{ax.id} @elems={elems} : {body}")
        else:
            lines.append(f"{ax.id} : {body}")
    for name, formulas in (("background", kb.background), ("P", kb.p_tests), ("N", kb.n_tests)):
        if formulas:
            lines.append("")
            lines.append(f"[{name}]")
            lines.extend(format_formula(f) for f in formulas)
    return "\n".join(lines) + "\n"
