from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from kbdebug.errors import DuplicateAxiomIdError, InconsistentInputError, KbParseError
from kbdebug.formulas import And, Atom, Implies, Not, Or, format_formula
from kbdebug.kbfile import Axiom, KnowledgeBase, parse_kb, serialize_kb

from .test_formulas import formulas


def test_parse_ex1(ex1_kb):
    assert ex1_kb.axiom_ids() == ("ax1", "ax2", "ax3", "ax4")
    assert ex1_kb.background == (Atom("A_w"), Not(Atom("R_w")), Atom("A_v"))
    assert ex1_kb.axiom("ax1").formulas == (Implies(Atom("A_w"), Atom("B_w")),)


def test_parse_single_atom_axiom():
    kb = parse_kb("[axioms]\nax1: X\n")
    assert len(kb.axioms) == 1
    assert kb.axioms[0].formulas == (Atom("X"),)
    # connective-free axioms still carry a non-empty element multiset
    assert kb.axioms[0].element_counts == Counter({"atom": 1})


def test_duplicate_axiom_id_rejected():
    text = "[axioms]\nax1: X\nax1: Y\n"
    with pytest.raises(DuplicateAxiomIdError) as err:
        parse_kb(text)
    assert err.value.line == 3


def test_unsatisfiable_background_rejected():
    text = "[axioms]\nax1: X\n[background]\nY\n!Y\n"
    with pytest.raises(InconsistentInputError):
        parse_kb(text)


def test_background_entailing_forbidden_rejected():
    text = "[axioms]\nax1: X\n[background]\nY\n[N]\nY\n"
    with pytest.raises(InconsistentInputError):
        parse_kb(text)


def test_syntax_error_carries_position():
    with pytest.raises(KbParseError) as err:
        parse_kb("[axioms]\nax1: A &\n")
    assert err.value.line == 2
    assert err.value.column >= 6


def test_unknown_section():
    with pytest.raises(KbParseError):
        parse_kb("[stuff]\n")


def test_content_before_axioms_section():
    with pytest.raises(KbParseError):
        parse_kb("A -> B\n")


def test_comments_and_blank_lines_ignored():
    kb = parse_kb("# header\n[axioms]\n\nax1: A -> B  # trailing\n")
    assert kb.axiom_ids() == ("ax1",)


def test_multi_formula_axiom():
    kb = parse_kb("[axioms]\nax1: A -> B ; C -> D\n")
    assert kb.axiom("ax1").formulas == (
        Implies(Atom("A"), Atom("B")),
        Implies(Atom("C"), Atom("D")),
    )


def test_element_annotation_overrides_derived():
    kb = parse_kb("[axioms]\nax1 @elems=exists:2,not:1 : A -> B\n")
    ax = kb.axiom("ax1")
    assert ax.element_counts == Counter({"exists": 2, "not": 1})
    assert ax.elements_overridden


def test_annotation_round_trips_verbatim():
    text = "[axioms]\nax1 @elems=exists:2,not:1 : A -> B\n"
    kb = parse_kb(text)
    out = serialize_kb(kb)
    assert "@elems=exists:2,not:1" in out
    assert parse_kb(out) == kb


def test_serialize_ex1_round_trips(ex1_kb):
    assert parse_kb(serialize_kb(ex1_kb)) == ex1_kb


def test_serialize_empty_kb():
    kb = KnowledgeBase()
    text = serialize_kb(kb)
    assert text.startswith("[axioms]")
    assert parse_kb(text) == kb


def test_p_and_n_sections():
    text = "[axioms]\nax1: A -> B\n[background]\nA\n[P]\nB\n[N]\nC\n"
    kb = parse_kb(text)
    assert kb.p_tests == (Atom("B"),)
    assert kb.n_tests == (Atom("C"),)
    assert parse_kb(serialize_kb(kb)) == kb


def test_sections_out_of_order_rejected():
    with pytest.raises(KbParseError):
        parse_kb("[axioms]\nax1: X\n[P]\nX\n[background]\nX\n")


@settings(max_examples=80, deadline=None)
@given(st.lists(formulas, min_size=1, max_size=4),
       st.lists(formulas, min_size=0, max_size=2))
def test_parse_serialize_identity(axiom_formulas, background):
    kb = KnowledgeBase(
        axioms=tuple(Axiom.make(f"ax{i}", [f]) for i, f in enumerate(axiom_formulas)),
        background=tuple(background),
    )
    assert parse_kb(serialize_kb(kb), validate=False) == kb
