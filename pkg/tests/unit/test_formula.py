import pytest
from hypothesis import given, settings
from strategies import lassos, ltl_formulas

from teamltl.datatypes import FormulaSyntaxError, FragmentViolation
from teamltl.evalcore import eval_ltl
from teamltl.formula import (
    TOP,
    Op,
    and_,
    bor,
    classify,
    desugar,
    dual,
    globally,
    inc,
    is_downward_closed,
    make,
    neg_prop,
    next_,
    or_,
    parse_formula,
    parse_tef_formula,
    prop,
    props,
    render,
    size,
    until,
)

p, q, r = prop("p"), prop("q"), prop("r")


@pytest.mark.parametrize(
    "text, expected",
    [
        ("G (p or q)", globally(bor(p, q))),
        ("p U (q & X !r)", until(p, and_(q, next_(neg_prop("r"))))),
        ("inc(o1,c ; o1,!c)", inc([prop("o1"), prop("c")], [prop("o1"), neg_prop("c")])),
        ("p & q | r", or_(and_(p, q), r)),
        ("p | q or r", bor(or_(p, q), r)),
        ("p U q U r", until(p, until(q, r))),
        ("X p U q", until(next_(p), q)),
        ("F p", make(Op.FINALLY, p)),
    ],
)
def test_parse_formula_builds_expected_tree(text, expected):
    """Should parse each connective into the expected tree."""
    assert parse_formula(text) == expected


@pytest.mark.parametrize(
    "text",
    ["G (p or q)", "(p U q) U r", "~p", "X p", "dep(a, b)", "inc(a ; b)", "p U (p & q)", "G p or q"],
)
def test_render_prints_minimal_parentheses(text):
    """Should print formulas with as few parentheses as precedence allows."""
    assert render(parse_formula(text)) == text


@given(ltl_formulas())
@settings(max_examples=300, deadline=None)
def test_render_round_trips_through_parser(f):
    """Test that parsing the rendered text gives back the same formula."""
    assert parse_formula(render(f)) == f


def test_parse_formula_reports_end_of_input_position():
    """Should report line and column of an unexpected end of input."""
    with pytest.raises(FormulaSyntaxError, match="end of input") as excinfo:
        parse_formula("p &")

    assert excinfo.value.line == 1
    assert excinfo.value.column == 4


def test_parse_formula_reports_unexpected_character_position():
    """Should report line and column of an unexpected character."""
    with pytest.raises(FormulaSyntaxError, match="unexpected character") as excinfo:
        parse_formula("p $ q")

    assert excinfo.value.column == 3


@pytest.mark.parametrize("text", ["G", "p & U", "top U"])
def test_parse_formula_rejects_keywords_as_propositions(text):
    """Should refuse keywords used as proposition names."""
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_parse_formula_rejects_inc_with_different_arity():
    with pytest.raises(FormulaSyntaxError, match="arity"):
        parse_formula("inc(p, q ; r)")


def test_parse_formula_rejects_team_formula_inside_dep():
    with pytest.raises(FragmentViolation, match="dep atom"):
        parse_formula("dep(p or q, r)")


def test_tef_operators_only_parse_with_tef_parser():
    """Should accept tef operators only in the tef grammar."""
    with pytest.raises(FormulaSyntaxError):
        parse_formula("GA p")

    assert parse_tef_formula("GA p") == make(Op.GLOBALLY_ALL, p)
    assert parse_tef_formula("q ME p") == make(Op.STRONG_RELEASE_SOME, q, p)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("F p", until(TOP, p)),
        ("p W1 q", or_(globally(p), until(p, q))),
        ("p W2 q", bor(globally(p), until(p, q))),
        ("q M p", until(p, and_(p, q))),
        ("p R1 q", until(q, or_(and_(q, p), globally(q)))),
    ],
)
def test_desugar_rewrites_derived_operators(text, expected):
    """Should rewrite derived operators into primitive connectives."""
    assert desugar(parse_formula(text)) == expected


def test_desugar_leaves_primitive_formula_untouched():
    f = parse_formula("G (p or X q)")
    assert desugar(f) == f


@pytest.mark.parametrize(
    "text, expected",
    [
        ("p", neg_prop("p")),
        ("G p", until(TOP, neg_prop("p"))),
        (
            "p U q",
            or_(globally(neg_prop("q")), until(neg_prop("q"), and_(neg_prop("q"), neg_prop("p")))),
        ),
    ],
)
def test_dual_builds_negation_normal_form(text, expected):
    """Should push the negation down to literals."""
    assert dual(parse_formula(text)) == expected


def test_dual_rejects_team_connectives():
    with pytest.raises(FragmentViolation):
        dual(parse_formula("p or q"))


@given(ltl_formulas(), lassos(max_length=4))
@settings(max_examples=300, deadline=None)
def test_dual_complements_classical_truth(f, t):
    """Test that the dual is true exactly where the formula is false."""
    assert eval_ltl(t, dual(f)) != eval_ltl(t, f)


def test_classify_example_formula():
    """Test the fragment flags of G (p or q)."""
    info = classify(parse_formula("G (p or q)"))

    assert not info.is_ltl
    assert not info.is_left_flat
    assert info.is_left_dc
    assert info.bor_count == 1
    assert info.size == 4


def test_classify_boolean_disjunction_of_ltl_is_left_flat():
    assert classify(parse_formula("(G p) or q")).is_left_flat


def test_classify_existential_under_globally_is_not_left_dc():
    """Test that E under G leaves the left-downward-closed fragment."""
    info = classify(parse_formula("G (E p1 or E p2)"))

    assert info.has_bneg
    assert not info.is_left_dc
    assert not info.is_left_flat


def test_classify_reports_atoms_and_tef_operators():
    assert classify(parse_formula("G dep(p, q)")).has_atoms
    assert classify(parse_tef_formula("p UE q")).has_tef


@pytest.mark.parametrize(
    "text, expected",
    [
        ("G (p or q) U X p", True),
        ("dep(p, q) | X p", True),
        ("~p", False),
        ("G E p", False),
        ("inc(p ; q)", False),
    ],
)
def test_is_downward_closed(text, expected):
    assert is_downward_closed(desugar(parse_formula(text))) is expected

@given(ltl_formulas())
@settings(max_examples=200, deadline=None)
def test_classify_ltl_formulas_sit_at_the_bottom_of_the_fragment_chain(f):
    """Test that every LTL formula is left-flat and left-downward-closed."""
    info = classify(f)

    assert info.is_ltl and info.is_left_flat and info.is_left_dc
    assert info.size == size(f)


def test_props_collects_literal_names():
    assert props(parse_formula("G (p | !q) or X r")) == {"p", "q", "r"}
