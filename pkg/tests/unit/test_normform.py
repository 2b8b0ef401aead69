import pytest
from hypothesis import given, settings
from strategies import bor_formulas, left_dc_formulas, teams

from teamltl.datatypes import FragmentViolation, ResourceLimits
from teamltl.evalcore import eval_audited, eval_lax, eval_ltl
from teamltl.formula import TOP, Op, classify, desugar, neg_prop, or_, parse_formula, prop, size
from teamltl.normform import (
    QuasiFlatDisjunct,
    SelectionCursor,
    enumerate_selections,
    eval_dnf,
    eval_quasiflat,
    flat_equivalent,
    selection_at,
    to_dnf,
    to_quasiflat,
)
from teamltl.team import lasso

LIMITS = ResourceLimits()


@pytest.mark.parametrize(
    "text, expected",
    [
        ("p", ["p"]),
        ("G (p or q)", ["G p", "G q"]),
        ("(p or q) & X (r or s)", ["p & X r", "p & X s", "q & X r", "q & X s"]),
        ("(p or q) or r", ["p", "r", "q", "r"]),
    ],
)
def test_to_dnf(text, expected):
    """Test the disjunct lists of small Boolean-disjunction formulas."""
    assert to_dnf(parse_formula(text)).lines() == expected


def test_to_dnf_dedupe_drops_repeated_disjuncts():
    """Should keep only the first copy of each disjunct."""
    f = parse_formula("p or p")

    assert to_dnf(f).lines() == ["p", "p"]
    assert to_dnf(f, dedupe=True).lines() == ["p"]


def test_to_dnf_rejects_boolean_negation():
    """Should refuse Boolean negation."""
    with pytest.raises(FragmentViolation):
        to_dnf(parse_formula("~p"))


def test_dnf_formula_is_boolean_disjunction():
    assert to_dnf(parse_formula("p or q")).formula().op is Op.BOR


def test_flat_equivalent_uses_splitting_disjunction():
    assert flat_equivalent(parse_formula("G (p or q)")) == or_(parse_formula("G p"), parse_formula("G q"))


def test_enumerate_selections_follows_selection_order():
    assert list(enumerate_selections(parse_formula("p or q"))) == [prop("p"), prop("q")]
    assert list(enumerate_selections(parse_formula("G (p or q)"))) == [parse_formula("G p"), parse_formula("G q")]


def test_selection_cursor_streams_every_disjunct():
    """Test that a cursor yields every disjunct, honours index windows and restarts."""
    f = parse_formula("(p or q) & (q or r) & (r or s)")
    cursor = SelectionCursor(f)

    assert len(cursor) == 8
    assert list(cursor) == list(to_dnf(f).disjuncts)
    assert list(SelectionCursor(f, 2, 5)) == list(to_dnf(f).disjuncts[2:5])
    # restartable
    assert list(cursor) == list(cursor)


def test_selection_at_rejects_out_of_range_index():
    with pytest.raises(IndexError):
        selection_at(parse_formula("p or q"), 2)


@given(bor_formulas(), teams(max_size=3, max_length=2))
@settings(max_examples=500, deadline=None)
def test_dnf_is_equivalent_and_exactly_sized(f, team):
    """Test that the DNF is equivalent, has 2^k disjuncts and never grows a disjunct beyond the formula."""
    dnf = to_dnf(f)
    info = classify(f)

    assert len(dnf.disjuncts) == 2**info.bor_count
    assert all(size(alpha) <= size(desugar(f)) for alpha in dnf.disjuncts)
    assert eval_lax(team, f, limits=LIMITS) == eval_dnf(team, dnf)


@given(bor_formulas(depth=2), teams(max_size=2, max_length=2))
@settings(max_examples=200, deadline=None)
def test_dnf_agrees_with_extended_position_range(f, team):
    """Test that the DNF verdict matches lax evaluation with audit bound 2."""
    assert eval_audited(eval_lax, team, f, 2, limits=LIMITS) == eval_dnf(team, to_dnf(f))


@given(bor_formulas(depth=2), teams(max_size=2, max_length=2))
@settings(max_examples=200, deadline=None)
def test_flat_equivalent_agrees_on_singletons_and_is_implied(f, team):
    """Test that the flat equivalent matches on singletons and follows from the formula."""
    flat = flat_equivalent(f)

    for t in team:
        assert eval_ltl(t, flat) == eval_lax([t], f, limits=LIMITS)
    if eval_lax(team, f, limits=LIMITS):
        assert eval_lax(team, flat, limits=LIMITS)


@given(bor_formulas())
@settings(max_examples=200, deadline=None)
def test_selection_at_matches_dnf_order(f):
    """Test that indexed selection follows the DNF order."""
    disjuncts = to_dnf(f).disjuncts
    assert [selection_at(f, i) for i in range(len(disjuncts))] == list(disjuncts)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("p", [QuasiFlatDisjunct(prop("p"))]),
        ("~p", [QuasiFlatDisjunct(TOP, (neg_prop("p"),))]),
        ("~!p", [QuasiFlatDisjunct(TOP, (prop("p"),))]),
        ("X (p & E q)", [QuasiFlatDisjunct(parse_formula("X p"), (parse_formula("X q"),))]),
        ("G (p or q)", [QuasiFlatDisjunct(parse_formula("G p")), QuasiFlatDisjunct(parse_formula("G q"))]),
    ],
)
def test_to_quasiflat(text, expected):
    """Test the quasi-flat disjuncts of small formulas."""
    assert list(to_quasiflat(parse_formula(text)).disjuncts) == expected


def test_quasiflat_lines_render_existential_parts():
    assert to_quasiflat(parse_formula("~p")).lines() == ["top & E !p"]


@pytest.mark.parametrize("text", ["G (E p)", "(~p) U q", "dep(p, q)"])
def test_to_quasiflat_rejects_formulas_outside_fragment(text):
    """Should refuse formulas outside the left-downward-closed fragment."""
    with pytest.raises(FragmentViolation):
        to_quasiflat(parse_formula(text))


@pytest.mark.parametrize(
    "team, expected",
    [
        ([lasso("{}")], True),
        ([lasso("{p}")], False),
        ([lasso("{p}"), lasso("{}")], True),
        ([lasso("{p}", "{}")], False),
    ],
)
def test_negated_proposition_quasiflat_form(team, expected):
    f = parse_formula("~p")

    assert eval_quasiflat(team, to_quasiflat(f)) is expected
    assert eval_lax(team, f, limits=LIMITS) is expected


@given(left_dc_formulas(), teams(max_size=2, max_length=3))
@settings(max_examples=200, deadline=None)
def test_quasiflat_form_is_equivalent(f, team):
    """Test that the quasi-flat form is equivalent to the formula on random teams."""
    assert eval_lax(team, f, limits=LIMITS) == eval_quasiflat(team, to_quasiflat(f))


@given(left_dc_formulas(depth=2), teams(max_size=2, max_length=2))
@settings(max_examples=100, deadline=None)
def test_quasiflat_form_agrees_with_extended_position_range(f, team):
    """Test that the quasi-flat verdict matches lax evaluation with audit bound 2."""
    assert eval_audited(eval_lax, team, f, 2, limits=LIMITS) == eval_quasiflat(team, to_quasiflat(f))
