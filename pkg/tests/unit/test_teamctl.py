from itertools import product

import pytest
from hypothesis import given, settings
from strategies import left_flat_tef_formulas, multiteams

from teamltl.datatypes import Direction, FragmentViolation, ResourceLimitExceeded, ResourceLimits
from teamltl.evalcore import eval_lax, eval_strict
from teamltl.formula import Op, make, parse_formula, parse_tef_formula, render
from teamltl.team import Multiteam, lasso
from teamltl.teamctl import ConfigurationGraph, eval_tef, translate

LIMITS = ResourceLimits()


@pytest.fixture(scope="function")
def staggered():
    """{p}{q}^w next to {p}{p}{q}^w"""
    return Multiteam.from_traces([lasso("{p}", "{q}"), lasso("{p}{p}", "{q}")])


def test_globally_all_on_constant_traces():
    """Test GA on traces that never change."""
    team = Multiteam.from_traces([lasso("{p}"), lasso("{p}")])
    assert eval_tef(team, parse_tef_formula("GA p"), limits=LIMITS)


def test_until_some_freezes_one_trace(staggered):
    """Test that UE can let one trace wait while another advances."""
    assert eval_tef(staggered, parse_tef_formula("p UE q"), limits=LIMITS)


def test_until_some_needs_the_right_configuration(staggered):
    assert not eval_tef(staggered, parse_tef_formula("p UE (q & X p)"), limits=LIMITS)


def test_until_all_requires_every_path(staggered):
    """Test that UA fails when some schedule never reaches the goal."""
    # advancing only the first trace reaches {q} next to {p}
    assert not eval_tef(staggered, parse_tef_formula("p UA q"), limits=LIMITS)
    assert eval_tef(Multiteam.from_traces([lasso("{p}", "{q}")]), parse_tef_formula("p UA q"), limits=LIMITS)


def test_next_operators():
    """Test XE and XA on one and two copies of a trace."""
    single = Multiteam.from_traces([lasso("{p}", "{q}")])

    assert eval_tef(single, parse_tef_formula("XA q"), limits=LIMITS)
    assert eval_tef(single, parse_tef_formula("XE q"), limits=LIMITS)

    pair = Multiteam.from_traces([lasso("{p}", "{q}"), lasso("{p}", "{q}")])
    assert eval_tef(pair, parse_tef_formula("XE (p | q)"), limits=LIMITS)
    assert not eval_tef(pair, parse_tef_formula("XA q"), limits=LIMITS)


def test_globally_some_keeps_one_trace_waiting():
    """Test that GE holds along a schedule that keeps one trace waiting."""
    team = Multiteam.from_traces([lasso("{p}", "{q}"), lasso("{p}")])

    assert eval_tef(team, parse_tef_formula("GE p"), limits=LIMITS)
    assert not eval_tef(team, parse_tef_formula("GA p"), limits=LIMITS)
    assert eval_tef(team, parse_tef_formula("GA (p | q)"), limits=LIMITS)
    assert not eval_tef(team, parse_tef_formula("GE q"), limits=LIMITS)


def test_empty_multiteam_satisfies_tef_operators():
    """Should accept every tef operator on the empty multiteam."""
    assert eval_tef(Multiteam([]), parse_tef_formula("GE bot"), limits=LIMITS)


def test_tef_operator_under_globally_is_rejected():
    """Should refuse tef operators nested under G."""
    with pytest.raises(FragmentViolation, match="tef operators"):
        eval_tef(Multiteam.from_traces([lasso("{p}")]), parse_tef_formula("G (XA p)"), limits=LIMITS)


def test_configuration_limit():
    """Should raise when the configuration graph exceeds the configs limit."""
    traces = [lasso("{p}{q}", "{r}")] * 2
    with pytest.raises(ResourceLimitExceeded) as excinfo:
        ConfigurationGraph(traces, ResourceLimits(configs=8))

    assert excinfo.value.limit == "configs"


def test_configuration_graph_reaches_every_configuration():
    graph = ConfigurationGraph([lasso("{p}", "{q}"), lasso("{p}{p}", "{q}")], LIMITS)

    assert graph.initial == (0, 0)
    assert sorted(graph.reachable()) == [(i, j) for i in range(2) for j in range(3)]
    assert graph.successors((1, 2)) == [(1, 2)]


def tef_prefixes(traces, steps):
    """Canonicalized runs of every stepwise strictly monotone clock assignment."""
    runs = {(tuple(0 for _ in traces),)}
    for _ in range(steps):
        runs = {
            run + (tuple(t.canonical(pos + move) for t, pos, move in zip(traces, run[-1], moves)),)
            for run in runs
            for moves in product((0, 1), repeat=len(traces))
            if any(moves)
        }
    return runs


@pytest.mark.parametrize("steps", range(5))
@pytest.mark.parametrize(
    "traces",
    [
        [lasso("{p}", "{q}")],
        [lasso("{p}", "{q}"), lasso("{p}{p}", "{q}")],
        [lasso("{p}{q}"), lasso("{q}", "{p}{q}")],
    ],
)
def test_configuration_paths_match_clock_assignments(traces, steps):
    """Test that configuration paths are exactly the stepwise clock assignments."""
    graph = ConfigurationGraph(traces, LIMITS)
    assert set(graph.paths(steps)) == tef_prefixes(traces, steps)


@pytest.mark.parametrize(
    "text, direction, expected",
    [
        ("GA p", Direction.TO_LTL, "G p"),
        ("q ME p", Direction.TO_LTL, "p U (p & q)"),
        ("X (p or q)", Direction.TO_LTL, "X (p or q)"),
        ("G p", Direction.TO_CTL, "GA p"),
        ("q M p", Direction.TO_CTL, "q ME p"),
        ("F p", Direction.TO_CTL, "p ME top"),
        ("X (p or q)", Direction.TO_CTL, "X (p or q)"),
    ],
)
def test_translate(text, direction, expected):
    """Test both translation directions on small formulas."""
    parse = parse_tef_formula if direction is Direction.TO_LTL else parse_formula
    assert render(translate(parse(text), direction)) == expected


@pytest.mark.parametrize(
    "text, direction",
    [
        ("p UE q", Direction.TO_LTL),
        ("GA (p or q)", Direction.TO_LTL),
        ("p U q", Direction.TO_CTL),
        ("G (p or q)", Direction.TO_CTL),
    ],
)
def test_translate_rejects_sources_outside_fragment(text, direction):
    with pytest.raises(FragmentViolation):
        translate(parse_tef_formula(text), direction)


@given(left_flat_tef_formulas(), multiteams(max_size=2, max_length=3))
@settings(max_examples=200, deadline=None)
def test_translation_preserves_satisfaction(f, team):
    """Test that tef evaluation matches strict evaluation of the translated formula."""
    translated = translate(f, Direction.TO_LTL)
    holds = eval_tef(team, f, limits=LIMITS)

    assert holds == eval_strict(team, translated, limits=LIMITS)
    assert holds == eval_lax(team.support(), translated, limits=LIMITS)


@given(multiteams(max_size=2, max_length=3))
@settings(max_examples=100, deadline=None)
def test_globally_all_checks_every_suffix_for_flat_argument(team):
    f = make(Op.GLOBALLY_ALL, parse_formula("p | X q"))
    expected = all(eval_strict([t.suffix(i)], parse_formula("p | X q"), limits=LIMITS) for t in team.support() for i in range(t.length))

    assert eval_tef(team, f, limits=LIMITS) == expected
