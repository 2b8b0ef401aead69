from textwrap import dedent

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from strategies import lassos, teams

from teamltl.datatypes import ModelFormatError
from teamltl.team import (
    Entry,
    LassoTrace,
    Multiteam,
    bag_traces,
    canonical_positions,
    lasso,
    make_bag,
    parse_team,
    render_team_file,
    restrict_ap,
    suffix,
)


@pytest.fixture(scope="function")
def team_text():
    return dedent("""
    # example team
    trace t1 = {p} / {q}
    trace t2 = / {p, q}   # constant trace
    multi t1 x2
    """)


def test_lasso_normalizes_repeated_loop():
    """Should shrink a repeated loop to its primitive root."""
    assert lasso("{p}{q}{p}{q}") == lasso("{p}{q}")


def test_lasso_absorbs_prefix_into_loop():
    """Should fold a prefix that repeats the loop into it."""
    assert lasso("{p}", "{p}") == lasso("{p}")
    assert LassoTrace([{"q"}], [{"p"}, {"q"}]) == lasso("{q}{p}")


def test_lasso_rejects_empty_loop():
    with pytest.raises(ValueError, match="nonempty"):
        LassoTrace([{"p"}], [])


def test_lasso_renders_team_file_and_omega_notation():
    t = lasso("{p}", "{q}")

    assert str(t) == "{p} / {q}"
    assert str(lasso("{p,q}")) == "/ {p,q}"
    assert t.omega() == "{p}({q})^w"


@pytest.mark.parametrize(
    "t, i, expected",
    [
        (lasso("{p}", "{q}"), 0, lasso("{p}", "{q}")),
        (lasso("{p}", "{q}"), 1, lasso("{q}")),
        (lasso("{p}", "{q}{r}"), 5, lasso("{q}{r}")),
    ],
)
def test_suffix(t, i, expected):
    assert suffix(t, i) == expected


def test_suffix_beyond_prefix_matches_unrolled_letters():
    t = lasso("{p}", "{q}{r}")
    assert t.suffix(5).unroll(8) == t.unroll(13)[5:]


@pytest.mark.parametrize(
    "t, expected",
    [
        (lasso("{p}"), {0}),
        (lasso("{p}", "{q}"), {0, 1}),
        (lasso("{p}{p}", "{q}{r}"), {0, 1, 2, 3}),
    ],
)
def test_canonical_positions(t, expected):
    assert canonical_positions(t) == expected


def test_restrict_ap_projects_and_collapses_traces():
    """Test that projection merges traces that become equal."""
    assert restrict_ap({lasso("{p,q}")}, {"p"}) == {lasso("{p}")}
    assert restrict_ap({lasso("{p,q}"), lasso("{p}")}, {"p"}) == {lasso("{p}")}
    assert restrict_ap({lasso("{p}", "{q}"), lasso("{q}")}, set()) == {lasso("{}")}


@given(lassos(max_length=4), st.integers(0, 10), st.integers(0, 6))
@settings(max_examples=300, deadline=None)
def test_suffix_shifts_letters(t, i, j):
    assert t.suffix(i).at(j) == t.at(i + j)


@given(lassos(max_length=4))
@settings(max_examples=300, deadline=None)
def test_canonical_positions_have_distinct_suffixes(t):
    suffixes = {t.suffix(i) for i in range(t.length)}

    assert len(suffixes) == t.length
    assert {t.suffix(i) for i in range(3 * t.length)} == suffixes


def test_multiteam_rejects_repeated_indices():
    with pytest.raises(ValueError, match="distinct"):
        Multiteam([Entry("a", lasso("{p}")), Entry("a", lasso("{q}"))])


def test_multiteam_bag_counts_copies():
    t = lasso("{p}", "{q}")
    team = Multiteam.from_traces([t, t, lasso("{q}")])

    assert team.support() == {t, lasso("{q}")}
    assert team.bag() == make_bag([t, lasso("{q}"), t])
    assert bag_traces(team.bag()).count(t) == 2


def test_parse_team_expands_multiplicities(team_text):
    """Should expand multi lines into repeated multiteam entries."""
    team = parse_team(team_text)

    assert [entry.index for entry in team] == ["t1#1", "t1#2", "t2"]
    assert team.traces() == [lasso("{p}", "{q}"), lasso("{p}", "{q}"), lasso("{p,q}")]


@given(teams(max_size=3))
@settings(max_examples=100, deadline=None)
def test_render_team_file_parses_back(team):
    assert parse_team(render_team_file(team)).support() == team


@pytest.mark.parametrize(
    "text, message",
    [
        ("trace t = {p} / {q}\ntrace t = / {p}", "line 2: trace t declared twice"),
        ("trace t = {p} /", "empty loop"),
        ("multi t x2", "undeclared trace t"),
        ("trace t = / {p}\nmulti t x0", "at least 1"),
        ("trace t = / {1p}", "invalid proposition name"),
        ("trace t = {p} {q / {p}", "invalid step sequence"),
        ("team t", "cannot parse"),
    ],
)
def test_parse_team_errors(text, message):
    """Should reject malformed team files with a descriptive message."""
    with pytest.raises(ModelFormatError, match=message):
        parse_team(text)
