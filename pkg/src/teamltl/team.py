"""Lasso traces, teams and multiteams."""

from collections import Counter
from typing import Iterable, Iterator, NamedTuple, Optional

from teamltl.datatypes import ModelFormatError
from teamltl.utils import (
    MULTI_DECL_PTRN,
    TRACE_DECL_PTRN,
    iter_content_lines,
    parse_steps,
    render_step,
)

Letter = frozenset[str]


def _primitive_root(loop: tuple[Letter, ...]) -> tuple[Letter, ...]:
    n = len(loop)
    for d in range(1, n):
        if n % d == 0 and loop[:d] * (n // d) == loop:
            return loop[:d]
    return loop


class LassoTrace:
    """The ultimately periodic trace `prefix loop loop loop ...`.

    Construction normalizes to the primitive loop with the longest possible
    prefix absorbed into it, so two lassos are equal iff they denote the same
    infinite word, and positions 0 .. length-1 have pairwise distinct suffixes.
    """

    __slots__ = ("prefix", "loop", "_hash", "_suffixes")

    def __init__(self, prefix: Iterable[Iterable[str]], loop: Iterable[Iterable[str]]):
        prefix = tuple(frozenset(letter) for letter in prefix)
        loop = tuple(frozenset(letter) for letter in loop)
        if not loop:
            raise ValueError("the loop of a lasso trace must be nonempty")
        loop = _primitive_root(loop)
        while prefix and prefix[-1] == loop[-1]:
            prefix = prefix[:-1]
            loop = loop[-1:] + loop[:-1]
        self.prefix = prefix
        self.loop = loop
        self._hash = hash((prefix, loop))
        self._suffixes: dict[int, "LassoTrace"] = {}

    def __eq__(self, other):
        if not isinstance(other, LassoTrace):
            return NotImplemented
        return self._hash == other._hash and self.prefix == other.prefix and self.loop == other.loop

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"LassoTrace({self})"

    def __str__(self):
        prefix = " ".join(map(render_step, self.prefix))
        loop = " ".join(map(render_step, self.loop))
        return f"{prefix} / {loop}" if prefix else f"/ {loop}"

    def omega(self) -> str:
        """Human-readable rendering, e.g. `{p}({q})^w`."""
        return "".join(map(render_step, self.prefix)) + "(" + "".join(map(render_step, self.loop)) + ")^w"

    @property
    def length(self) -> int:
        return len(self.prefix) + len(self.loop)

    def sort_key(self) -> str:
        return str(self)

    def at(self, i: int) -> Letter:
        return self.letter(self.canonical(i))

    def letter(self, i: int) -> Letter:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[i - len(self.prefix)]

    def canonical(self, i: int) -> int:
        """The position in 0 .. length-1 whose suffix equals the suffix at `i`."""
        if i < self.length:
            return i
        p = len(self.prefix)
        return p + (i - p) % len(self.loop)

    def successor(self, i: int) -> int:
        return self.canonical(self.canonical(i) + 1)

    def suffix(self, i: int) -> "LassoTrace":
        i = self.canonical(i)
        if i not in self._suffixes:
            p = len(self.prefix)
            if i < p:
                self._suffixes[i] = LassoTrace(self.prefix[i:], self.loop)
            else:
                rotation = i - p
                self._suffixes[i] = LassoTrace((), self.loop[rotation:] + self.loop[:rotation])
        return self._suffixes[i]

    def unroll(self, steps: int) -> tuple[Letter, ...]:
        return tuple(self.at(i) for i in range(steps))

    def restrict(self, ap: frozenset[str]) -> "LassoTrace":
        return LassoTrace(
            (letter & ap for letter in self.prefix), (letter & ap for letter in self.loop)
        )


Team = frozenset[LassoTrace]


def sorted_traces(team: Iterable[LassoTrace]) -> list[LassoTrace]:
    return sorted(team, key=LassoTrace.sort_key)


def suffix(t: LassoTrace, i: int) -> LassoTrace:
    return t.suffix(i)


def canonical_positions(t: LassoTrace) -> frozenset[int]:
    return frozenset(range(t.length))


def restrict_ap(team: Team, ap: Iterable[str]) -> Team:
    ap = frozenset(ap)
    return frozenset(t.restrict(ap) for t in team)


class Entry(NamedTuple):
    index: str
    trace: LassoTrace


class Multiteam:
    """A finite multiset of traces, kept as (index, trace) entries."""

    __slots__ = ("entries",)

    def __init__(self, entries: Iterable[Entry]):
        self.entries = tuple(Entry(*entry) for entry in entries)
        indices = [entry.index for entry in self.entries]
        if len(set(indices)) != len(indices):
            raise ValueError("multiteam indices must be pairwise distinct")

    @classmethod
    def from_traces(cls, traces: Iterable[LassoTrace]) -> "Multiteam":
        return cls(Entry(str(i), t) for i, t in enumerate(traces, 1))

    def __iter__(self) -> Iterator[Entry]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"Multiteam({', '.join(f'{e.index}: {e.trace}' for e in self.entries)})"

    def traces(self) -> list[LassoTrace]:
        return [entry.trace for entry in self.entries]

    def support(self) -> Team:
        return frozenset(self.traces())

    def bag(self) -> "Bag":
        return make_bag(self.traces())


# A multiset of traces without indices; the strict semantics never looks at indices.
Bag = frozenset[tuple[LassoTrace, int]]


def make_bag(traces: Iterable[LassoTrace]) -> Bag:
    return frozenset(Counter(traces).items())


def bag_traces(bag: Bag) -> list[LassoTrace]:
    """Expand a bag into a deterministic list with repetitions."""
    return [t for t, count in sorted(bag, key=lambda item: item[0].sort_key()) for _ in range(count)]


def parse_team(text: str) -> Multiteam:
    """Parse a team file into a multiteam.

    Lines are `trace NAME = STEP* / STEP+` (the part after `/` is the loop) or
    `multi NAME xK` for K copies of an already declared trace. `#` starts a comment.
    """
    traces: dict[str, LassoTrace] = {}
    copies: dict[str, int] = {}
    for line_no, line in iter_content_lines(text):
        if trace_match := TRACE_DECL_PTRN.fullmatch(line):
            name = trace_match.group("name")
            if name in traces:
                raise ModelFormatError(f"trace {name} declared twice", line_no)
            prefix = parse_steps(trace_match.group("prefix"), line_no)
            loop = parse_steps(trace_match.group("loop"), line_no)
            if not loop:
                raise ModelFormatError(f"trace {name} has an empty loop", line_no)
            traces[name] = LassoTrace(prefix, loop)
        elif multi_match := MULTI_DECL_PTRN.fullmatch(line):
            name = multi_match.group("name")
            count = int(multi_match.group("count"))
            if name not in traces:
                raise ModelFormatError(f"multi refers to undeclared trace {name}", line_no)
            if count < 1:
                raise ModelFormatError(f"multiplicity of {name} must be at least 1", line_no)
            copies[name] = count
        else:
            raise ModelFormatError(f"cannot parse '{line}'", line_no)

    entries = []
    for name, trace in traces.items():
        count = copies.get(name, 1)
        if count == 1:
            entries.append(Entry(name, trace))
        else:
            entries.extend(Entry(f"{name}#{k}", trace) for k in range(1, count + 1))
    return Multiteam(entries)


def render_team_file(team: Iterable[LassoTrace], name: str = "t") -> str:
    lines = [f"trace {name}{i} = {t}" for i, t in enumerate(sorted_traces(team), 1)]
    return "\n".join(lines) + "\n"


def lasso(prefix: str, loop: Optional[str] = None) -> LassoTrace:
    """Build a lasso from step text, `lasso("{p}", "{q}")` is {p}{q}^w."""
    if loop is None:
        prefix, loop = "", prefix
    return LassoTrace(parse_steps(prefix), parse_steps(loop))
