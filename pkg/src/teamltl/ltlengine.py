"""Classical LTL machinery: Kripke structures, Buechi automata, model checking and satisfiability.

Automata are built by a tableau over obligation sets with a counter that
degeneralizes the until acceptance sets. Emptiness is decided by a nested
depth-first search over successors in sorted order, so witnesses are
reproducible.
"""

from collections import deque
from typing import Callable, Hashable, Iterable, NamedTuple, Optional, Sequence

from teamltl.datatypes import KripkeStructure, ModelFormatError, Verdict, WitnessVerificationError
from teamltl.evalcore import ltl_truth
from teamltl.formula import Formula, Op, dual, props, render, require_ltl, walk
from teamltl.package_logger import logger
from teamltl.team import LassoTrace
from teamltl.utils import EDGE_PTRN, INIT_PTRN, LABEL_PTRN, STATES_PTRN, iter_content_lines, parse_step


def parse_kripke(text: str) -> KripkeStructure:
    """Parse `states:`, `init:`, `label` and `edge` lines into a checked structure."""
    states: Optional[list[str]] = None
    initial: Optional[str] = None
    labels: dict[str, frozenset[str]] = {}
    edges: dict[str, list[str]] = {}

    for line_no, line in iter_content_lines(text):
        if states_match := STATES_PTRN.fullmatch(line):
            if states is not None:
                raise ModelFormatError("states declared twice", line_no)
            states = states_match.group("states").split()
            if not states:
                raise ModelFormatError("no states declared", line_no)
            if len(set(states)) != len(states):
                raise ModelFormatError("duplicate state name", line_no)
        elif init_match := INIT_PTRN.fullmatch(line):
            if initial is not None:
                raise ModelFormatError("initial state declared twice", line_no)
            initial = init_match.group("state")
        elif label_match := LABEL_PTRN.fullmatch(line):
            state = label_match.group("state")
            if state in labels:
                raise ModelFormatError(f"state {state} labeled twice", line_no)
            labels[state] = parse_step(label_match.group("step"), line_no)
        elif edge_match := EDGE_PTRN.fullmatch(line):
            edges.setdefault(edge_match.group("source"), []).append(edge_match.group("target"))
        else:
            raise ModelFormatError(f"cannot parse '{line}'", line_no)

    if states is None:
        raise ModelFormatError("missing 'states:' line")
    if initial is None:
        raise ModelFormatError("missing 'init:' line")
    for state in labels:
        if state not in states:
            raise ModelFormatError(f"label for undeclared state {state}")
    return KripkeStructure(states=states, edges=edges, labels=labels, initial=initial).check_structure()


# Nested depth-first search

_DONE = object()


def nested_dfs(
    initial: Iterable[Hashable],
    successors: Callable[[Hashable], Sequence[Hashable]],
    accepting: Callable[[Hashable], bool],
) -> Optional[tuple[list, list]]:
    """Find a reachable accepting cycle.

    Returns `(stem, cycle)` where `stem` runs from an initial node to an
    accepting node `s` and `cycle` runs from `s` back to `s`, or None.
    """
    outer_seen: set = set()
    inner_seen: set = set()
    for root in initial:
        if root in outer_seen:
            continue
        outer_seen.add(root)
        stack = [(root, iter(successors(root)))]
        while stack:
            node, pending = stack[-1]
            nxt = next(pending, _DONE)
            if nxt is not _DONE:
                if nxt not in outer_seen:
                    outer_seen.add(nxt)
                    stack.append((nxt, iter(successors(nxt))))
                continue
            stack.pop()
            if accepting(node):
                cycle = _find_cycle(node, successors, inner_seen)
                if cycle is not None:
                    return [n for n, _ in stack] + [node], cycle
    return None


def _find_cycle(seed: Hashable, successors: Callable, inner_seen: set) -> Optional[list]:
    inner_seen.add(seed)
    stack = [(seed, iter(successors(seed)))]
    while stack:
        node, pending = stack[-1]
        nxt = next(pending, _DONE)
        if nxt is _DONE:
            stack.pop()
        elif nxt == seed:
            return [n for n, _ in stack] + [seed]
        elif nxt not in inner_seen:
            inner_seen.add(nxt)
            stack.append((nxt, iter(successors(nxt))))
    return None


def _shortest_path(source: Hashable, target: Hashable, successors: Callable, nonempty: bool = False) -> Optional[list]:
    """Breadth-first path from `source` to `target`, at least one edge long when `nonempty`."""
    if source == target and not nonempty:
        return [source]
    parents: dict = {}
    queue = deque([source])
    seen = set() if nonempty else {source}
    while queue:
        node = queue.popleft()
        for nxt in successors(node):
            if nxt in seen:
                continue
            seen.add(nxt)
            parents[nxt] = node
            if nxt == target:
                path = [target]
                while path[-1] != source or len(path) == 1:
                    path.append(parents[path[-1]])
                return path[::-1]
            queue.append(nxt)
    return None


def shortest_lasso(
    initial: Hashable, stem: list, cycle: list, successors: Callable
) -> tuple[list, list]:
    """Shorten a found lasso: shortest stem to the accepting node and shortest cycle through it."""
    seed = cycle[0]
    return (
        _shortest_path(initial, seed, successors) or stem,
        _shortest_path(seed, seed, successors, nonempty=True) or cycle,
    )


# Buechi automata


class BuchiTransition(NamedTuple):
    source: int
    positive: frozenset[str]
    negative: frozenset[str]
    target: int

    def matches(self, letter: frozenset[str]) -> bool:
        return self.positive <= letter and not self.negative & letter


class BuchiAutomaton(NamedTuple):
    """State-based Buechi automaton over letters in 2^alphabet.

    State `i` is labeled by `labels[i] = (obligations, counter)`; 0 is initial.
    """

    alphabet: frozenset[str]
    labels: tuple[tuple[frozenset[Formula], int], ...]
    transitions: tuple[BuchiTransition, ...]
    accepting: frozenset[int]
    initial: tuple[int, ...] = (0,)

    @property
    def states(self) -> range:
        return range(len(self.labels))

    def outgoing(self) -> dict[int, list[BuchiTransition]]:
        table: dict[int, list[BuchiTransition]] = {q: [] for q in self.states}
        for transition in self.transitions:
            table[transition.source].append(transition)
        return table

    def accepts(self, t: LassoTrace) -> bool:
        """Does some run on the lasso visit an accepting state infinitely often?"""
        table = self.outgoing()

        def successors(node):
            pos, q = node
            letter = t.letter(pos)
            return sorted({(t.successor(pos), tr.target) for tr in table[q] if tr.matches(letter)})

        found = nested_dfs([(0, q) for q in self.initial], successors, lambda node: node[1] in self.accepting)
        return found is not None


class _Expansion(NamedTuple):
    positive: frozenset[str]
    negative: frozenset[str]
    following: frozenset[Formula]
    postponed: frozenset[Formula]


def _expand(
    todo: tuple[Formula, ...],
    seen: frozenset[Formula],
    positive: frozenset[str],
    negative: frozenset[str],
    following: frozenset[Formula],
    postponed: frozenset[Formula],
):
    if not todo:
        yield _Expansion(positive, negative, following, postponed)
        return
    f, rest = todo[0], todo[1:]
    if f in seen:
        yield from _expand(rest, seen, positive, negative, following, postponed)
        return
    seen = seen | {f}
    match f.op:
        case Op.PROP:
            if f.name not in negative:
                yield from _expand(rest, seen, positive | {f.name}, negative, following, postponed)
        case Op.NEG_PROP:
            if f.name not in positive:
                yield from _expand(rest, seen, positive, negative | {f.name}, following, postponed)
        case Op.TOP:
            yield from _expand(rest, seen, positive, negative, following, postponed)
        case Op.BOT:
            return
        case Op.AND:
            yield from _expand(f.args + rest, seen, positive, negative, following, postponed)
        case Op.OR:
            for arg in f.args:
                yield from _expand((arg,) + rest, seen, positive, negative, following, postponed)
        case Op.NEXT:
            yield from _expand(rest, seen, positive, negative, following | {f.args[0]}, postponed)
        case Op.GLOBALLY:
            yield from _expand((f.args[0],) + rest, seen, positive, negative, following | {f}, postponed)
        case Op.UNTIL:
            left, right = f.args
            yield from _expand((right,) + rest, seen, positive, negative, following, postponed)
            yield from _expand((left,) + rest, seen, positive, negative, following | {f}, postponed | {f})


def _expansions(obligations: frozenset[Formula]) -> list[_Expansion]:
    empty: frozenset = frozenset()
    todo = tuple(sorted(obligations, key=render))
    found = set(_expand(todo, empty, empty, empty, empty, empty))
    return sorted(
        found,
        key=lambda e: (sorted(e.positive), sorted(e.negative), sorted(map(render, e.following)), sorted(map(render, e.postponed))),
    )


def ltl_to_buchi(f: Formula) -> BuchiAutomaton:
    plain = require_ltl(f, "ltl_to_buchi")
    untils = sorted({node for node in walk(plain) if node.op is Op.UNTIL}, key=render)
    goal = len(untils)

    start = (frozenset({plain}), 0)
    index = {start: 0}
    labels = [start]
    transitions = []
    queue = deque([start])
    while queue:
        obligations, counter = queue.popleft()
        source = index[(obligations, counter)]
        base = 0 if counter == goal else counter
        for expansion in _expansions(obligations):
            reached = base
            while reached < goal and untils[reached] not in expansion.postponed:
                reached += 1
            target = (expansion.following, reached)
            if target not in index:
                index[target] = len(labels)
                labels.append(target)
                queue.append(target)
            transitions.append(BuchiTransition(source, expansion.positive, expansion.negative, index[target]))

    automaton = BuchiAutomaton(
        alphabet=props(plain),
        labels=tuple(labels),
        transitions=tuple(transitions),
        accepting=frozenset(q for q, (_, counter) in enumerate(labels) if counter == goal),
    )
    logger.debug(f"automaton for {render(f)}: {len(labels)} states, {len(transitions)} transitions")
    return automaton


# Model checking and satisfiability


def _kripke_lasso(kripke: KripkeStructure, stem: list, cycle: list) -> LassoTrace:
    prefix = [kripke.label(state) for state in stem[:-1]]
    loop = [kripke.label(state) for state in cycle[:-1]]
    return LassoTrace(prefix, loop)


def kripke_generates(kripke: KripkeStructure, t: LassoTrace) -> bool:
    """Is `t` the label sequence of some infinite path from the initial state?"""

    def successors(node):
        pos, state = node
        if kripke.label(state) != t.letter(pos):
            return []
        return [(t.successor(pos), nxt) for nxt in kripke.successors(state)]

    return nested_dfs([(0, kripke.initial)], successors, lambda node: True) is not None


def _ltl_holds(t: LassoTrace, f: Formula) -> bool:
    return ltl_truth(t, f)[0]


def mc_ltl(kripke: KripkeStructure, f: Formula) -> Verdict:
    """Every trace of `kripke` satisfies `f`; otherwise return a counterexample lasso."""
    plain = require_ltl(f, "mc_ltl")
    negated = dual(plain)
    automaton = ltl_to_buchi(negated)
    table = automaton.outgoing()

    def successors(node):
        state, q = node
        letter = kripke.label(state)
        targets = sorted({tr.target for tr in table[q] if tr.matches(letter)})
        return [(nxt, target) for nxt in kripke.successors(state) for target in targets]

    initial = (kripke.initial, automaton.initial[0])
    found = nested_dfs([initial], successors, lambda node: node[1] in automaton.accepting)
    stats = {"automaton_states": len(automaton.labels)}
    if found is None:
        logger.debug(f"mc_ltl: {render(f)} holds on every trace")
        return Verdict(holds=True, stats=stats)

    stem, cycle = shortest_lasso(initial, *found, successors)
    witness = _kripke_lasso(kripke, [state for state, _ in stem], [state for state, _ in cycle])
    if not _ltl_holds(witness, negated) or not kripke_generates(kripke, witness):
        raise WitnessVerificationError(f"counterexample {witness.omega()} for '{render(f)}' failed verification")
    logger.debug(f"mc_ltl: {render(f)} refuted by {witness.omega()}")
    return Verdict(holds=False, witness=witness, stats=stats)


def sat_ltl(f: Formula) -> Verdict:
    """Some lasso satisfies `f`; the witness uses only the propositions of `f`."""
    plain = require_ltl(f, "sat_ltl")
    automaton = ltl_to_buchi(plain)
    table = automaton.outgoing()
    edge_letters: dict[tuple[int, int], frozenset[str]] = {}
    for transition in automaton.transitions:
        edge_letters.setdefault((transition.source, transition.target), transition.positive)

    def successors(q):
        return sorted({tr.target for tr in table[q]})

    stats = {"automaton_states": len(automaton.labels)}
    found = nested_dfs(automaton.initial, successors, lambda q: q in automaton.accepting)
    if found is None:
        logger.debug(f"sat_ltl: {render(f)} is unsatisfiable")
        return Verdict(holds=False, stats=stats)

    stem, cycle = shortest_lasso(automaton.initial[0], *found, successors)
    witness = LassoTrace(
        [edge_letters[pair] for pair in zip(stem, stem[1:])],
        [edge_letters[pair] for pair in zip(cycle, cycle[1:])],
    )
    if not _ltl_holds(witness, plain):
        raise WitnessVerificationError(f"model {witness.omega()} for '{render(f)}' failed verification")
    logger.debug(f"sat_ltl: {render(f)} satisfied by {witness.omega()}")
    return Verdict(holds=True, witness=witness, stats=stats)
