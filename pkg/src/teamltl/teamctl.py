"""Time-evaluation-function operators on finite multiteams and their translation to TeamLTL.

A configuration assigns each multiteam entry a canonical local position. An
initial tef is an infinite path from the all-zero configuration where every
step advances a nonempty set of entries by one, so the existential and
universal tef quantifiers become path properties of the configuration graph.
"""

from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator, Optional, Union

from teamltl.datatypes import Direction, FragmentViolation, ResourceLimitExceeded, ResourceLimits
from teamltl.evalcore import StrictEvaluator, as_multiteam
from teamltl.formula import (
    TEF_OPS,
    TOP,
    Formula,
    Op,
    classify,
    desugar,
    globally,
    make,
    render,
    walk,
)
from teamltl.package_logger import logger
from teamltl.team import Bag, LassoTrace, Multiteam, bag_traces, make_bag

Configuration = tuple[int, ...]


class ConfigurationGraph:
    def __init__(self, traces: list[LassoTrace], limits: ResourceLimits):
        self.traces = traces
        count = 1
        for t in traces:
            count *= t.length
        if count > limits.configs:
            raise ResourceLimitExceeded("configs", count, limits.configs)
        self.initial: Configuration = tuple(0 for _ in traces)
        self._successors: dict[Configuration, list[Configuration]] = {}
        self._reachable: Optional[list[Configuration]] = None

    def successors(self, config: Configuration) -> list[Configuration]:
        """Advance every nonempty subset of entries by one step."""
        if config not in self._successors:
            steps = [(pos, t.successor(pos)) for t, pos in zip(self.traces, config)]
            found = {
                tuple(after if move else pos for (pos, after), move in zip(steps, moves))
                for moves in product((0, 1), repeat=len(steps))
                if any(moves)
            }
            self._successors[config] = sorted(found)
        return self._successors[config]

    def reachable(self) -> list[Configuration]:
        if self._reachable is None:
            seen = {self.initial}
            order = [self.initial]
            for config in order:
                for nxt in self.successors(config):
                    if nxt not in seen:
                        seen.add(nxt)
                        order.append(nxt)
            self._reachable = order
            logger.debug(f"configuration graph: {len(order)} reachable configurations")
        return self._reachable

    def multiteam_at(self, config: Configuration) -> Bag:
        return make_bag(t.suffix(pos) for t, pos in zip(self.traces, config))

    def paths(self, steps: int) -> Iterator[tuple[Configuration, ...]]:
        """Every path with `steps` edges from the initial configuration."""
        frontier: list[tuple[Configuration, ...]] = [(self.initial,)]
        for _ in range(steps):
            frontier = [path + (nxt,) for path in frontier for nxt in self.successors(path[-1])]
        yield from frontier


@lru_cache(maxsize=4096)
def _has_tef(f: Formula) -> bool:
    return any(node.op in TEF_OPS for node in walk(f))


class TefEvaluator(StrictEvaluator):
    """Strict semantics extended by the tef quantifiers.

    The empty multiteam satisfies every formula; it admits no strictly
    monotone tef.
    """

    def __init__(self, limits: Optional[ResourceLimits] = None):
        super().__init__(limits)
        self._graphs: dict[Bag, ConfigurationGraph] = {}

    def evaluate(self, team: Multiteam, f: Formula) -> bool:
        plain = desugar(f)
        self.check_limits(team.traces(), plain)
        result = self.holds(team.bag(), plain)
        logger.debug(f"tef: {render(f)} on {len(team)} entries -> {result}")
        return result

    def graph(self, bag: Bag) -> ConfigurationGraph:
        if bag not in self._graphs:
            self._graphs[bag] = ConfigurationGraph(bag_traces(bag), self.limits)
        return self._graphs[bag]

    def _holds(self, bag: Bag, f: Formula) -> bool:
        if f.op not in TEF_OPS:
            if f.op in (Op.GLOBALLY, Op.UNTIL, Op.EXISTS) and _has_tef(f):
                raise FragmentViolation(f"{f.op.value} cannot take tef operators inside, got '{render(f)}'")
            return super()._holds(bag, f)
        if not bag:
            return True

        graph = self.graph(bag)

        def sat(config: Configuration, sub: Formula) -> bool:
            return self.holds(graph.multiteam_at(config), sub)

        match f.op:
            case Op.NEXT_SOME:
                return any(sat(c, f.args[0]) for c in graph.successors(graph.initial))
            case Op.NEXT_ALL:
                return all(sat(c, f.args[0]) for c in graph.successors(graph.initial))
            case Op.GLOBALLY_ALL:
                return all(sat(c, f.args[0]) for c in graph.reachable())
            case Op.GLOBALLY_SOME:
                region = {c for c in graph.reachable() if sat(c, f.args[0])}
                changed = True
                while changed:
                    stuck = {c for c in region if not any(nxt in region for nxt in graph.successors(c))}
                    region -= stuck
                    changed = bool(stuck)
                return graph.initial in region
            case Op.UNTIL_SOME | Op.UNTIL_ALL:
                left, right = f.args
                step = any if f.op is Op.UNTIL_SOME else all
                region = {c for c in graph.reachable() if sat(c, right)}
                changed = True
                while changed:
                    changed = False
                    for c in graph.reachable():
                        if c not in region and step(nxt in region for nxt in graph.successors(c)) and sat(c, left):
                            region.add(c)
                            changed = True
                return graph.initial in region
        raise FragmentViolation(f"connective {f.op.value} has no tef semantics")


def eval_tef(
    team: Union[Multiteam, Iterable[LassoTrace]], f: Formula, limits: Optional[ResourceLimits] = None
) -> bool:
    return TefEvaluator(limits).evaluate(as_multiteam(team), f)


# Translation between the tef fragment and TeamLTL

_SHARED_OPS = frozenset({Op.PROP, Op.NEG_PROP, Op.TOP, Op.BOT, Op.AND, Op.OR, Op.BOR, Op.NEXT})


def _to_ltl(f: Formula) -> Formula:
    args = tuple(_to_ltl(arg) for arg in f.args)
    match f.op:
        case Op.GLOBALLY_ALL:
            return globally(args[0])
        case Op.STRONG_RELEASE_SOME:
            return desugar(make(Op.STRONG_RELEASE, *args))
        case op if op in _SHARED_OPS:
            return Formula(op, args, f.name)
    raise FragmentViolation(f"to-ltl translates X, GA, ME and or only, got {f.op.value}")


def _to_ctl(f: Formula) -> Formula:
    args = tuple(_to_ctl(arg) for arg in f.args)
    match f.op:
        case Op.GLOBALLY:
            return make(Op.GLOBALLY_ALL, *args)
        case Op.STRONG_RELEASE:
            return make(Op.STRONG_RELEASE_SOME, *args)
        case Op.FINALLY:
            return make(Op.STRONG_RELEASE_SOME, args[0], TOP)
        case op if op in _SHARED_OPS:
            return Formula(op, args, f.name)
    raise FragmentViolation(f"to-ctl translates X, G, M, F and or only, got {f.op.value}")


def translate(f: Formula, direction: Direction) -> Formula:
    """Swap GA with G and ME with M on the left-flat fragments."""
    if direction is Direction.TO_LTL:
        result = _to_ltl(f)
        if not classify(result).is_left_flat:
            raise FragmentViolation(f"'{render(f)}' is not left-flat")
        return result
    if not classify(f).is_left_flat:
        raise FragmentViolation(f"'{render(f)}' is not left-flat")
    return _to_ctl(f)
