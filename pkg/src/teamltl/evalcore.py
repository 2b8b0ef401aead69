"""Exact reference evaluators.

`eval_ltl` decides classical LTL on a lasso. `eval_lax` and `eval_strict` decide
the set-based and the multiset-based asynchronous team semantics on finite
teams by enumerating every quantifier over canonical positions. Memo tables
live on an evaluator instance, one instance per call.
"""

from collections import Counter
from itertools import combinations_with_replacement, product
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

from teamltl.datatypes import AuditMismatch, FragmentViolation, ResourceLimitExceeded, ResourceLimits
from teamltl.formula import (
    LTL_OPS,
    Formula,
    Op,
    depth,
    desugar,
    inc_sides,
    is_downward_closed,
    is_ltl,
    render,
    require_ltl,
    walk,
)
from teamltl.package_config import DEFAULT_AUDIT_BOUND, MAX_ENUMERATION
from teamltl.package_logger import logger
from teamltl.team import Bag, LassoTrace, Multiteam, Team, bag_traces, make_bag, sorted_traces
from teamltl.utils import load_limits

ChoiceFunction = Mapping[LassoTrace, frozenset[int]]
PointFunction = Mapping[str, int]


def ltl_truth(t: LassoTrace, f: Formula, memo: Optional[dict] = None) -> tuple[bool, ...]:
    """Truth value of a desugared LTL formula at every canonical position of `t`."""
    memo = {} if memo is None else memo
    key = (t, f)
    if key in memo:
        return memo[key]

    n = t.length
    succ = [t.successor(i) for i in range(n)]
    match f.op:
        case Op.PROP:
            values = [f.name in t.letter(i) for i in range(n)]
        case Op.NEG_PROP:
            values = [f.name not in t.letter(i) for i in range(n)]
        case Op.TOP:
            values = [True] * n
        case Op.BOT:
            values = [False] * n
        case Op.AND | Op.OR:
            left, right = (ltl_truth(t, arg, memo) for arg in f.args)
            combine = (lambda a, b: a and b) if f.op is Op.AND else (lambda a, b: a or b)
            values = [combine(a, b) for a, b in zip(left, right)]
        case Op.NEXT:
            sub = ltl_truth(t, f.args[0], memo)
            values = [sub[succ[i]] for i in range(n)]
        case Op.GLOBALLY:
            sub = ltl_truth(t, f.args[0], memo)
            values = list(sub)
            changed = True
            while changed:
                changed = False
                for i in range(n):
                    if values[i] and not values[succ[i]]:
                        values[i] = False
                        changed = True
        case Op.UNTIL:
            left, right = (ltl_truth(t, arg, memo) for arg in f.args)
            values = list(right)
            changed = True
            while changed:
                changed = False
                for i in range(n):
                    if not values[i] and left[i] and values[succ[i]]:
                        values[i] = True
                        changed = True
        case _:
            raise FragmentViolation(f"connective {f.op.value} is not LTL")

    memo[key] = tuple(values)
    return memo[key]


def eval_ltl(t: LassoTrace, f: Formula) -> bool:
    return ltl_truth(t, require_ltl(f, "eval_ltl"))[0]


def _nonempty_subsets(items: list) -> Iterator[tuple]:
    for mask in range(1, 1 << len(items)):
        yield tuple(item for bit, item in enumerate(items) if mask >> bit & 1)


def _check_enumeration(what: str, count: int) -> None:
    if count > MAX_ENUMERATION:
        raise ResourceLimitExceeded(what, count, MAX_ENUMERATION)


class TeamEvaluator:
    """Shared plumbing of the lax and strict evaluators."""

    def __init__(self, limits: Optional[ResourceLimits] = None, audit_bound: int = DEFAULT_AUDIT_BOUND):
        if audit_bound < 1:
            raise ValueError("audit bound must be at least 1")
        self.limits = limits or load_limits()
        self.audit_bound = audit_bound
        self._memo: dict = {}
        self._truth: dict = {}
        self._work = 0

    def check_limits(self, traces: list[LassoTrace], f: Formula) -> None:
        if len(traces) > self.limits.traces:
            raise ResourceLimitExceeded("traces", len(traces), self.limits.traces)
        for t in traces:
            if t.length > self.limits.pos:
                raise ResourceLimitExceeded("pos", t.length, self.limits.pos)
        if depth(f) > self.limits.depth:
            raise ResourceLimitExceeded("depth", depth(f), self.limits.depth)

    @property
    def work(self) -> int:
        return self._work

    def charge(self, what: str, amount: int = 1) -> None:
        """Count enumeration steps across nested quantifiers against MAX_ENUMERATION."""
        self._work += amount
        if self._work > MAX_ENUMERATION:
            raise ResourceLimitExceeded(what, self._work, MAX_ENUMERATION)

    def until_range(self, t: LassoTrace) -> range:
        """Positions an existential until choice ranges over (both ends inclusive)."""
        return range(len(t.prefix) + self.audit_bound * len(t.loop) + 1)

    def ltl_holds(self, t: LassoTrace, f: Formula) -> bool:
        return ltl_truth(t, f, self._truth)[0]

    def exists_holds(self, traces: Iterable[LassoTrace], f: Formula) -> bool:
        sub = f.args[0]
        if not is_ltl(sub):
            raise FragmentViolation(f"E requires an LTL argument, got '{render(sub)}'")
        return any(self.ltl_holds(t, sub) for t in traces)

    def atom_holds(self, traces: list[LassoTrace], f: Formula) -> bool:
        if f.op is Op.DEP:
            *args, target = f.args
            determined: dict[tuple[bool, ...], bool] = {}
            for t in traces:
                key = tuple(self.ltl_holds(t, arg) for arg in args)
                value = self.ltl_holds(t, target)
                if determined.setdefault(key, value) != value:
                    return False
            return True
        lhs, rhs = inc_sides(f)
        available = {tuple(self.ltl_holds(t, arg) for arg in rhs) for t in traces}
        return all(tuple(self.ltl_holds(t, arg) for arg in lhs) in available for t in traces)


_EVALUATED_OPS = LTL_OPS | {Op.BOR, Op.BNEG, Op.EXISTS, Op.DEP, Op.INC}


def _require_team_formula(f: Formula) -> None:
    for node in walk(f):
        if node.op not in _EVALUATED_OPS:
            raise FragmentViolation(f"connective {node.op.value} has no team semantics here")


class LaxEvaluator(TeamEvaluator):
    """Set-based semantics: splits are covers, temporal choices are position sets."""

    def __init__(self, limits: Optional[ResourceLimits] = None, audit_bound: int = DEFAULT_AUDIT_BOUND):
        super().__init__(limits, audit_bound)
        self._families: dict = {}
        self._options: dict = {}

    def evaluate(self, team: Team, f: Formula) -> bool:
        plain = desugar(f)
        _require_team_formula(plain)
        self.check_limits(list(team), plain)
        result = self.holds(frozenset(team), plain)
        logger.debug(
            f"lax: {render(f)} on {len(team)} traces -> {result} "
            f"({len(self._memo)} subproblems, {self._work} steps)"
        )
        return result

    def holds(self, team: Team, f: Formula) -> bool:
        key = (team, f)
        if key not in self._memo:
            self._memo[key] = self._holds(team, f)
        return self._memo[key]

    def _holds(self, team: Team, f: Formula) -> bool:
        match f.op:
            case Op.PROP:
                return all(f.name in t.letter(0) for t in team)
            case Op.NEG_PROP:
                return all(f.name not in t.letter(0) for t in team)
            case Op.TOP:
                return True
            case Op.BOT:
                return not team
            case Op.AND:
                return self.holds(team, f.args[0]) and self.holds(team, f.args[1])
            case Op.BOR:
                return self.holds(team, f.args[0]) or self.holds(team, f.args[1])
            case Op.BNEG:
                return not self.holds(team, f.args[0])
            case Op.EXISTS:
                return self.exists_holds(team, f)
            case Op.DEP | Op.INC:
                return self.atom_holds(sorted_traces(team), f)
            case Op.OR:
                return self._split(team, *f.args)
            case Op.NEXT:
                return self.holds(frozenset(t.suffix(1) for t in team), f.args[0])
            case Op.GLOBALLY:
                return self._globally(team, f.args[0])
            case Op.UNTIL:
                return self._until(team, *f.args)
        raise FragmentViolation(f"connective {f.op.value} has no team semantics here")

    def _split(self, team: Team, left: Formula, right: Formula) -> bool:
        if is_ltl(left) and is_ltl(right):
            # flat sides: a cover exists iff every trace satisfies one of them
            return all(self.ltl_holds(t, left) or self.ltl_holds(t, right) for t in team)
        members = sorted_traces(team)
        # with one downward-closed side every cover shrinks to a partition
        options = (0, 1) if is_downward_closed(left) or is_downward_closed(right) else (0, 1, 2)
        _check_enumeration("covers", len(options) ** len(members))
        seen = set()
        for sides in product(options, repeat=len(members)):
            # 0: left only, 1: right only, 2: both
            left_team = frozenset(t for t, side in zip(members, sides) if side != 1)
            right_team = frozenset(t for t, side in zip(members, sides) if side != 0)
            if (left_team, right_team) in seen:
                continue
            seen.add((left_team, right_team))
            self.charge("covers")
            if self.holds(left_team, left) and self.holds(right_team, right):
                return True
        return False

    def _globally(self, team: Team, sub: Formula) -> bool:
        if not team:
            return self.holds(team, sub)
        members = sorted_traces(team)
        suffixes = sorted_traces({t.suffix(i) for t in members for i in range(t.length)})
        if is_downward_closed(sub):
            # every admissible choice is a subset of the full suffix set
            return self.holds(frozenset(suffixes), sub)
        index = {s: bit for bit, s in enumerate(suffixes)}
        masks = [sum(1 << index[t.suffix(i)] for i in range(t.length)) for t in members]
        _check_enumeration("suffix subsets", 1 << len(suffixes))
        for mask in range(1, 1 << len(suffixes)):
            if all(mask & member_mask for member_mask in masks):
                self.charge("suffix subsets")
                chosen = frozenset(s for bit, s in enumerate(suffixes) if mask >> bit & 1)
                if not self.holds(chosen, sub):
                    return False
        return True

    def obligation_family(self, t: LassoTrace, top: int, low: int) -> Optional[frozenset[Team]]:
        """Suffix sets of every P' with max P' < top and min P' <= low; None when top is 0."""
        if top == 0:
            return None
        key = (t, top, low)
        if key not in self._families:
            self._families[key] = frozenset(
                frozenset(t.suffix(i) for i in chosen)
                for chosen in _nonempty_subsets(list(range(top)))
                if chosen[0] <= low
            )
        return self._families[key]

    def until_options(self, t: LassoTrace) -> list[tuple[Optional[frozenset[Team]], list[Team]]]:
        """Existential choices for one trace, grouped by their obligation family."""
        if t not in self._options:
            positions = list(self.until_range(t))
            _check_enumeration("position sets", 1 << len(positions))
            grouped: dict = {}
            for chosen in _nonempty_subsets(positions):
                family = self.obligation_family(t, chosen[-1], chosen[0])
                grouped.setdefault(family, set()).add(frozenset(t.suffix(i) for i in chosen))
            self._options[t] = [
                (family, sorted(reached, key=_team_key))
                for family, reached in sorted(grouped.items(), key=lambda item: _family_key(item[0]))
            ]
        return self._options[t]

    def _obligations_hold(self, families: tuple, left: Formula) -> bool:
        key = ("obligations", families, left)
        if key not in self._memo:
            active = [sorted(family, key=_team_key) for family in families if family is not None]
            # T' empty: nothing to check
            self._memo[key] = all(
                self.holds(frozenset().union(*reached), left) for reached in product(*active)
            ) if active else True
        return self._memo[key]

    def _until(self, team: Team, left: Formula, right: Formula) -> bool:
        if not team:
            return self.holds(team, right)
        members = sorted_traces(team)
        per_trace = [self.until_options(t) for t in members]
        for choice in product(*per_trace):
            families = tuple(family for family, _ in choice)
            if not self._obligations_hold(families, left):
                continue
            for reached in product(*(teams for _, teams in choice)):
                self.charge("choice functions")
                if self.holds(frozenset().union(*reached), right):
                    return True
        return False


def _team_key(team: Iterable[LassoTrace]) -> tuple:
    return tuple(t.sort_key() for t in sorted_traces(team))


def _family_key(family: Optional[frozenset[Team]]) -> tuple:
    if family is None:
        return ()
    return (len(family), sorted(_team_key(team) for team in family))


class StrictEvaluator(TeamEvaluator):
    """Multiset-based semantics: splits are partitions, temporal choices are single positions."""

    def evaluate(self, team: Multiteam, f: Formula) -> bool:
        plain = desugar(f)
        _require_team_formula(plain)
        self.check_limits(team.traces(), plain)
        result = self.holds(team.bag(), plain)
        logger.debug(
            f"strict: {render(f)} on {len(team)} entries -> {result} "
            f"({len(self._memo)} subproblems, {self._work} steps)"
        )
        return result

    def holds(self, bag: Bag, f: Formula) -> bool:
        key = (bag, f)
        if key not in self._memo:
            self._memo[key] = self._holds(bag, f)
        return self._memo[key]

    def _holds(self, bag: Bag, f: Formula) -> bool:
        traces = [t for t, _ in bag]
        match f.op:
            case Op.PROP:
                return all(f.name in t.letter(0) for t in traces)
            case Op.NEG_PROP:
                return all(f.name not in t.letter(0) for t in traces)
            case Op.TOP:
                return True
            case Op.BOT:
                return not bag
            case Op.AND:
                return self.holds(bag, f.args[0]) and self.holds(bag, f.args[1])
            case Op.BOR:
                return self.holds(bag, f.args[0]) or self.holds(bag, f.args[1])
            case Op.BNEG:
                return not self.holds(bag, f.args[0])
            case Op.EXISTS:
                return self.exists_holds(traces, f)
            case Op.DEP | Op.INC:
                return self.atom_holds(sorted_traces(traces), f)
            case Op.OR:
                return self._split(bag, *f.args)
            case Op.NEXT:
                return self.holds(_bag_from_positions((t, [1] * k) for t, k in bag), f.args[0])
            case Op.GLOBALLY:
                return self._globally(bag, f.args[0])
            case Op.UNTIL:
                return self._until(bag, *f.args)
        raise FragmentViolation(f"connective {f.op.value} has no team semantics here")

    def _split(self, bag: Bag, left: Formula, right: Formula) -> bool:
        items = sorted(bag, key=lambda item: item[0].sort_key())
        for taken in product(*(range(k + 1) for _, k in items)):
            left_bag = frozenset((t, j) for (t, _), j in zip(items, taken) if j > 0)
            right_bag = frozenset((t, k - j) for (t, k), j in zip(items, taken) if k - j > 0)
            self.charge("partitions")
            if self.holds(left_bag, left) and self.holds(right_bag, right):
                return True
        return False

    def point_choices(self, bag: Bag, positions: Callable[[LassoTrace], range]):
        """Every point function up to entry permutation, as [(trace, positions)] lists."""
        items = sorted(bag, key=lambda item: item[0].sort_key())
        per_trace = [
            [(t, chosen) for chosen in combinations_with_replacement(positions(t), k)]
            for t, k in items
        ]
        return product(*per_trace)

    def _globally(self, bag: Bag, sub: Formula) -> bool:
        for choice in self.point_choices(bag, lambda t: range(t.length)):
            self.charge("point functions")
            if not self.holds(_bag_from_positions(choice), sub):
                return False
        return True

    def _obligations_hold(self, chosen: tuple, left: Formula) -> bool:
        key = ("obligations", chosen, left)
        if key not in self._memo:
            # Entries at position 0 leave T'; with T' empty this checks the empty multiteam.
            active = [(t, pos) for t, positions in chosen for pos in positions if pos != 0]
            _check_enumeration("earlier point functions", _product_size(pos for _, pos in active))
            earlier = {
                make_bag(t.suffix(p) for (t, _), p in zip(active, point))
                for point in product(*(range(pos) for _, pos in active))
            }
            self._memo[key] = all(
                self.holds(team, left) for team in sorted(earlier, key=lambda b: _team_key(bag_traces(b)))
            )
        return self._memo[key]

    def _until(self, bag: Bag, left: Formula, right: Formula) -> bool:
        for choice in self.point_choices(bag, self.until_range):
            self.charge("point functions")
            if not self.holds(_bag_from_positions(choice), right):
                continue
            if self._obligations_hold(tuple(choice), left):
                return True
        return False


def _product_size(sizes: Iterable[int]) -> int:
    total = 1
    for value in sizes:
        total *= max(value, 1)
    return total


def _bag_from_positions(choice: Iterable[tuple[LassoTrace, Iterable[int]]]) -> Bag:
    counts: Counter = Counter()
    for t, positions in choice:
        for pos in positions:
            counts[t.suffix(pos)] += 1
    return frozenset(counts.items())


def as_team(team: Union[Team, Multiteam, Iterable[LassoTrace]]) -> Team:
    if isinstance(team, Multiteam):
        return team.support()
    return frozenset(team)


def as_multiteam(team: Union[Multiteam, Iterable[LassoTrace]]) -> Multiteam:
    if isinstance(team, Multiteam):
        return team
    return Multiteam.from_traces(team)


def eval_lax(
    team: Union[Team, Multiteam, Iterable[LassoTrace]],
    f: Formula,
    limits: Optional[ResourceLimits] = None,
    audit_bound: int = DEFAULT_AUDIT_BOUND,
) -> bool:
    """Lax satisfaction; a multiteam is evaluated on its support."""
    return LaxEvaluator(limits, audit_bound).evaluate(as_team(team), f)


def eval_strict(
    team: Union[Multiteam, Iterable[LassoTrace]],
    f: Formula,
    limits: Optional[ResourceLimits] = None,
    audit_bound: int = DEFAULT_AUDIT_BOUND,
) -> bool:
    return StrictEvaluator(limits, audit_bound).evaluate(as_multiteam(team), f)


def eval_audited(evaluate: Callable[..., bool], team, f: Formula, audit_bound: int, limits=None) -> bool:
    """Evaluate canonically and with positions up to prefix + audit_bound * loop; they must agree."""
    canonical = evaluate(team, f, limits=limits)
    if audit_bound <= DEFAULT_AUDIT_BOUND:
        return canonical
    extended = evaluate(team, f, limits=limits, audit_bound=audit_bound)
    if extended != canonical:
        raise AuditMismatch(
            f"'{render(f)}' is {canonical} on canonical positions but {extended} with audit bound {audit_bound}"
        )
    logger.debug(f"audit bound {audit_bound} agrees for {render(f)}")
    return canonical


# Choice-function ordering of the lax until


def until_team_prime(c: ChoiceFunction) -> Team:
    """T' of the lax until: the traces whose chosen positions do not all equal 0."""
    return frozenset(t for t, chosen in c.items() if max(chosen) != 0)


def precedes(c_prime: ChoiceFunction, c: ChoiceFunction) -> bool:
    """c' < c: defined on T' with min c'(t) <= min c(t) and max c'(t) < max c(t)."""
    if set(c_prime) != set(until_team_prime(c)):
        return False
    return all(
        min(c_prime[t]) <= min(c[t]) and max(c_prime[t]) < max(c[t]) for t in c_prime
    )


def apply_choice(c: ChoiceFunction) -> Team:
    return frozenset(t.suffix(i) for t, chosen in c.items() for i in chosen)


def shift_reachable(source: Team, target: Team) -> bool:
    """Is there g with source[g, inf] = target? Every source trace must reach target and target must be covered."""
    reachable = set()
    for s in source:
        hits = {s.suffix(i) for i in range(s.length)} & target
        if not hits:
            return False
        reachable |= hits
    return reachable == set(target)


def apply_point_function(team: Multiteam, c: PointFunction) -> Bag:
    return make_bag(entry.trace.suffix(c[entry.index]) for entry in team)


def point_precedes(c_prime: PointFunction, c: PointFunction) -> bool:
    """c' < c for the strict until: c'(e) < c(e) on every entry c' is defined on."""
    return all(c_prime[index] < c[index] for index in c_prime)
