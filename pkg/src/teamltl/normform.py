"""Normal forms: the Boolean-disjunctive normal form and the quasi-flat normal form."""

from itertools import product
from typing import Iterable, Iterator, NamedTuple

from teamltl.datatypes import FragmentViolation
from teamltl.evalcore import ltl_truth
from teamltl.formula import (
    ATOMS,
    TEF_OPS,
    TOP,
    Formula,
    Op,
    and_,
    conjunction,
    desugar,
    disjunction,
    dual,
    exists,
    globally,
    is_bor_fragment,
    is_left_dc,
    is_ltl,
    next_,
    or_,
    render,
    until,
    walk,
)
from teamltl.team import LassoTrace


class DnfForm(NamedTuple):
    disjuncts: tuple[Formula, ...]

    def formula(self) -> Formula:
        return disjunction(list(self.disjuncts), Op.BOR)

    def lines(self) -> list[str]:
        return [render(alpha) for alpha in self.disjuncts]


class QuasiFlatDisjunct(NamedTuple):
    alpha: Formula
    betas: tuple[Formula, ...] = ()

    def formula(self) -> Formula:
        return conjunction([self.alpha, *(exists(beta) for beta in self.betas)])

    def __str__(self):
        return render(self.formula()) if self.betas else render(self.alpha)


class QuasiFlatForm(NamedTuple):
    disjuncts: tuple[QuasiFlatDisjunct, ...]

    def formula(self) -> Formula:
        return disjunction([d.formula() for d in self.disjuncts], Op.BOR)

    def lines(self) -> list[str]:
        return [str(d) for d in self.disjuncts]


def _bor_formula(f: Formula, operation: str) -> Formula:
    plain = desugar(f)
    if not is_bor_fragment(plain):
        raise FragmentViolation(f"{operation} requires a formula without ~, E, atoms or tef operators, got '{render(f)}'")
    return plain


# Boolean-disjunctive normal form


def _dnf(f: Formula) -> list[Formula]:
    if not f.args:
        return [f]
    if f.op is Op.BOR:
        left, right = (_dnf(arg) for arg in f.args)
        # in-order bit layout: left occurrences, this occurrence, right occurrences
        return [a if side == 0 else b for a in left for side in (0, 1) for b in right]
    parts = [_dnf(arg) for arg in f.args]
    return [Formula(f.op, args, f.name) for args in product(*parts)]


def to_dnf(f: Formula, dedupe: bool = False) -> DnfForm:
    """The 2^k disjuncts of `f`, k being the number of `or` occurrences."""
    disjuncts = _dnf(_bor_formula(f, "to_dnf"))
    if dedupe:
        disjuncts = list(dict.fromkeys(disjuncts))
    return DnfForm(tuple(disjuncts))


def _select(f: Formula, bits: list[int], start: int) -> tuple[Formula, int]:
    if f.op is Op.BOR:
        left, pos = _select(f.args[0], bits, start)
        side = bits[pos]
        right, end = _select(f.args[1], bits, pos + 1)
        return (right if side else left), end
    if not f.args:
        return f, start
    args = []
    pos = start
    for arg in f.args:
        sub, pos = _select(arg, bits, pos)
        args.append(sub)
    return Formula(f.op, tuple(args), f.name), pos


def bor_occurrences(f: Formula) -> int:
    return sum(1 for node in walk(f) if node.op is Op.BOR)


def selection_at(f: Formula, index: int) -> Formula:
    """The disjunct picked by the selection function numbered `index`."""
    plain = _bor_formula(f, "selection_at")
    k = bor_occurrences(plain)
    if not 0 <= index < 1 << k:
        raise IndexError(f"selection index {index} out of range for {k} occurrences")
    bits = [(index >> (k - 1 - j)) & 1 for j in range(k)]
    return _select(plain, bits, 0)[0]


class SelectionCursor:
    """Restartable stream over the selection disjuncts of a formula.

    Each iteration builds one disjunct at a time from a binary counter over the
    `or` occurrences, leftmost occurrence most significant.
    """

    def __init__(self, f: Formula, start: int = 0, stop: int | None = None):
        self.formula = _bor_formula(f, "enumerate_selections")
        self.bor_count = bor_occurrences(self.formula)
        self.start = start
        self.stop = (1 << self.bor_count) if stop is None else min(stop, 1 << self.bor_count)

    def __len__(self):
        return max(self.stop - self.start, 0)

    def __iter__(self) -> Iterator[Formula]:
        k = self.bor_count
        for index in range(self.start, self.stop):
            bits = [(index >> (k - 1 - j)) & 1 for j in range(k)]
            yield _select(self.formula, bits, 0)[0]


def enumerate_selections(f: Formula) -> Iterator[Formula]:
    return iter(SelectionCursor(f))


def flat_equivalent(f: Formula) -> Formula:
    """Replace the Boolean disjunction of the normal form by a splitting one."""
    return disjunction(list(to_dnf(f).disjuncts), Op.OR)


# Quasi-flat normal form


def _conj(left: Formula, right: Formula) -> Formula:
    if left == TOP:
        return right
    if right == TOP:
        return left
    return and_(left, right)


def _merge(left: QuasiFlatDisjunct, right: QuasiFlatDisjunct) -> QuasiFlatDisjunct:
    return QuasiFlatDisjunct(_conj(left.alpha, right.alpha), left.betas + right.betas)


def _quasiflat(f: Formula) -> list[QuasiFlatDisjunct]:
    match f.op:
        case Op.PROP | Op.NEG_PROP | Op.TOP | Op.BOT:
            return [QuasiFlatDisjunct(f)]
        case Op.EXISTS:
            if not is_ltl(f.args[0]):
                raise FragmentViolation(f"E requires an LTL argument, got '{render(f.args[0])}'")
            return [QuasiFlatDisjunct(TOP, (f.args[0],))]
        case Op.AND:
            left, right = (_quasiflat(arg) for arg in f.args)
            return [_merge(a, b) for a, b in product(left, right)]
        case Op.OR:
            left, right = (_quasiflat(arg) for arg in f.args)
            return [
                QuasiFlatDisjunct(
                    or_(a.alpha, b.alpha),
                    tuple(_conj(a.alpha, beta) for beta in a.betas)
                    + tuple(_conj(b.alpha, beta) for beta in b.betas),
                )
                for a, b in product(left, right)
            ]
        case Op.BOR:
            return _quasiflat(f.args[0]) + _quasiflat(f.args[1])
        case Op.BNEG:
            # ~(a & E b1 & ...) is (E a^d) or b1^d or ...; distribute the outer conjunction.
            options = [
                [QuasiFlatDisjunct(TOP, (dual(d.alpha),))] + [QuasiFlatDisjunct(dual(beta)) for beta in d.betas]
                for d in _quasiflat(f.args[0])
            ]
            result = [QuasiFlatDisjunct(TOP)]
            for choices in options:
                result = [_merge(a, b) for a, b in product(result, choices)]
            return result
        case Op.NEXT:
            return [
                QuasiFlatDisjunct(next_(d.alpha), tuple(next_(beta) for beta in d.betas))
                for d in _quasiflat(f.args[0])
            ]
        case Op.GLOBALLY:
            return [QuasiFlatDisjunct(globally(alpha)) for alpha in _dnf(f.args[0])]
        case Op.UNTIL:
            left = _dnf(f.args[0])
            right = _quasiflat(f.args[1])
            return [
                QuasiFlatDisjunct(
                    until(alpha, d.alpha),
                    tuple(until(alpha, _conj(d.alpha, beta)) for beta in d.betas),
                )
                for alpha in left
                for d in right
            ]
    raise FragmentViolation(f"connective {f.op.value} has no quasi-flat translation")


def to_quasiflat(f: Formula, dedupe: bool = False) -> QuasiFlatForm:
    plain = desugar(f)
    offending = sorted({node.op.value for node in walk(plain) if node.op in ATOMS | TEF_OPS})
    if offending:
        raise FragmentViolation(f"to_quasiflat does not support {', '.join(offending)}")
    if not is_left_dc(plain):
        raise FragmentViolation(f"to_quasiflat requires a left-downward-closed formula, got '{render(f)}'")
    disjuncts = _quasiflat(plain)
    if dedupe:
        disjuncts = list(dict.fromkeys(disjuncts))
    return QuasiFlatForm(tuple(disjuncts))


# Evaluation of normal forms on explicit teams


def eval_dnf(team: Iterable[LassoTrace], dnf: DnfForm) -> bool:
    traces = list(team)
    memo: dict = {}
    return any(all(ltl_truth(t, alpha, memo)[0] for t in traces) for alpha in dnf.disjuncts)


def eval_quasiflat(team: Iterable[LassoTrace], qf: QuasiFlatForm) -> bool:
    traces = list(team)
    memo: dict = {}
    return any(
        all(ltl_truth(t, d.alpha, memo)[0] for t in traces)
        and all(any(ltl_truth(t, beta, memo)[0] for t in traces) for beta in d.betas)
        for d in qf.disjuncts
    )
