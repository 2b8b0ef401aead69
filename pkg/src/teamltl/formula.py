"""Formula AST, concrete syntax, desugaring, LTL duals and fragment classification.

Formulas are immutable `NamedTuple` trees, so they hash structurally and can key
memo tables in the evaluators.
"""

from enum import Enum
from functools import lru_cache
from typing import Iterator, NamedTuple, Optional

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from teamltl.datatypes import FormulaSyntaxError, FragmentInfo, FragmentViolation


class Op(Enum):
    PROP = "prop"
    NEG_PROP = "neg_prop"
    TOP = "top"
    BOT = "bot"
    AND = "&"
    OR = "|"
    BOR = "or"
    BNEG = "~"
    EXISTS = "E"
    NEXT = "X"
    GLOBALLY = "G"
    UNTIL = "U"
    FINALLY = "F"
    WEAK_UNTIL1 = "W1"
    WEAK_UNTIL2 = "W2"
    RELEASE1 = "R1"
    RELEASE2 = "R2"
    STRONG_RELEASE = "M"
    DEP = "dep"
    INC = "inc"
    # Time-evaluation-function operators
    NEXT_SOME = "XE"
    NEXT_ALL = "XA"
    GLOBALLY_SOME = "GE"
    GLOBALLY_ALL = "GA"
    UNTIL_SOME = "UE"
    UNTIL_ALL = "UA"
    STRONG_RELEASE_SOME = "ME"


class Formula(NamedTuple):
    op: Op
    args: tuple["Formula", ...] = ()
    name: Optional[str] = None

    def __str__(self):
        return render(self)


LITERALS = frozenset({Op.PROP, Op.NEG_PROP})
CONSTANTS = frozenset({Op.TOP, Op.BOT})
ATOMS = frozenset({Op.DEP, Op.INC})
UNARY = frozenset(
    {
        Op.BNEG,
        Op.EXISTS,
        Op.NEXT,
        Op.GLOBALLY,
        Op.FINALLY,
        Op.NEXT_SOME,
        Op.NEXT_ALL,
        Op.GLOBALLY_SOME,
        Op.GLOBALLY_ALL,
    }
)
BINARY_TEMPORAL = frozenset(
    {
        Op.UNTIL,
        Op.WEAK_UNTIL1,
        Op.WEAK_UNTIL2,
        Op.RELEASE1,
        Op.RELEASE2,
        Op.STRONG_RELEASE,
        Op.UNTIL_SOME,
        Op.UNTIL_ALL,
        Op.STRONG_RELEASE_SOME,
    }
)
TEF_OPS = frozenset(
    {
        Op.NEXT_SOME,
        Op.NEXT_ALL,
        Op.GLOBALLY_SOME,
        Op.GLOBALLY_ALL,
        Op.UNTIL_SOME,
        Op.UNTIL_ALL,
        Op.STRONG_RELEASE_SOME,
    }
)
LTL_OPS = frozenset({*LITERALS, *CONSTANTS, Op.AND, Op.OR, Op.NEXT, Op.GLOBALLY, Op.UNTIL})

TOP = Formula(Op.TOP)
BOT = Formula(Op.BOT)


def prop(name: str) -> Formula:
    return Formula(Op.PROP, name=name)


def neg_prop(name: str) -> Formula:
    return Formula(Op.NEG_PROP, name=name)


def make(op: Op, *args: Formula) -> Formula:
    return Formula(op, tuple(args))


def and_(left: Formula, right: Formula) -> Formula:
    return Formula(Op.AND, (left, right))


def or_(left: Formula, right: Formula) -> Formula:
    return Formula(Op.OR, (left, right))


def bor(left: Formula, right: Formula) -> Formula:
    return Formula(Op.BOR, (left, right))


def bneg(sub: Formula) -> Formula:
    return Formula(Op.BNEG, (sub,))


def exists(sub: Formula) -> Formula:
    return Formula(Op.EXISTS, (sub,))


def next_(sub: Formula) -> Formula:
    return Formula(Op.NEXT, (sub,))


def globally(sub: Formula) -> Formula:
    return Formula(Op.GLOBALLY, (sub,))


def until(left: Formula, right: Formula) -> Formula:
    return Formula(Op.UNTIL, (left, right))


def dep(args: list[Formula], target: Formula) -> Formula:
    return Formula(Op.DEP, (*args, target))


def inc(lhs: list[Formula], rhs: list[Formula]) -> Formula:
    if len(lhs) != len(rhs):
        raise ValueError("inclusion atom sides must have equal length")
    return Formula(Op.INC, (*lhs, *rhs))


def inc_sides(f: Formula) -> tuple[tuple[Formula, ...], tuple[Formula, ...]]:
    half = len(f.args) // 2
    return f.args[:half], f.args[half:]


def conjunction(parts: list[Formula]) -> Formula:
    """Left-nested conjunction, `top` for an empty list."""
    result = None
    for part in parts:
        result = part if result is None else and_(result, part)
    return TOP if result is None else result


def disjunction(parts: list[Formula], op: Op = Op.OR) -> Formula:
    """Left-nested disjunction, `bot` for an empty list."""
    result = None
    for part in parts:
        result = part if result is None else Formula(op, (result, part))
    return BOT if result is None else result


# Concrete syntax

_GRAMMAR = r"""
?start: bor

?bor: orx
    | bor "or" orx                      -> boolean_or
?orx: andx
    | orx "|" andx                      -> split_or
?andx: binop
    | andx "&" binop                    -> conj
?binop: unary
    | unary "U" binop                   -> until
    | unary "W1" binop                  -> weak_until1
    | unary "W2" binop                  -> weak_until2
    | unary "R1" binop                  -> release1
    | unary "R2" binop                  -> release2
    | unary "M" binop                   -> strong_release
%(extra_binary)s
?unary: atom
    | "X" unary                         -> next
    | "G" unary                         -> globally
    | "F" unary                         -> eventually
    | "~" unary                         -> bneg
    | "E" unary                         -> exists
%(extra_unary)s
?atom: IDENT                            -> prop
    | "!" IDENT                         -> neg_prop
    | "top"                             -> top
    | "bot"                             -> bot
    | "(" bor ")"
    | "dep" "(" arglist ")"             -> dep
    | "inc" "(" arglist ";" arglist ")" -> inc

arglist: bor ("," bor)*

IDENT: /[a-zA-Z_][a-zA-Z0-9_]*/

%%import common.WS
%%ignore WS
"""

_TEF_BINARY = r"""
    | unary "UE" binop                  -> until_some
    | unary "UA" binop                  -> until_all
    | unary "ME" binop                  -> strong_release_some
"""

_TEF_UNARY = r"""
    | "XE" unary                        -> next_some
    | "XA" unary                        -> next_all
    | "GE" unary                        -> globally_some
    | "GA" unary                        -> globally_all
"""

KEYWORDS = frozenset({"or", "top", "bot", "dep", "inc", "X", "G", "F", "E", "U", "W1", "W2", "R1", "R2", "M"})
TEF_KEYWORDS = frozenset({"XE", "XA", "GE", "GA", "UE", "UA", "ME"})


@lru_cache(maxsize=2)
def _parser(tef: bool) -> Lark:
    grammar = _GRAMMAR % dict(
        extra_binary=_TEF_BINARY if tef else "",
        extra_unary=_TEF_UNARY if tef else "",
    )
    return Lark(grammar, parser="lalr", propagate_positions=True)


def _unary(op: Op):
    return lambda self, sub: Formula(op, (sub,))


def _binary(op: Op):
    return lambda self, left, right: Formula(op, (left, right))


@v_args(inline=True)
class FormulaBuilder(Transformer):
    """Turns the lark parse tree into a `Formula`."""

    boolean_or = _binary(Op.BOR)
    split_or = _binary(Op.OR)
    conj = _binary(Op.AND)
    until = _binary(Op.UNTIL)
    weak_until1 = _binary(Op.WEAK_UNTIL1)
    weak_until2 = _binary(Op.WEAK_UNTIL2)
    release1 = _binary(Op.RELEASE1)
    release2 = _binary(Op.RELEASE2)
    strong_release = _binary(Op.STRONG_RELEASE)
    until_some = _binary(Op.UNTIL_SOME)
    until_all = _binary(Op.UNTIL_ALL)
    strong_release_some = _binary(Op.STRONG_RELEASE_SOME)

    next = _unary(Op.NEXT)
    globally = _unary(Op.GLOBALLY)
    eventually = _unary(Op.FINALLY)
    bneg = _unary(Op.BNEG)
    exists = _unary(Op.EXISTS)
    next_some = _unary(Op.NEXT_SOME)
    next_all = _unary(Op.NEXT_ALL)
    globally_some = _unary(Op.GLOBALLY_SOME)
    globally_all = _unary(Op.GLOBALLY_ALL)

    def prop(self, token):
        return prop(_proposition_name(token))

    def neg_prop(self, token):
        return neg_prop(_proposition_name(token))

    def top(self):
        return TOP

    def bot(self):
        return BOT

    def arglist(self, *items):
        return list(items)

    def dep(self, args):
        _require_ltl_arguments(args, "dep")
        return Formula(Op.DEP, tuple(args))

    def inc(self, lhs, rhs):
        _require_ltl_arguments(lhs + rhs, "inc")
        return Formula(Op.INC, (*lhs, *rhs))


def _proposition_name(token) -> str:
    # Keywords lex as identifiers where the parser state does not expect them.
    if str(token) in KEYWORDS or str(token) in TEF_KEYWORDS:
        raise FormulaSyntaxError(f"keyword {str(token)!r} used as a proposition", token.line, token.column)
    return str(token)


def _require_ltl_arguments(args: list[Formula], atom: str) -> None:
    for arg in args:
        if not is_ltl(desugar(arg)):
            raise FragmentViolation(f"{atom} atom argument '{render(arg)}' is not an LTL formula")


def _syntax_error(text: str, error: UnexpectedInput) -> FormulaSyntaxError:
    token = getattr(error, "token", None)
    if isinstance(error, UnexpectedEOF) or getattr(token, "type", None) == "$END":
        lines = text.splitlines() or [""]
        return FormulaSyntaxError("unexpected end of input", len(lines), len(lines[-1]) + 1)
    if isinstance(error, UnexpectedCharacters):
        message = f"unexpected character {error.char!r}"
    else:
        message = f"unexpected token {str(token)!r}" if token is not None else "unexpected input"
    return FormulaSyntaxError(message, getattr(error, "line", 1), getattr(error, "column", 1))


def _parse(text: str, tef: bool) -> Formula:
    try:
        tree = _parser(tef).parse(text)
    except UnexpectedInput as e:
        raise _syntax_error(text, e) from e

    for node in tree.find_data("inc"):
        lhs, rhs = node.children
        if len(lhs.children) != len(rhs.children):
            raise FormulaSyntaxError(
                f"inc atom sides differ in arity ({len(lhs.children)} vs {len(rhs.children)})",
                node.meta.line,
                node.meta.column,
            )

    try:
        return FormulaBuilder().transform(tree)
    except VisitError as e:
        raise e.orig_exc from e


def parse_formula(text: str) -> Formula:
    """Parse a TeamLTL(~, or) formula with derived operators and team atoms."""
    return _parse(text, tef=False)


def parse_tef_formula(text: str) -> Formula:
    """Parse a formula that may also use the XE, XA, GE, GA, UE, UA and ME operators."""
    return _parse(text, tef=True)


# Printing

_ATOM_LEVEL = 5
_UNARY_LEVEL = 4
_TEMPORAL_LEVEL = 3
_INFIX_LEVEL = {Op.BOR: 0, Op.OR: 1, Op.AND: 2}


def _level(f: Formula) -> int:
    if f.op in _INFIX_LEVEL:
        return _INFIX_LEVEL[f.op]
    if f.op in BINARY_TEMPORAL:
        return _TEMPORAL_LEVEL
    if f.op in UNARY:
        return _UNARY_LEVEL
    return _ATOM_LEVEL


def render(f: Formula, level: int = 0) -> str:
    """Print `f` with the fewest parentheses that parse back to the same tree."""
    match f.op:
        case Op.PROP:
            text = f.name
        case Op.NEG_PROP:
            text = f"!{f.name}"
        case Op.TOP | Op.BOT:
            text = f.op.value
        case Op.DEP:
            text = f"dep({', '.join(render(a) for a in f.args)})"
        case Op.INC:
            lhs, rhs = inc_sides(f)
            text = f"inc({', '.join(render(a) for a in lhs)} ; {', '.join(render(a) for a in rhs)})"
        case Op.BNEG:
            text = f"~{render(f.args[0], _UNARY_LEVEL)}"
        case op if op in UNARY:
            text = f"{op.value} {render(f.args[0], _UNARY_LEVEL)}"
        case op if op in BINARY_TEMPORAL:
            left, right = f.args
            text = f"{render(left, _UNARY_LEVEL)} {op.value} {render(right, _TEMPORAL_LEVEL)}"
        case op:
            own = _INFIX_LEVEL[op]
            left, right = f.args
            text = f"{render(left, own)} {op.value} {render(right, own + 1)}"
    return f"({text})" if _level(f) < level else text


# Structural helpers


def walk(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal over every node of `f`."""
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.args))


def props(f: Formula) -> frozenset[str]:
    return frozenset(node.name for node in walk(f) if node.op in LITERALS)


def size(f: Formula) -> int:
    return sum(1 for _ in walk(f))


def depth(f: Formula) -> int:
    """Nesting depth of connectives, 0 for literals and constants."""
    if not f.args:
        return 0
    return 1 + max(depth(arg) for arg in f.args)


def is_ltl(f: Formula) -> bool:
    return all(node.op in LTL_OPS for node in walk(f))


def is_bor_fragment(f: Formula) -> bool:
    """TeamLTL(or): LTL connectives plus Boolean disjunction."""
    return all(node.op in LTL_OPS or node.op is Op.BOR for node in walk(f))


def is_downward_closed(f: Formula) -> bool:
    """Lax-downward-closed syntax: TeamLTL(or) plus dependence atoms, without ~, E or inclusion atoms."""
    return all(node.op in LTL_OPS or node.op in (Op.BOR, Op.DEP) for node in walk(f))


def require_ltl(f: Formula, operation: str) -> Formula:
    """Desugar `f` and raise FragmentViolation unless the result is LTL."""
    plain = desugar(f)
    if not is_ltl(plain):
        raise FragmentViolation(f"{operation} requires an LTL formula, got '{render(f)}'")
    return plain


# Derived operators


def desugar(f: Formula) -> Formula:
    """Rewrite F, W1, W2, R1, R2, M and ME into primitive connectives."""
    if not f.args:
        return f
    args = tuple(desugar(arg) for arg in f.args)
    match f.op:
        case Op.FINALLY:
            return until(TOP, args[0])
        case Op.WEAK_UNTIL1 | Op.WEAK_UNTIL2:
            left, right = args
            op = Op.OR if f.op is Op.WEAK_UNTIL1 else Op.BOR
            return Formula(op, (globally(left), until(left, right)))
        case Op.RELEASE1 | Op.RELEASE2:
            left, right = args
            op = Op.OR if f.op is Op.RELEASE1 else Op.BOR
            return until(right, Formula(op, (and_(right, left), globally(right))))
        case Op.STRONG_RELEASE:
            left, right = args
            return until(right, and_(right, left))
        case Op.STRONG_RELEASE_SOME:
            left, right = args
            return Formula(Op.UNTIL_SOME, (right, and_(right, left)))
        case _:
            return Formula(f.op, args, f.name)


def dual(f: Formula) -> Formula:
    """Negation normal form of the classical negation of an LTL formula."""
    return _dual(require_ltl(f, "dual"))


def _dual(f: Formula) -> Formula:
    match f.op:
        case Op.PROP:
            return neg_prop(f.name)
        case Op.NEG_PROP:
            return prop(f.name)
        case Op.TOP:
            return BOT
        case Op.BOT:
            return TOP
        case Op.AND:
            return or_(_dual(f.args[0]), _dual(f.args[1]))
        case Op.OR:
            return and_(_dual(f.args[0]), _dual(f.args[1]))
        case Op.NEXT:
            return next_(_dual(f.args[0]))
        case Op.GLOBALLY:
            return until(TOP, _dual(f.args[0]))
        case Op.UNTIL:
            left, right = (_dual(arg) for arg in f.args)
            return or_(globally(right), until(right, and_(right, left)))
    raise FragmentViolation(f"no LTL dual for connective {f.op.value}")


# Fragments

# Operators whose first argument is the "left" argument of the left-flat fragments
_LEFT_ARGUMENT_OPS = frozenset(
    {Op.GLOBALLY, Op.UNTIL, Op.GLOBALLY_SOME, Op.GLOBALLY_ALL, Op.UNTIL_SOME, Op.UNTIL_ALL}
)


def _left_arguments(f: Formula) -> Iterator[Formula]:
    for node in walk(f):
        if node.op in _LEFT_ARGUMENT_OPS:
            yield node.args[0]


def is_left_flat(f: Formula) -> bool:
    return all(is_ltl(arg) for arg in _left_arguments(f))


def is_left_dc(f: Formula) -> bool:
    return all(is_bor_fragment(arg) for arg in _left_arguments(f))


def classify(f: Formula) -> FragmentInfo:
    plain = desugar(f)
    ops = [node.op for node in walk(plain)]
    return FragmentInfo(
        is_ltl=is_ltl(plain),
        is_left_flat=is_left_flat(plain),
        is_left_dc=is_left_dc(plain),
        bor_count=ops.count(Op.BOR),
        has_bneg=Op.BNEG in ops or Op.EXISTS in ops,
        has_atoms=any(op in ATOMS for op in ops),
        has_tef=any(op in TEF_OPS for op in ops),
        size=len(ops),
    )
