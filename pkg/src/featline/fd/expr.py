"""Expression and constraint vocabulary of the solver core.

Numeric expressions evaluate over 64-bit signed integers. Every node type is
an immutable dataclass so constraints can be shared between store clones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

from ..errors import ArityMismatchError, IntegerOverflowError, NotReifiableError
from .domain import INT64_MAX, INT64_MIN

CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")

# Logical complement of each comparison operator.
NEGATED_OP = {
    "=": "!=",
    "!=": "=",
    "<": ">=",
    "<=": ">",
    ">": "<=",
    ">=": "<",
}


def check_i64(v: int) -> int:
    if v < INT64_MIN or v > INT64_MAX:
        raise IntegerOverflowError(f"bound {v} leaves the 64-bit signed range")
    return v


@dataclass(frozen=True)
class VarRef:
    """Handle to a store variable."""

    index: int
    name: str = ""

    def __repr__(self) -> str:
        return self.name or f"_v{self.index}"


class NumExpr:
    """Base class for numeric expressions."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(NumExpr):
    value: int


@dataclass(frozen=True)
class Var(NumExpr):
    ref: VarRef


@dataclass(frozen=True)
class WeightedSum(NumExpr):
    """offset + sum of coeff * term, pairwise."""

    coeffs: tuple[int, ...]
    terms: tuple[NumExpr, ...]
    offset: int = 0

    def __post_init__(self):
        if len(self.coeffs) != len(self.terms):
            raise ArityMismatchError("weighted sum needs one coefficient per term")


@dataclass(frozen=True)
class Product(NumExpr):
    a: NumExpr
    b: NumExpr


@dataclass(frozen=True)
class MinOf(NumExpr):
    items: tuple[NumExpr, ...]

    def __post_init__(self):
        if not self.items:
            raise ArityMismatchError("min of nothing")


@dataclass(frozen=True)
class MaxOf(NumExpr):
    items: tuple[NumExpr, ...]

    def __post_init__(self):
        if not self.items:
            raise ArityMismatchError("max of nothing")


ExprLike = Union[NumExpr, VarRef, int]


def as_expr(x: ExprLike) -> NumExpr:
    """Lift ints and variable handles into expressions."""
    if isinstance(x, NumExpr):
        return x
    if isinstance(x, VarRef):
        return Var(x)
    if isinstance(x, int):
        return Const(x)
    raise TypeError(f"not an expression: {x!r}")


def linear(terms: Sequence[tuple[int, ExprLike]], offset: int = 0) -> WeightedSum:
    coeffs = tuple(c for c, _ in terms)
    exprs = tuple(as_expr(t) for _, t in terms)
    return WeightedSum(coeffs, exprs, offset)


def sum_of(items: Sequence[ExprLike], offset: int = 0) -> WeightedSum:
    return linear([(1, x) for x in items], offset)


class Constraint:
    """Base class for posted constraints."""

    __slots__ = ()


@dataclass(frozen=True)
class Cmp(Constraint):
    lhs: NumExpr
    op: str
    rhs: NumExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ArityMismatchError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class Element(Constraint):
    """values[index] = result, with 1-based index."""

    index: VarRef
    values: tuple[int, ...]
    result: VarRef

    def __post_init__(self):
        if not self.values:
            raise ArityMismatchError("element needs a non-empty value list")


@dataclass(frozen=True)
class Table(Constraint):
    """The variable vector must equal one of the listed rows."""

    vars: tuple[VarRef, ...]
    tuples: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for row in self.tuples:
            if len(row) != len(self.vars):
                raise ArityMismatchError(
                    f"table row {row} does not match arity {len(self.vars)}"
                )


@dataclass(frozen=True)
class AllDifferent(Constraint):
    vars: tuple[VarRef, ...]


@dataclass(frozen=True)
class Count(Constraint):
    """Number of vars equal to value, compared against n."""

    vars: tuple[VarRef, ...]
    value: int
    op: str
    n: int

    def __post_init__(self):
        if self.op not in ("<=", ">=", "="):
            raise ArityMismatchError(f"count comparison must be <=, >= or =, got {self.op!r}")
        if self.n < 0:
            raise ArityMismatchError("count bound must be non-negative")


class BoolForm:
    """Base class for reifiable formulas: comparison atoms and connectives."""

    __slots__ = ()


@dataclass(frozen=True)
class Atom(BoolForm):
    cmp: Cmp

    def __post_init__(self):
        if not isinstance(self.cmp, Cmp):
            raise NotReifiableError("only comparison atoms can appear under a truth variable")


@dataclass(frozen=True)
class And(BoolForm):
    items: tuple[BoolForm, ...]


@dataclass(frozen=True)
class Or(BoolForm):
    items: tuple[BoolForm, ...]


@dataclass(frozen=True)
class Not(BoolForm):
    item: BoolForm


@dataclass(frozen=True)
class Implies(BoolForm):
    a: BoolForm
    b: BoolForm


@dataclass(frozen=True)
class Iff(BoolForm):
    a: BoolForm
    b: BoolForm


@dataclass(frozen=True)
class Xor(BoolForm):
    a: BoolForm
    b: BoolForm


@dataclass(frozen=True)
class Reified(Constraint):
    """b = 1 exactly when the formula holds. b must range over [0..1]."""

    b: VarRef
    form: BoolForm


def negate(form: BoolForm) -> BoolForm:
    """Structural complement: flipped comparisons and De Morgan duals."""
    if isinstance(form, Atom):
        c = form.cmp
        return Atom(Cmp(c.lhs, NEGATED_OP[c.op], c.rhs))
    if isinstance(form, And):
        return Or(tuple(negate(f) for f in form.items))
    if isinstance(form, Or):
        return And(tuple(negate(f) for f in form.items))
    if isinstance(form, Not):
        return form.item
    if isinstance(form, Implies):
        return And((form.a, negate(form.b)))
    if isinstance(form, Iff):
        return Xor(form.a, form.b)
    if isinstance(form, Xor):
        return Iff(form.a, form.b)
    raise NotReifiableError(f"cannot negate {form!r}")


def expr_vars(e: NumExpr) -> Iterator[VarRef]:
    if isinstance(e, Const):
        return
    elif isinstance(e, Var):
        yield e.ref
    elif isinstance(e, WeightedSum):
        for t in e.terms:
            yield from expr_vars(t)
    elif isinstance(e, Product):
        yield from expr_vars(e.a)
        yield from expr_vars(e.b)
    elif isinstance(e, (MinOf, MaxOf)):
        for t in e.items:
            yield from expr_vars(t)
    else:
        raise TypeError(f"unknown expression node {e!r}")


def form_vars(f: BoolForm) -> Iterator[VarRef]:
    if isinstance(f, Atom):
        yield from expr_vars(f.cmp.lhs)
        yield from expr_vars(f.cmp.rhs)
    elif isinstance(f, (And, Or)):
        for g in f.items:
            yield from form_vars(g)
    elif isinstance(f, Not):
        yield from form_vars(f.item)
    elif isinstance(f, (Implies, Iff, Xor)):
        yield from form_vars(f.a)
        yield from form_vars(f.b)
    else:
        raise TypeError(f"unknown formula node {f!r}")


def constraint_vars(c: Constraint) -> Iterator[VarRef]:
    if isinstance(c, Cmp):
        yield from expr_vars(c.lhs)
        yield from expr_vars(c.rhs)
    elif isinstance(c, Element):
        yield c.index
        yield c.result
    elif isinstance(c, (Table, AllDifferent)):
        yield from c.vars
    elif isinstance(c, Count):
        yield from c.vars
    elif isinstance(c, Reified):
        yield c.b
        yield from form_vars(c.form)
    else:
        raise TypeError(f"unknown constraint {c!r}")


def eval_expr(e: NumExpr, values: Sequence[int]) -> int:
    """Ground evaluation; raises on 64-bit overflow."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return values[e.ref.index]
    if isinstance(e, WeightedSum):
        acc = e.offset
        for c, t in zip(e.coeffs, e.terms):
            acc += c * eval_expr(t, values)
        return check_i64(acc)
    if isinstance(e, Product):
        return check_i64(eval_expr(e.a, values) * eval_expr(e.b, values))
    if isinstance(e, MinOf):
        return min(eval_expr(t, values) for t in e.items)
    if isinstance(e, MaxOf):
        return max(eval_expr(t, values) for t in e.items)
    raise TypeError(f"unknown expression node {e!r}")


def _cmp_holds(a: int, op: str, b: int) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def eval_form(f: BoolForm, values: Sequence[int]) -> bool:
    if isinstance(f, Atom):
        return _cmp_holds(eval_expr(f.cmp.lhs, values), f.cmp.op, eval_expr(f.cmp.rhs, values))
    if isinstance(f, And):
        return all(eval_form(g, values) for g in f.items)
    if isinstance(f, Or):
        return any(eval_form(g, values) for g in f.items)
    if isinstance(f, Not):
        return not eval_form(f.item, values)
    if isinstance(f, Implies):
        return (not eval_form(f.a, values)) or eval_form(f.b, values)
    if isinstance(f, Iff):
        return eval_form(f.a, values) == eval_form(f.b, values)
    if isinstance(f, Xor):
        return eval_form(f.a, values) != eval_form(f.b, values)
    raise TypeError(f"unknown formula node {f!r}")


def eval_constraint(c: Constraint, values: Sequence[int]) -> bool:
    """Truth of a constraint under a total assignment."""
    if isinstance(c, Cmp):
        return _cmp_holds(eval_expr(c.lhs, values), c.op, eval_expr(c.rhs, values))
    if isinstance(c, Element):
        i = values[c.index.index]
        return 1 <= i <= len(c.values) and c.values[i - 1] == values[c.result.index]
    if isinstance(c, Table):
        row = tuple(values[v.index] for v in c.vars)
        return row in c.tuples
    if isinstance(c, AllDifferent):
        seen = [values[v.index] for v in c.vars]
        return len(set(seen)) == len(seen)
    if isinstance(c, Count):
        k = sum(1 for v in c.vars if values[v.index] == c.value)
        return _cmp_holds(k, c.op, c.n)
    if isinstance(c, Reified):
        return (values[c.b.index] == 1) == eval_form(c.form, values)
    raise TypeError(f"unknown constraint {c!r}")


def render_expr(e: NumExpr) -> str:
    """Stable text form used by labels and the lowered-constraint listing."""
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Var):
        return repr(e.ref)
    if isinstance(e, WeightedSum):
        parts = []
        for c, t in zip(e.coeffs, e.terms):
            txt = render_expr(t)
            if not isinstance(t, (Const, Var)):
                txt = f"({txt})"
            if c == 1:
                term = txt
            elif c == -1:
                term = f"-{txt}"
            else:
                term = f"{c}*{txt}"
            parts.append(term)
        if e.offset:
            parts.append(str(e.offset))
        if not parts:
            return "0"
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out
    if isinstance(e, Product):
        fa, fb = render_expr(e.a), render_expr(e.b)
        if not isinstance(e.a, (Const, Var)):
            fa = f"({fa})"
        if not isinstance(e.b, (Const, Var)):
            fb = f"({fb})"
        return f"{fa} * {fb}"
    if isinstance(e, MinOf):
        return "min(%s)" % ", ".join(render_expr(t) for t in e.items)
    if isinstance(e, MaxOf):
        return "max(%s)" % ", ".join(render_expr(t) for t in e.items)
    raise TypeError(f"unknown expression node {e!r}")


def render_form(f: BoolForm) -> str:
    if isinstance(f, Atom):
        return f"{render_expr(f.cmp.lhs)} {f.cmp.op} {render_expr(f.cmp.rhs)}"
    if isinstance(f, And):
        return "(%s)" % " and ".join(render_form(g) for g in f.items)
    if isinstance(f, Or):
        return "(%s)" % " or ".join(render_form(g) for g in f.items)
    if isinstance(f, Not):
        return f"not {render_form(f.item)}"
    if isinstance(f, Implies):
        return f"({render_form(f.a)} => {render_form(f.b)})"
    if isinstance(f, Iff):
        return f"({render_form(f.a)} <=> {render_form(f.b)})"
    if isinstance(f, Xor):
        return f"({render_form(f.a)} xor {render_form(f.b)})"
    raise TypeError(f"unknown formula node {f!r}")


def render_constraint(c: Constraint) -> str:
    if isinstance(c, Cmp):
        return f"{render_expr(c.lhs)} {c.op} {render_expr(c.rhs)}"
    if isinstance(c, Element):
        vals = ", ".join(str(v) for v in c.values)
        return f"element({c.index!r}, [{vals}], {c.result!r})"
    if isinstance(c, Table):
        rows = ", ".join("(%s)" % ", ".join(str(x) for x in row) for row in c.tuples)
        names = ", ".join(repr(v) for v in c.vars)
        return f"table([{names}], [{rows}])"
    if isinstance(c, AllDifferent):
        return "alldifferent(%s)" % ", ".join(repr(v) for v in c.vars)
    if isinstance(c, Count):
        names = ", ".join(repr(v) for v in c.vars)
        kind = {"<=": "atmost", ">=": "atleast", "=": "exactly"}[c.op]
        return f"{kind}({c.n}, [{names}], {c.value})"
    if isinstance(c, Reified):
        return f"{c.b!r} <=> {render_form(c.form)}"
    raise TypeError(f"unknown constraint {c!r}")
