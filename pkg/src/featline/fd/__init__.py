"""Finite-domain integer constraint core.

Variables live in a Store, take values from IntervalSet domains, and are
related by comparison, element, table, distinctness, counting, and reified
constraints. Posting and restricting propagate to a deterministic fixpoint;
search enumerates, counts, or optimizes over what propagation left open.
"""

from .domain import INT64_MAX, INT64_MIN, IntervalSet
from .expr import (
    AllDifferent,
    And,
    Atom,
    BoolForm,
    Cmp,
    Const,
    Constraint,
    Count,
    Element,
    Iff,
    Implies,
    MaxOf,
    MinOf,
    Not,
    NumExpr,
    Or,
    Product,
    Reified,
    Table,
    Var,
    VarRef,
    WeightedSum,
    Xor,
    as_expr,
    constraint_vars,
    eval_constraint,
    eval_expr,
    eval_form,
    expr_vars,
    form_vars,
    linear,
    negate,
    render_constraint,
    render_expr,
    render_form,
    sum_of,
)
from .propagators import entail_cmp, entail_form, expr_bounds
from .search import (
    OptimizeResult,
    Search,
    Strategy,
    ValueOrder,
    VarOrder,
    count_solutions,
    optimize,
    solve_next,
)
from .store import Solution, Status, Store

__all__ = [
    "INT64_MAX",
    "INT64_MIN",
    "IntervalSet",
    "AllDifferent",
    "And",
    "Atom",
    "BoolForm",
    "Cmp",
    "Const",
    "Constraint",
    "Count",
    "Element",
    "Iff",
    "Implies",
    "MaxOf",
    "MinOf",
    "Not",
    "NumExpr",
    "Or",
    "Product",
    "Reified",
    "Table",
    "Var",
    "VarRef",
    "WeightedSum",
    "Xor",
    "as_expr",
    "constraint_vars",
    "eval_constraint",
    "eval_expr",
    "eval_form",
    "expr_vars",
    "form_vars",
    "linear",
    "negate",
    "render_constraint",
    "render_expr",
    "render_form",
    "sum_of",
    "entail_cmp",
    "entail_form",
    "expr_bounds",
    "OptimizeResult",
    "Search",
    "Strategy",
    "ValueOrder",
    "VarOrder",
    "count_solutions",
    "optimize",
    "solve_next",
    "Solution",
    "Status",
    "Store",
]
