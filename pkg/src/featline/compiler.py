"""Lowering from the feature-model layer to the finite-domain store.

Every feature becomes an occurrence variable over [0..max_count], every
attribute a variable over its declared domain. Hierarchy edges, groups and
cross-tree dependencies each emit a fixed constraint shape; free-form
expressions become comparisons or reified formulas. The root is pinned to 1:
a configuration presumes the product exists.

Lowering is deterministic: the same model yields the same variables and the
same constraint list in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import CompileError
from .fd import (
    AllDifferent,
    And,
    Atom,
    BoolForm,
    Cmp,
    Const,
    Constraint,
    Count,
    Iff,
    Implies,
    IntervalSet,
    MaxOf,
    MinOf,
    Not,
    NumExpr,
    Or,
    Product,
    Reified,
    Store,
    Table,
    Var,
    VarRef,
    WeightedSum,
    Xor,
)
from .model import (
    AllDiffExpr,
    AttrRef,
    BinOp,
    BoolOp,
    ChooseExpr,
    Compare,
    ConstraintExpr,
    CountExpr,
    CrossDep,
    DepKind,
    DepScope,
    EdgeKind,
    Feature,
    FeatureModel,
    Group,
    IntLit,
    IntRange,
    MinMax,
    NameRef,
    NotOp,
    RelationExpr,
    render_expr,
    validate_model,
)

_COUNT_OPS = {"atmost": "<=", "atleast": ">=", "exactly": "="}


@dataclass
class VarMap:
    """Name resolution for a compiled model."""

    features: dict[str, VarRef] = field(default_factory=dict)
    attrs: dict[tuple[str, str], VarRef] = field(default_factory=dict)
    goals: dict[str, NumExpr] = field(default_factory=dict)
    codes: dict[str, int] = field(default_factory=dict)
    goal_order: tuple[str, ...] = ()

    def all_vars(self) -> list[VarRef]:
        """Every model-level variable in declaration order."""
        out = list(self.features.values()) + list(self.attrs.values())
        out.sort(key=lambda r: r.index)
        return out

    def lookup(self, name: str) -> Optional[VarRef]:
        """Resolve 'Feature' or 'Feature.Attr' to its variable."""
        if "." in name:
            f, _, a = name.partition(".")
            return self.attrs.get((f, a))
        return self.features.get(name)


class ExprLowerer:
    """Turns free-form constraint expressions into store constraints against
    an existing variable map. The compiler drives one while building a model;
    a configuration session keeps its own for what-if constraints."""

    def __init__(self, store: Store, vm: VarMap):
        self.store = store
        self.vm = vm
        self.true_var: Optional[VarRef] = None

    def fail(self, msg: str) -> "CompileError":
        return CompileError(msg)

    def always(self) -> VarRef:
        # one shared truth var backs every unconditionally-enforced formula
        if self.true_var is None:
            self.true_var = self.store.new_var((1, 1), "true")
        return self.true_var

    def const_value(self, v: Union[int, str]) -> int:
        if isinstance(v, int):
            return v
        if v in self.vm.codes:
            return self.vm.codes[v]
        raise self.fail(f"undeclared code '{v}'")

    def feature_var(self, name: str) -> VarRef:
        ref = self.vm.features.get(name)
        if ref is None:
            raise self.fail(f"unknown feature '{name}'")
        return ref

    def lower_expr(self, e: ConstraintExpr) -> list[Constraint]:
        """Top level: conjunctions flatten, symbolic nodes map to globals,
        plain comparisons post directly, anything else is reified."""
        if isinstance(e, BoolOp) and e.op == "and":
            out: list[Constraint] = []
            for t in e.items:
                out.extend(self.lower_expr(t))
            return out
        if isinstance(e, Compare):
            return [Cmp(self.lower_arith(e.lhs), e.op, self.lower_arith(e.rhs))]
        if isinstance(e, AllDiffExpr):
            return [AllDifferent(tuple(self.ref_var(t) for t in e.items))]
        if isinstance(e, CountExpr):
            return [Count(tuple(self.ref_var(t) for t in e.items),
                          self.const_value(e.value), _COUNT_OPS[e.kind], e.n)]
        if isinstance(e, RelationExpr):
            rows = tuple(tuple(self.const_value(v) for v in row)
                         for row in e.tuples)
            return [Table(tuple(self.ref_var(t) for t in e.items), rows)]
        if isinstance(e, ChooseExpr):
            refs = tuple(self.ref_var(t) for t in e.items)
            return [Count(refs, 1, ">=", e.lo), Count(refs, 1, "<=", e.hi)]
        return [Reified(self.always(), self.lower_form(e))]

    def lower_form(self, e: ConstraintExpr) -> BoolForm:
        if isinstance(e, Compare):
            return Atom(Cmp(self.lower_arith(e.lhs), e.op,
                            self.lower_arith(e.rhs)))
        if isinstance(e, BoolOp):
            parts = tuple(self.lower_form(t) for t in e.items)
            if e.op == "and":
                return And(parts)
            if e.op == "or":
                return Or(parts)
            if e.op == "xor":
                return Xor(parts[0], parts[1])
            if e.op == "implies":
                return Implies(parts[0], parts[1])
            if e.op == "iff":
                return Iff(parts[0], parts[1])
            raise self.fail(f"unknown connective '{e.op}'")
        if isinstance(e, NotOp):
            return Not(self.lower_form(e.item))
        if isinstance(e, (AllDiffExpr, CountExpr, RelationExpr, ChooseExpr)):
            raise self.fail(
                f"{render_expr(e)} cannot appear under a connective")
        raise self.fail(f"{render_expr(e)} is not a condition")

    def ref_var(self, e: ConstraintExpr) -> VarRef:
        if isinstance(e, NameRef) and e.name in self.vm.features:
            return self.vm.features[e.name]
        if isinstance(e, AttrRef):
            ref = self.vm.attrs.get((e.feature, e.attr))
            if ref is not None:
                return ref
        raise self.fail(f"{render_expr(e)} is not a feature or attribute")

    def lower_arith(self, e: ConstraintExpr) -> NumExpr:
        coeffs, terms, offset = self.linearize(e)
        if not terms:
            return Const(offset)
        if len(terms) == 1 and coeffs[0] == 1 and offset == 0:
            return terms[0]
        return WeightedSum(tuple(coeffs), tuple(terms), offset)

    def linearize(self, e: ConstraintExpr) -> tuple[list[int], list[NumExpr], int]:
        """Flatten +/-/scalar-* chains into coefficient lists."""
        if isinstance(e, IntLit):
            return [], [], e.value
        if isinstance(e, NameRef):
            if e.name in self.vm.features:
                return [1], [Var(self.vm.features[e.name])], 0
            if e.name in self.vm.codes:
                return [], [], self.vm.codes[e.name]
            raise self.fail(f"'{e.name}' is not a feature or enum code")
        if isinstance(e, AttrRef):
            ref = self.vm.attrs.get((e.feature, e.attr))
            if ref is None:
                raise self.fail(f"'{e.feature}.{e.attr}' is not declared")
            return [1], [Var(ref)], 0
        if isinstance(e, BinOp) and e.op in ("+", "-"):
            ca, ta, oa = self.linearize(e.a)
            cb, tb, ob = self.linearize(e.b)
            if e.op == "-":
                cb = [-c for c in cb]
                ob = -ob
            return ca + cb, ta + tb, oa + ob
        if isinstance(e, BinOp) and e.op == "*":
            ca, ta, oa = self.linearize(e.a)
            cb, tb, ob = self.linearize(e.b)
            if not ta:  # constant * expr scales coefficients
                return [oa * c for c in cb], tb, oa * ob
            if not tb:
                return [ob * c for c in ca], ta, oa * ob
            return [1], [Product(self.lower_arith(e.a), self.lower_arith(e.b))], 0
        if isinstance(e, MinMax):
            items = tuple(self.lower_arith(t) for t in e.items)
            node = MinOf(items) if e.kind == "min" else MaxOf(items)
            return [1], [node], 0
        raise self.fail(f"{render_expr(e)} is not a numeric expression")


class _Lowering(ExprLowerer):
    def __init__(self, m: FeatureModel):
        super().__init__(Store(), VarMap(codes=m.code_values()))
        self.m = m

    def declare_vars(self) -> None:
        for f in self.m.features:
            ref = self.store.new_var((0, f.max_count), f.name)
            self.vm.features[f.name] = ref
            for a in f.attributes:
                if isinstance(a.domain, IntRange):
                    dom = IntervalSet.range(a.domain.lo, a.domain.hi)
                else:
                    dom = IntervalSet.from_values(
                        self.const_value(v) for v in a.domain.values)
                self.vm.attrs[(f.name, a.name)] = self.store.new_var(
                    dom, f"{f.name}.{a.name}")

    def post(self, c: Constraint, label: str) -> None:
        self.store.post(c, label)

    def run(self) -> None:
        self.declare_vars()
        root = self.m.features[0]
        self.post(Cmp(Var(self.feature_var(root.name)), "=", Const(1)),
                  f"{root.name} = 1")
        for f in self.m.features:
            if f.parent is not None:
                for c, label in self.lower_hierarchy(f):
                    self.post(c, label)
        for g in self.m.groups:
            for c, label in self.lower_group(g):
                self.post(c, label)
        for d in self.m.cross_deps:
            for c, label in self.lower_cross(d):
                self.post(c, label)
        for e in self.m.constraints:
            for c in self.lower_expr(e):
                self.post(c, render_expr(e))
        for g in self.m.goals:
            self.vm.goals[g.name] = self.lower_arith(g.expr)
        self.vm.goal_order = tuple(g.name for g in self.m.goals)

    def lower_hierarchy(self, f: Feature) -> list[tuple[Constraint, str]]:
        parent = self.m.feature(f.parent)
        if parent is None:
            raise self.fail(f"unknown parent '{f.parent}'")
        c = Var(self.feature_var(f.name))
        p = Var(self.feature_var(parent.name))
        mandatory = f.edge is EdgeKind.MANDATORY
        if parent.max_count == 1 and f.max_count > 1:
            # child may occur up to N times per included parent
            n = f.max_count
            cap = (Cmp(c, "<=", WeightedSum((n,), (p,))),
                   f"{f.name} <= {n} * {parent.name}")
            if mandatory:
                return [(Cmp(c, ">=", p), f"{f.name} >= {parent.name}"), cap]
            return [cap]
        if mandatory:
            return [(Cmp(c, "=", p), f"{f.name} = {parent.name}")]
        return [(Cmp(c, "<=", p), f"{f.name} <= {parent.name}")]

    def lower_group(self, g: Group) -> list[tuple[Constraint, str]]:
        total = WeightedSum(
            tuple(1 for _ in g.members),
            tuple(Var(self.feature_var(m)) for m in g.members))
        p = Var(self.feature_var(g.parent))
        joined = " + ".join(g.members)
        return [
            (Cmp(WeightedSum((g.lo,), (p,)), "<=", total),
             f"{g.lo} * {g.parent} <= {joined}"),
            (Cmp(total, "<=", WeightedSum((g.hi,), (p,))),
             f"{joined} <= {g.hi} * {g.parent}"),
        ]

    def lower_cross(self, d: CrossDep) -> list[tuple[Constraint, str]]:
        src = Var(self.feature_var(d.source))
        dst = Var(self.feature_var(d.target))
        if d.kind is DepKind.REQUIRES and d.scope is DepScope.PER_INSTANCE:
            label = f"{d.source} requires {d.target} per instance"
            if d.offset:
                label += f" +{d.offset}"
            rhs = WeightedSum((1,), (src,), d.offset)
            return [(Cmp(dst, ">=", rhs), label)]
        present_src = Atom(Cmp(src, ">=", Const(1)))
        present_dst = Atom(Cmp(dst, ">=", Const(1)))
        if d.kind is DepKind.REQUIRES:
            form: BoolForm = Implies(present_src, present_dst)
            label = f"{d.source} requires {d.target}"
        else:
            form = Not(And((present_src, present_dst)))
            label = f"{d.source} excludes {d.target}"
        return [(Reified(self.always(), form), label)]


def compile_model(m: FeatureModel) -> tuple[Store, VarMap]:
    """Lower a validated model. The returned store has already propagated;
    a void model comes back as a failed store, not an error."""
    diags = validate_model(m)
    if diags:
        raise CompileError("model does not validate: " + "; ".join(
            str(d) for d in diags[:3]))
    lowering = _Lowering(m)
    lowering.run()
    return lowering.store, lowering.vm


def emit_csp(store: Store) -> str:
    """One lowered constraint per line, in posting order."""
    from .fd import render_constraint

    lines = [render_constraint(c) for c in store.constraints]
    return "\n".join(lines) + ("\n" if lines else "")
