"""Feature-model object layer.

A model is a tree of features (the first feature is the root), each with an
occurrence bound and optional integer attributes, plus cardinality groups,
cross-tree dependencies, free-form constraints and optimization goals.
Symbolic values (test types and the like) are declared as enums whose codes
map to 0, 1, 2, ... in declaration order.

Everything here is plain data. ``validate_model`` reports every structural
violation as a diagnostic; it never raises and never mutates. Models that
validate cleanly are guaranteed to compile without structural errors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    """Half-open character range [start, end) with the 1-based line and
    column of its first character."""

    line: int
    column: int
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError("span end before start")


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        if self.span is None:
            return f"{self.code}: {self.message}"
        return f"{self.span.line}:{self.span.column}: {self.code}: {self.message}"


class EdgeKind(enum.Enum):
    MANDATORY = "mandatory"
    OPTIONAL = "optional"


class DepKind(enum.Enum):
    REQUIRES = "requires"
    EXCLUDES = "excludes"


class DepScope(enum.Enum):
    PRESENCE = "presence"
    PER_INSTANCE = "per instance"


class Direction(enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


# Attribute domains: a contiguous range or an explicit value set. Set entries
# may be integers or enum code names; codes resolve during validation.
@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int


@dataclass(frozen=True)
class ValueSet:
    values: tuple[Union[int, str], ...]


AttrDomain = Union[IntRange, ValueSet]


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    domain: AttrDomain
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Feature:
    name: str
    max_count: int = 1
    parent: Optional[str] = None
    edge: EdgeKind = EdgeKind.MANDATORY
    attributes: tuple[AttributeDecl, ...] = ()
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class EnumDecl:
    name: str
    codes: tuple[str, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Group:
    parent: str
    members: tuple[str, ...]
    lo: int
    hi: int
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class CrossDep:
    kind: DepKind
    source: str
    target: str
    scope: DepScope = DepScope.PRESENCE
    offset: int = 0
    span: Optional[SourceSpan] = field(default=None, compare=False)


# ---------------------------------------------------------------------------
# Constraint expressions


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class NameRef:
    """Bare identifier: a feature's occurrence count or an enum code."""

    name: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class AttrRef:
    feature: str
    attr: str
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # "+", "-", "*"
    a: "ConstraintExpr"
    b: "ConstraintExpr"
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class MinMax:
    kind: str  # "min" | "max"
    items: tuple["ConstraintExpr", ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class Compare:
    op: str  # "=", "!=", "<", "<=", ">", ">="
    lhs: "ConstraintExpr"
    rhs: "ConstraintExpr"
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class BoolOp:
    """N-ary for and/or, binary for xor/implies/iff."""

    op: str  # "and", "or", "xor", "implies", "iff"
    items: tuple["ConstraintExpr", ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class NotOp:
    item: "ConstraintExpr"
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class AllDiffExpr:
    items: tuple["ConstraintExpr", ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class CountExpr:
    kind: str  # "atmost" | "atleast" | "exactly"
    n: int
    items: tuple["ConstraintExpr", ...]
    value: Union[int, str]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class RelationExpr:
    items: tuple["ConstraintExpr", ...]
    tuples: tuple[tuple[Union[int, str], ...], ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class ChooseExpr:
    lo: int
    hi: int
    items: tuple["ConstraintExpr", ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


ConstraintExpr = Union[
    IntLit, NameRef, AttrRef, BinOp, MinMax,
    Compare, BoolOp, NotOp,
    AllDiffExpr, CountExpr, RelationExpr, ChooseExpr,
]

SYMBOLIC_NODES = (AllDiffExpr, CountExpr, RelationExpr, ChooseExpr)


@dataclass(frozen=True)
class Goal:
    direction: Direction
    name: str
    expr: ConstraintExpr
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True)
class FeatureModel:
    name: str
    features: tuple[Feature, ...] = ()
    enums: tuple[EnumDecl, ...] = ()
    groups: tuple[Group, ...] = ()
    cross_deps: tuple[CrossDep, ...] = ()
    constraints: tuple[ConstraintExpr, ...] = ()
    goals: tuple[Goal, ...] = ()

    def feature(self, name: str) -> Optional[Feature]:
        for f in self.features:
            if f.name == name:
                return f
        return None

    def attribute(self, feature: str, attr: str) -> Optional[AttributeDecl]:
        f = self.feature(feature)
        if f is None:
            return None
        for a in f.attributes:
            if a.name == attr:
                return a
        return None

    def code_values(self) -> dict[str, int]:
        """Enum codes numbered 0, 1, 2, ... per enum in declaration order."""
        out: dict[str, int] = {}
        for e in self.enums:
            for i, c in enumerate(e.codes):
                out.setdefault(c, i)
        return out

    @property
    def root(self) -> Optional[Feature]:
        return self.features[0] if self.features else None


# ---------------------------------------------------------------------------
# Validation


def _resolve_value(m: FeatureModel, v: Union[int, str],
                   codes: dict[str, int]) -> Optional[int]:
    if isinstance(v, int):
        return v
    return codes.get(v)


class _Validator:
    def __init__(self, m: FeatureModel):
        self.m = m
        self.out: list[Diagnostic] = []
        self.codes = m.code_values()
        self.feature_names = {f.name for f in m.features}

    def err(self, code: str, message: str, span: Optional[SourceSpan]) -> None:
        self.out.append(Diagnostic(code, message, span))

    def run(self) -> list[Diagnostic]:
        self.check_names()
        self.check_tree()
        self.check_attributes()
        for g in self.m.groups:
            self.check_group(g)
        for d in self.m.cross_deps:
            self.check_cross(d)
        for c in self.m.constraints:
            t = self.check_expr(c, symbolic_ok=True)
            if t == "int":
                self.err("not-a-condition",
                         "constraint must be a condition, not a number",
                         getattr(c, "span", None))
        seen_goals: set[str] = set()
        for g in self.m.goals:
            if g.name in seen_goals:
                self.err("duplicate-goal", f"goal '{g.name}' declared twice", g.span)
            seen_goals.add(g.name)
            t = self.check_expr(g.expr, symbolic_ok=False)
            if t == "bool":
                self.err("goal-not-numeric",
                         f"goal '{g.name}' must be a numeric expression", g.span)
        return self.out

    # All referable identifiers share one namespace so a bare name in an
    # expression resolves unambiguously.
    def check_names(self) -> None:
        seen: dict[str, str] = {}
        def claim(name: str, what: str, span: Optional[SourceSpan]) -> None:
            if name in seen:
                self.err("duplicate-name",
                         f"{what} '{name}' collides with {seen[name]} of the same name",
                         span)
            else:
                seen[name] = what
        for f in self.m.features:
            claim(f.name, "feature", f.span)
        for e in self.m.enums:
            claim(e.name, "enum", e.span)
            code_seen: set[str] = set()
            for c in e.codes:
                claim(c, "enum code", e.span)
                if c in code_seen:
                    self.err("duplicate-name",
                             f"enum code '{c}' repeated in '{e.name}'", e.span)
                code_seen.add(c)

    def check_tree(self) -> None:
        m = self.m
        if not m.features:
            self.err("no-root", "model declares no features", None)
            return
        roots = [f for f in m.features if f.parent is None]
        if len(roots) != 1:
            names = ", ".join(f.name for f in roots) or "none"
            self.err("root-count", f"expected exactly one root feature, got: {names}",
                     roots[1].span if len(roots) > 1 else None)
        if m.features[0].parent is not None:
            self.err("root-not-first",
                     f"first feature '{m.features[0].name}' has a parent; "
                     "the root must be declared first", m.features[0].span)
        by_name = {}
        for f in m.features:
            by_name.setdefault(f.name, f)
        children: dict[str, list[str]] = {f.name: [] for f in m.features}
        for f in m.features:
            if f.max_count < 1:
                self.err("bad-max-count",
                         f"feature '{f.name}' max count must be at least 1", f.span)
            if f.parent is None:
                if f.max_count != 1:
                    self.err("root-max-count",
                             f"root feature '{f.name}' cannot be multi-occurrence",
                             f.span)
                continue
            if f.parent not in by_name:
                self.err("unknown-parent",
                         f"feature '{f.name}' has unknown parent '{f.parent}'", f.span)
            elif f.parent == f.name:
                self.err("self-parent", f"feature '{f.name}' is its own parent", f.span)
            else:
                children[f.parent].append(f.name)
        if roots and m.features[0].parent is None:
            reached = set()
            stack = [m.features[0].name]
            while stack:
                cur = stack.pop()
                if cur in reached:
                    continue
                reached.add(cur)
                stack.extend(children.get(cur, ()))
            for f in m.features:
                if f.name not in reached and f.parent is not None:
                    self.err("unreachable-feature",
                             f"feature '{f.name}' is not reachable from the root",
                             f.span)

    def check_attributes(self) -> None:
        for f in self.m.features:
            seen: set[str] = set()
            for a in f.attributes:
                if a.name in seen:
                    self.err("duplicate-attr",
                             f"attribute '{f.name}.{a.name}' declared twice", a.span)
                seen.add(a.name)
                if isinstance(a.domain, IntRange):
                    if a.domain.lo > a.domain.hi:
                        self.err("empty-domain",
                                 f"attribute '{f.name}.{a.name}' has an empty range",
                                 a.span)
                else:
                    vals = []
                    for v in a.domain.values:
                        rv = _resolve_value(self.m, v, self.codes)
                        if rv is None:
                            self.err("unknown-code",
                                     f"attribute '{f.name}.{a.name}' uses "
                                     f"undeclared code '{v}'", a.span)
                        else:
                            vals.append(rv)
                    if not a.domain.values:
                        self.err("empty-domain",
                                 f"attribute '{f.name}.{a.name}' has an empty "
                                 "value set", a.span)
                    if len(set(vals)) != len(vals):
                        self.err("duplicate-domain-value",
                                 f"attribute '{f.name}.{a.name}' lists a value "
                                 "twice", a.span)

    def check_group(self, g: Group) -> None:
        parent = self.m.feature(g.parent)
        if parent is None:
            self.err("unknown-feature", f"group parent '{g.parent}' is not declared",
                     g.span)
        elif parent.max_count != 1:
            self.err("group-parent-multi",
                     f"group parent '{g.parent}' must be a boolean feature", g.span)
        if len(g.members) < 2:
            self.err("group-too-small", "a group needs at least two members", g.span)
        if len(set(g.members)) != len(g.members):
            self.err("group-duplicate-member",
                     f"group of '{g.parent}' lists a member twice", g.span)
        for name in g.members:
            f = self.m.feature(name)
            if f is None:
                self.err("unknown-feature",
                         f"group member '{name}' is not declared", g.span)
                continue
            if f.parent != g.parent:
                self.err("group-member-not-child",
                         f"group member '{name}' is not a child of '{g.parent}'",
                         g.span)
            if f.max_count != 1:
                self.err("group-member-multi",
                         f"group member '{name}' must be a boolean feature", g.span)
        if g.lo < 0 or g.lo > g.hi:
            self.err("bad-cardinality",
                     f"group of '{g.parent}' has invalid cardinality "
                     f"[{g.lo}..{g.hi}]", g.span)
        elif g.hi > len(g.members):
            self.err("bad-cardinality",
                     f"group of '{g.parent}' allows {g.hi} members but lists "
                     f"only {len(g.members)}", g.span)

    def check_cross(self, d: CrossDep) -> None:
        for name in (d.source, d.target):
            if self.m.feature(name) is None:
                self.err("unknown-feature",
                         f"dependency references undeclared feature '{name}'", d.span)
        if d.source == d.target:
            self.err("self-dependency",
                     f"feature '{d.source}' cannot depend on itself", d.span)
        if d.kind is DepKind.EXCLUDES and d.scope is DepScope.PER_INSTANCE:
            self.err("excludes-per-instance",
                     "'excludes' has no per-instance form", d.span)
        if d.offset != 0 and not (d.kind is DepKind.REQUIRES
                                  and d.scope is DepScope.PER_INSTANCE):
            self.err("offset-without-per-instance",
                     "an offset only applies to per-instance 'requires'", d.span)

    # Returns "int", "bool" or "error". Symbolic nodes are only legal at the
    # top of a constraint or nested under plain conjunction.
    def check_expr(self, e: ConstraintExpr, symbolic_ok: bool) -> str:
        if isinstance(e, IntLit):
            return "int"
        if isinstance(e, NameRef):
            if e.name in self.feature_names or e.name in self.codes:
                return "int"
            self.err("unknown-name", f"'{e.name}' is not a feature or enum code",
                     e.span)
            return "error"
        if isinstance(e, AttrRef):
            if self.m.attribute(e.feature, e.attr) is None:
                self.err("unknown-attribute",
                         f"'{e.feature}.{e.attr}' is not a declared attribute",
                         e.span)
                return "error"
            return "int"
        if isinstance(e, BinOp):
            self.expect_int(e.a)
            self.expect_int(e.b)
            return "int"
        if isinstance(e, MinMax):
            for t in e.items:
                self.expect_int(t)
            return "int"
        if isinstance(e, Compare):
            self.expect_int(e.lhs)
            self.expect_int(e.rhs)
            return "bool"
        if isinstance(e, BoolOp):
            inner_ok = symbolic_ok and e.op == "and"
            for t in e.items:
                self.expect_bool(t, inner_ok)
            return "bool"
        if isinstance(e, NotOp):
            self.expect_bool(e.item, False)
            return "bool"
        if isinstance(e, SYMBOLIC_NODES):
            if not symbolic_ok:
                self.err("symbolic-under-connective",
                         f"{_symbolic_name(e)} cannot be nested under "
                         "negation or other connectives", e.span)
            self.check_symbolic(e)
            return "bool"
        raise TypeError(f"unknown expression node {e!r}")

    def expect_int(self, e: ConstraintExpr) -> None:
        t = self.check_expr(e, symbolic_ok=False)
        if t == "bool":
            self.err("condition-in-arithmetic",
                     "a condition cannot be used as a number",
                     getattr(e, "span", None))

    def expect_bool(self, e: ConstraintExpr, symbolic_ok: bool) -> None:
        t = self.check_expr(e, symbolic_ok=symbolic_ok)
        if t == "int":
            self.err("number-as-condition",
                     "a number cannot be used as a condition; compare it "
                     "to something", getattr(e, "span", None))

    def check_symbolic(self, e: ConstraintExpr) -> None:
        items = e.items
        for t in items:
            if isinstance(t, NameRef):
                if t.name in self.feature_names:
                    continue
                if t.name in self.codes:
                    self.err("ref-required",
                             f"{_symbolic_name(e)} arguments must be feature "
                             f"or attribute references, not code '{t.name}'",
                             t.span)
                else:
                    self.err("unknown-name",
                             f"'{t.name}' is not a feature or enum code", t.span)
            elif isinstance(t, AttrRef):
                self.check_expr(t, symbolic_ok=False)
            else:
                self.err("ref-required",
                         f"{_symbolic_name(e)} arguments must be feature or "
                         "attribute references", getattr(t, "span", e.span))
        if isinstance(e, CountExpr):
            if e.n < 0:
                self.err("bad-count", "count bound must be nonnegative", e.span)
            if _resolve_value(self.m, e.value, self.codes) is None:
                self.err("unknown-code", f"undeclared code '{e.value}'", e.span)
        elif isinstance(e, ChooseExpr):
            if not (0 <= e.lo <= e.hi):
                self.err("bad-cardinality",
                         f"choose bounds [{e.lo}..{e.hi}] are invalid", e.span)
        elif isinstance(e, RelationExpr):
            if not e.tuples:
                self.err("empty-relation", "relation lists no tuples", e.span)
            for row in e.tuples:
                if len(row) != len(items):
                    self.err("arity-mismatch",
                             f"relation tuple {row} has {len(row)} values for "
                             f"{len(items)} references", e.span)
                for v in row:
                    if _resolve_value(self.m, v, self.codes) is None:
                        self.err("unknown-code", f"undeclared code '{v}'", e.span)
        elif isinstance(e, AllDiffExpr):
            if len(items) < 2:
                self.err("alldifferent-arity",
                         "alldifferent needs at least two references", e.span)


def _symbolic_name(e: ConstraintExpr) -> str:
    if isinstance(e, AllDiffExpr):
        return "alldifferent"
    if isinstance(e, CountExpr):
        return e.kind
    if isinstance(e, RelationExpr):
        return "relation"
    return "choose"


def validate_model(m: FeatureModel) -> list[Diagnostic]:
    """Every structural violation in the model, with locations. Empty = valid."""
    return _Validator(m).run()


def validate_expr(m: FeatureModel, e: ConstraintExpr) -> list[Diagnostic]:
    """Check one free-standing constraint expression against a model, with
    the same rules a declared `constraint` line gets."""
    v = _Validator(m)
    t = v.check_expr(e, symbolic_ok=True)
    if t == "int":
        v.err("not-a-condition", "constraint must be a condition, not a number",
              getattr(e, "span", None))
    return v.out


# ---------------------------------------------------------------------------
# Rendering (canonical DSL text, reused by the serializer and for labels)

_PREC = {
    "iff": 1, "implies": 2, "xor": 3, "or": 4, "and": 5,
    # not = 6, comparisons = 7
    "+": 8, "-": 8, "*": 9,
}


def render_expr(e: ConstraintExpr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, NameRef):
        return e.name
    if isinstance(e, AttrRef):
        return f"{e.feature}.{e.attr}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        # left-assoc: right operand needs strictly higher precedence
        s = f"{render_expr(e.a, p)} {e.op} {render_expr(e.b, p + 1)}"
        return f"({s})" if p < parent_prec else s
    if isinstance(e, MinMax):
        return f"{e.kind}({', '.join(render_expr(t) for t in e.items)})"
    if isinstance(e, Compare):
        s = f"{render_expr(e.lhs, 8)} {e.op} {render_expr(e.rhs, 8)}"
        return f"({s})" if parent_prec >= 7 else s
    if isinstance(e, BoolOp):
        p = _PREC[e.op]
        if e.op == "implies":  # right-assoc
            s = f"{render_expr(e.items[0], p + 1)} => {render_expr(e.items[1], p)}"
        elif e.op == "iff":
            s = f"{render_expr(e.items[0], p + 1)} <=> {render_expr(e.items[1], p + 1)}"
        else:
            joiner = f" {e.op} "
            s = joiner.join(render_expr(t, p + 1) for t in e.items)
        return f"({s})" if p < parent_prec else s
    if isinstance(e, NotOp):
        return f"not {render_expr(e.item, 6)}"
    if isinstance(e, AllDiffExpr):
        return f"alldifferent({', '.join(render_expr(t) for t in e.items)})"
    if isinstance(e, CountExpr):
        refs = ", ".join(render_expr(t) for t in e.items)
        return f"{e.kind}({e.n}, [{refs}], {e.value})"
    if isinstance(e, RelationExpr):
        refs = ", ".join(render_expr(t) for t in e.items)
        rows = ", ".join("(" + ", ".join(str(v) for v in row) + ")"
                         for row in e.tuples)
        return f"relation([{refs}], [{rows}])"
    if isinstance(e, ChooseExpr):
        refs = ", ".join(render_expr(t) for t in e.items)
        return f"choose({e.lo}, {e.hi}, [{refs}])"
    raise TypeError(f"unknown expression node {e!r}")
