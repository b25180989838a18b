"""Textual model language: lexer, parser, serializer.

The language is line-comment (#), whitespace-insensitive, keyword-reserved.
Parsing is total: any byte sequence yields a (possibly None) model plus a
list of diagnostics, never an exception. On a syntax fault the parser skips
ahead to the next item keyword so independent faults each get reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .model import (
    AttrDomain,
    AttributeDecl,
    BinOp,
    BoolOp,
    AllDiffExpr,
    ChooseExpr,
    Compare,
    ConstraintExpr,
    CountExpr,
    CrossDep,
    DepKind,
    DepScope,
    Diagnostic,
    Direction,
    EdgeKind,
    EnumDecl,
    Feature,
    FeatureModel,
    Goal,
    Group,
    IntLit,
    IntRange,
    MinMax,
    NameRef,
    NotOp,
    AttrRef,
    RelationExpr,
    SourceSpan,
    ValueSet,
    validate_model,
)

KEYWORDS = frozenset({
    "model", "enum", "feature", "max", "of", "mandatory", "optional",
    "attr", "in", "group", "requires", "excludes", "per", "instance",
    "constraint", "goal", "minimize", "maximize",
    "and", "or", "not", "xor", "min",
    "alldifferent", "atmost", "atleast", "exactly", "relation", "choose",
})

_PUNCT = [
    "<=>", "=>", "!=", "<=", ">=", "..",
    "(", ")", "[", "]", "{", "}", ",", ".", ":", "+", "-", "*",
    "=", "<", ">",
]

_CMP_TOKENS = {"=", "!=", "<", "<=", ">", ">="}

# each nesting level spans the whole precedence tower of stack frames
_MAX_DEPTH = 60


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "kw", punctuation text, "eof", "bad"
    text: str
    span: SourceSpan


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span(start: int, start_line: int, start_col: int, end: int) -> SourceSpan:
        return SourceSpan(start_line, start_col, start, end)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start, sl, sc = i, line, col
        if ch.isdigit():
            while i < n and text[i].isdigit():
                i += 1
            col += i - start
            toks.append(Token("int", text[start:i], span(start, sl, sc, i)))
            continue
        if ch.isalpha() or ch == "_":
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            col += i - start
            word = text[start:i]
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append(Token(kind, word, span(start, sl, sc, i)))
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                i += len(p)
                col += len(p)
                toks.append(Token(p, p, span(start, sl, sc, i)))
                break
        else:
            i += 1
            col += 1
            toks.append(Token("bad", ch, span(start, sl, sc, i)))
    toks.append(Token("eof", "", SourceSpan(line, col, n, n)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0
        self.errors: list[Diagnostic] = []
        self.depth = 0

    # -- token plumbing ----------------------------------------------------
    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def at_kw(self, *words: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text in words

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if self.pos < len(self.toks) - 1:
            self.pos += 1
        return t

    def error(self, message: str, span: Optional[SourceSpan] = None) -> None:
        self.errors.append(Diagnostic("syntax", message,
                                      span or self.peek().span))

    def expect(self, kind: str, what: str) -> Optional[Token]:
        if self.at(kind):
            return self.advance()
        got = self.peek()
        shown = got.text if got.kind != "eof" else "end of input"
        self.error(f"expected {what}, found '{shown}'", got.span)
        return None

    def expect_kw(self, word: str) -> Optional[Token]:
        if self.at_kw(word):
            return self.advance()
        got = self.peek()
        shown = got.text if got.kind != "eof" else "end of input"
        self.error(f"expected '{word}', found '{shown}'", got.span)
        return None

    def expect_ident(self, what: str) -> Optional[Token]:
        if self.at("ident"):
            return self.advance()
        got = self.peek()
        if got.kind == "kw":
            self.error(f"'{got.text}' is a reserved word and cannot name {what}",
                       got.span)
        else:
            shown = got.text if got.kind != "eof" else "end of input"
            self.error(f"expected a name for {what}, found '{shown}'", got.span)
        return None

    def expect_int(self, what: str) -> Optional[int]:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        t = self.expect("int", what)
        if t is None:
            return None
        v = int(t.text)
        return -v if neg else v

    # An item starts at one of these; used to resynchronize after a fault.
    def at_item_start(self) -> bool:
        if self.at_kw("feature", "enum", "group", "constraint",
                      "minimize", "maximize", "attr"):
            return True
        return self.at("ident") and self.peek(1).kind == "kw" and \
            self.peek(1).text in ("requires", "excludes")

    def sync(self) -> None:
        while not self.at("eof") and not self.at_item_start():
            self.advance()

    # -- grammar -----------------------------------------------------------
    def parse_model(self) -> Optional[FeatureModel]:
        if self.expect_kw("model") is None:
            return None
        name_tok = self.expect_ident("the model")
        if name_tok is None:
            return None
        features: list[Feature] = []
        enums: list[EnumDecl] = []
        groups: list[Group] = []
        deps: list[CrossDep] = []
        constraints: list[ConstraintExpr] = []
        goals: list[Goal] = []
        while not self.at("eof"):
            before = self.pos
            if self.at_kw("feature"):
                f = self.parse_feature()
                if f is not None:
                    features.append(f)
            elif self.at_kw("attr"):
                a = self.parse_attr()
                if a is not None:
                    if features:
                        f = features[-1]
                        features[-1] = Feature(f.name, f.max_count, f.parent,
                                               f.edge, f.attributes + (a,), f.span)
                    else:
                        self.error("attribute declared before any feature", a.span)
            elif self.at_kw("enum"):
                e = self.parse_enum()
                if e is not None:
                    enums.append(e)
            elif self.at_kw("group"):
                g = self.parse_group()
                if g is not None:
                    groups.append(g)
            elif self.at_kw("constraint"):
                self.advance()
                e = self.parse_expr_toplevel()
                if e is not None:
                    constraints.append(e)
            elif self.at_kw("minimize", "maximize"):
                g = self.parse_goal()
                if g is not None:
                    goals.append(g)
            elif self.at("ident"):
                d = self.parse_cross()
                if d is not None:
                    deps.append(d)
            else:
                t = self.peek()
                shown = t.text if t.kind != "eof" else "end of input"
                self.error(f"expected a declaration, found '{shown}'", t.span)
                self.advance()
                self.sync()
                continue
            if self.pos == before:  # safety: always make progress
                self.advance()
                self.sync()
        return FeatureModel(
            name=name_tok.text,
            features=tuple(features),
            enums=tuple(enums),
            groups=tuple(groups),
            cross_deps=tuple(deps),
            constraints=tuple(constraints),
            goals=tuple(goals),
        )

    def parse_feature(self) -> Optional[Feature]:
        kw = self.advance()
        name = self.expect_ident("the feature")
        if name is None:
            self.sync()
            return None
        max_count = 1
        if self.at_kw("max"):
            self.advance()
            v = self.expect_int("an occurrence bound")
            if v is None:
                self.sync()
                return None
            max_count = v
        parent = None
        edge = EdgeKind.MANDATORY
        if self.at_kw("of"):
            self.advance()
            p = self.expect_ident("the parent feature")
            if p is None:
                self.sync()
                return None
            parent = p.text
            if self.at_kw("mandatory"):
                self.advance()
            elif self.at_kw("optional"):
                self.advance()
                edge = EdgeKind.OPTIONAL
            else:
                self.error("expected 'mandatory' or 'optional' after the parent")
                self.sync()
                return None
        return Feature(name.text, max_count, parent, edge, (), kw.span)

    def parse_attr(self) -> Optional[AttributeDecl]:
        kw = self.advance()
        name = self.expect_ident("the attribute")
        if name is None or self.expect_kw("in") is None:
            self.sync()
            return None
        dom = self.parse_domain()
        if dom is None:
            self.sync()
            return None
        return AttributeDecl(name.text, dom, kw.span)

    def parse_domain(self) -> Optional[AttrDomain]:
        if self.at("["):
            self.advance()
            lo = self.expect_int("the lower bound")
            if lo is None or self.expect("..", "'..'") is None:
                return None
            hi = self.expect_int("the upper bound")
            if hi is None or self.expect("]", "']'") is None:
                return None
            return IntRange(lo, hi)
        if self.at("{"):
            self.advance()
            values: list[Union[int, str]] = []
            while True:
                v = self.parse_value()
                if v is None:
                    return None
                values.append(v)
                if self.at(","):
                    self.advance()
                    continue
                break
            if self.expect("}", "'}'") is None:
                return None
            return ValueSet(tuple(values))
        self.error("expected a domain like [0..5] or {1, 2}")
        return None

    def parse_value(self) -> Optional[Union[int, str]]:
        """Integer literal or enum code name."""
        if self.at("ident"):
            return self.advance().text
        if self.at("int") or self.at("-"):
            return self.expect_int("a value")
        self.error("expected a number or code name")
        return None

    def parse_enum(self) -> Optional[EnumDecl]:
        kw = self.advance()
        name = self.expect_ident("the enum")
        if name is None or self.expect("{", "'{'") is None:
            self.sync()
            return None
        codes: list[str] = []
        while True:
            c = self.expect_ident("an enum code")
            if c is None:
                self.sync()
                return None
            codes.append(c.text)
            if self.at(","):
                self.advance()
                continue
            break
        if self.expect("}", "'}'") is None:
            self.sync()
            return None
        return EnumDecl(name.text, tuple(codes), kw.span)

    def parse_group(self) -> Optional[Group]:
        kw = self.advance()
        if self.expect_kw("of") is None:
            self.sync()
            return None
        parent = self.expect_ident("the group parent")
        if parent is None or self.expect("[", "'['") is None:
            self.sync()
            return None
        lo = self.expect_int("the minimum cardinality")
        if lo is None or self.expect("..", "'..'") is None:
            self.sync()
            return None
        hi = self.expect_int("the maximum cardinality")
        if hi is None or self.expect("]", "']'") is None \
                or self.expect("{", "'{'") is None:
            self.sync()
            return None
        members: list[str] = []
        while True:
            m = self.expect_ident("a group member")
            if m is None:
                self.sync()
                return None
            members.append(m.text)
            if self.at(","):
                self.advance()
                continue
            break
        if self.expect("}", "'}'") is None:
            self.sync()
            return None
        return Group(parent.text, tuple(members), lo, hi, kw.span)

    def parse_cross(self) -> Optional[CrossDep]:
        src = self.advance()
        if self.at_kw("requires"):
            kind = DepKind.REQUIRES
        elif self.at_kw("excludes"):
            kind = DepKind.EXCLUDES
        else:
            self.error("expected 'requires' or 'excludes'")
            self.sync()
            return None
        self.advance()
        dst = self.expect_ident("the required feature"
                                if kind is DepKind.REQUIRES
                                else "the excluded feature")
        if dst is None:
            self.sync()
            return None
        scope = DepScope.PRESENCE
        offset = 0
        if self.at_kw("per"):
            self.advance()
            if self.expect_kw("instance") is None:
                self.sync()
                return None
            scope = DepScope.PER_INSTANCE
            if self.at("+"):
                self.advance()
                v = self.expect_int("the offset")
                if v is None:
                    self.sync()
                    return None
                offset = v
        return CrossDep(kind, src.text, dst.text, scope, offset, src.span)

    def parse_goal(self) -> Optional[Goal]:
        kw = self.advance()
        direction = Direction.MINIMIZE if kw.text == "minimize" else Direction.MAXIMIZE
        if self.expect_kw("goal") is None:
            self.sync()
            return None
        name = self.expect_ident("the goal")
        if name is None or self.expect(":", "':'") is None:
            self.sync()
            return None
        e = self.parse_expr_toplevel()
        if e is None:
            return None
        return Goal(direction, name.text, e, kw.span)

    # -- expressions -------------------------------------------------------
    def parse_expr_toplevel(self) -> Optional[ConstraintExpr]:
        e = self.parse_iff()
        if e is None:
            self.sync()
        return e

    def parse_iff(self) -> Optional[ConstraintExpr]:
        e = self.parse_implies()
        while e is not None and self.at("<=>"):
            op = self.advance()
            rhs = self.parse_implies()
            if rhs is None:
                return None
            e = BoolOp("iff", (e, rhs), op.span)
        return e

    def parse_implies(self) -> Optional[ConstraintExpr]:
        e = self.parse_xor()
        if e is not None and self.at("=>"):
            op = self.advance()
            rhs = self.parse_implies()  # right-assoc
            if rhs is None:
                return None
            return BoolOp("implies", (e, rhs), op.span)
        return e

    def parse_xor(self) -> Optional[ConstraintExpr]:
        e = self.parse_or()
        while e is not None and self.at_kw("xor"):
            op = self.advance()
            rhs = self.parse_or()
            if rhs is None:
                return None
            e = BoolOp("xor", (e, rhs), op.span)
        return e

    def parse_or(self) -> Optional[ConstraintExpr]:
        e = self.parse_and()
        if e is None or not self.at_kw("or"):
            return e
        items = [e]
        span = self.peek().span
        while self.at_kw("or"):
            self.advance()
            t = self.parse_and()
            if t is None:
                return None
            items.append(t)
        return BoolOp("or", tuple(items), span)

    def parse_and(self) -> Optional[ConstraintExpr]:
        e = self.parse_not()
        if e is None or not self.at_kw("and"):
            return e
        items = [e]
        span = self.peek().span
        while self.at_kw("and"):
            self.advance()
            t = self.parse_not()
            if t is None:
                return None
            items.append(t)
        return BoolOp("and", tuple(items), span)

    def parse_not(self) -> Optional[ConstraintExpr]:
        if self.at_kw("not"):
            kw = self.advance()
            e = self.parse_not()
            if e is None:
                return None
            return NotOp(e, kw.span)
        return self.parse_cmp()

    def parse_cmp(self) -> Optional[ConstraintExpr]:
        e = self.parse_add()
        if e is None:
            return None
        t = self.peek()
        if t.kind in _CMP_TOKENS:
            self.advance()
            rhs = self.parse_add()
            if rhs is None:
                return None
            return Compare(t.text, e, rhs, t.span)
        return e

    def parse_add(self) -> Optional[ConstraintExpr]:
        e = self.parse_mul()
        while e is not None and (self.at("+") or self.at("-")):
            op = self.advance()
            rhs = self.parse_mul()
            if rhs is None:
                return None
            e = BinOp(op.text, e, rhs, op.span)
        return e

    def parse_mul(self) -> Optional[ConstraintExpr]:
        e = self.parse_primary()
        while e is not None and self.at("*"):
            op = self.advance()
            rhs = self.parse_primary()
            if rhs is None:
                return None
            e = BinOp("*", e, rhs, op.span)
        return e

    def parse_primary(self) -> Optional[ConstraintExpr]:
        if self.depth >= _MAX_DEPTH:
            self.error("expression nested too deeply")
            self.advance()
            return None
        self.depth += 1
        try:
            return self._primary()
        finally:
            self.depth -= 1

    def _primary(self) -> Optional[ConstraintExpr]:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return IntLit(int(t.text), t.span)
        if t.kind == "-":
            self.advance()
            v = self.expect("int", "a number after '-'")
            if v is None:
                return None
            return IntLit(-int(v.text), t.span)
        if t.kind == "ident":
            self.advance()
            if self.at("."):
                self.advance()
                attr = self.expect_ident("the attribute")
                if attr is None:
                    return None
                return AttrRef(t.text, attr.text, t.span)
            return NameRef(t.text, t.span)
        if t.kind == "kw" and t.text in ("min", "max"):
            self.advance()
            items = self.paren_list("a value")
            if items is None:
                return None
            if not items:
                self.error(f"{t.text}() needs at least one argument", t.span)
                return None
            return MinMax(t.text, tuple(items), t.span)
        if t.kind == "kw" and t.text == "alldifferent":
            self.advance()
            items = self.paren_list("a reference")
            if items is None:
                return None
            return AllDiffExpr(tuple(items), t.span)
        if t.kind == "kw" and t.text in ("atmost", "atleast", "exactly"):
            return self.parse_count(t)
        if t.kind == "kw" and t.text == "relation":
            return self.parse_relation(t)
        if t.kind == "kw" and t.text == "choose":
            return self.parse_choose(t)
        if t.kind == "(":
            self.advance()
            e = self.parse_iff()
            if e is None or self.expect(")", "')'") is None:
                return None
            return e
        shown = t.text if t.kind != "eof" else "end of input"
        self.error(f"expected an expression, found '{shown}'", t.span)
        return None

    def paren_list(self, what: str) -> Optional[list[ConstraintExpr]]:
        if self.expect("(", "'('") is None:
            return None
        items: list[ConstraintExpr] = []
        if self.at(")"):
            self.advance()
            return items
        while True:
            e = self.parse_add()
            if e is None:
                return None
            items.append(e)
            if self.at(","):
                self.advance()
                continue
            break
        if self.expect(")", "')'") is None:
            return None
        return items

    def bracket_refs(self) -> Optional[list[ConstraintExpr]]:
        if self.expect("[", "'['") is None:
            return None
        items: list[ConstraintExpr] = []
        while True:
            e = self.parse_add()
            if e is None:
                return None
            items.append(e)
            if self.at(","):
                self.advance()
                continue
            break
        if self.expect("]", "']'") is None:
            return None
        return items

    def parse_count(self, t: Token) -> Optional[ConstraintExpr]:
        self.advance()
        if self.expect("(", "'('") is None:
            return None
        n = self.expect_int("the count bound")
        if n is None or self.expect(",", "','") is None:
            return None
        items = self.bracket_refs()
        if items is None or self.expect(",", "','") is None:
            return None
        value = self.parse_value()
        if value is None or self.expect(")", "')'") is None:
            return None
        return CountExpr(t.text, n, tuple(items), value, t.span)

    def parse_relation(self, t: Token) -> Optional[ConstraintExpr]:
        self.advance()
        if self.expect("(", "'('") is None:
            return None
        items = self.bracket_refs()
        if items is None or self.expect(",", "','") is None:
            return None
        if self.expect("[", "'['") is None:
            return None
        rows: list[tuple[Union[int, str], ...]] = []
        while True:
            if self.expect("(", "'('") is None:
                return None
            row: list[Union[int, str]] = []
            while True:
                v = self.parse_value()
                if v is None:
                    return None
                row.append(v)
                if self.at(","):
                    self.advance()
                    continue
                break
            if self.expect(")", "')'") is None:
                return None
            rows.append(tuple(row))
            if self.at(","):
                self.advance()
                continue
            break
        if self.expect("]", "']'") is None or self.expect(")", "')'") is None:
            return None
        return RelationExpr(tuple(items), tuple(rows), t.span)

    def parse_choose(self, t: Token) -> Optional[ConstraintExpr]:
        self.advance()
        if self.expect("(", "'('") is None:
            return None
        lo = self.expect_int("the minimum")
        if lo is None or self.expect(",", "','") is None:
            return None
        hi = self.expect_int("the maximum")
        if hi is None or self.expect(",", "','") is None:
            return None
        items = self.bracket_refs()
        if items is None or self.expect(")", "')'") is None:
            return None
        return ChooseExpr(lo, hi, tuple(items), t.span)


def parse(text: str) -> tuple[Optional[FeatureModel], list[Diagnostic]]:
    """Parse model text. Diagnostics cover syntax faults and, when the text
    parses, every structural violation found by validation."""
    p = _Parser(text)
    m = p.parse_model()
    if p.errors:
        return None, p.errors
    assert m is not None
    return m, validate_model(m)


def parse_expr(text: str) -> tuple[Optional[ConstraintExpr], list[Diagnostic]]:
    """Parse a single constraint expression (for interactive use)."""
    p = _Parser(text)
    e = p.parse_iff()
    if e is not None and not p.at("eof"):
        p.error(f"unexpected '{p.peek().text}' after the expression")
    if p.errors:
        return None, p.errors
    return e, []


# ---------------------------------------------------------------------------
# Serialization

from .model import render_expr  # noqa: E402  (shared canonical renderer)


def _fmt_value(v: Union[int, str]) -> str:
    return str(v)


def serialize(m: FeatureModel) -> str:
    """Canonical text form. parse(serialize(m)) is structurally equal to m
    for any model that validates."""
    out: list[str] = [f"model {m.name}", ""]
    for e in m.enums:
        out.append(f"enum {e.name} {{ {', '.join(e.codes)} }}")
    if m.enums:
        out.append("")
    for f in m.features:
        line = f"feature {f.name}"
        if f.max_count != 1:
            line += f" max {f.max_count}"
        if f.parent is not None:
            line += f" of {f.parent} {f.edge.value}"
        out.append(line)
        for a in f.attributes:
            if isinstance(a.domain, IntRange):
                dom = f"[{a.domain.lo}..{a.domain.hi}]"
            else:
                dom = "{" + ", ".join(_fmt_value(v) for v in a.domain.values) + "}"
            out.append(f"  attr {a.name} in {dom}")
    for g in m.groups:
        members = ", ".join(g.members)
        out.append(f"group of {g.parent} [{g.lo}..{g.hi}] {{ {members} }}")
    for d in m.cross_deps:
        line = f"{d.source} {d.kind.value} {d.target}"
        if d.scope is DepScope.PER_INSTANCE:
            line += " per instance"
            if d.offset:
                line += f" +{d.offset}"
        out.append(line)
    for c in m.constraints:
        out.append(f"constraint {render_expr(c)}")
    for g in m.goals:
        out.append(f"{g.direction.value} goal {g.name}: {render_expr(g.expr)}")
    return "\n".join(out) + "\n"
