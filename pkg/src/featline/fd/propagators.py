"""Filtering rules, one per constraint family.

Arithmetic comparisons use bounds reasoning over the expression tree: a
forward pass computes the range of each node, a backward pass projects the
required range onto the leaves. Element and Table filter per value, the
counting and pairwise-distinct rules fire when enough variables are decided.
Every rule only removes values, never invents them, so filtering is sound and
checking at a ground assignment is complete.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

from .domain import IntervalSet
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
    WeightedSum,
    Xor,
    check_i64,
    negate,
)

if TYPE_CHECKING:
    from .store import Store


def _ceildiv(a: int, b: int) -> int:
    return -((-a) // b)


def expr_bounds(e: NumExpr, store: "Store") -> tuple[int, int]:
    """Forward interval of an expression under current domains."""
    if isinstance(e, Const):
        return e.value, e.value
    if isinstance(e, Var):
        d = store.dom(e.ref.index)
        return d.min(), d.max()
    if isinstance(e, WeightedSum):
        lo = hi = e.offset
        for c, t in zip(e.coeffs, e.terms):
            tlo, thi = expr_bounds(t, store)
            if c >= 0:
                lo += c * tlo
                hi += c * thi
            else:
                lo += c * thi
                hi += c * tlo
        return check_i64(lo), check_i64(hi)
    if isinstance(e, Product):
        alo, ahi = expr_bounds(e.a, store)
        blo, bhi = expr_bounds(e.b, store)
        corners = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
        return check_i64(min(corners)), check_i64(max(corners))
    if isinstance(e, MinOf):
        bs = [expr_bounds(t, store) for t in e.items]
        return min(b[0] for b in bs), min(b[1] for b in bs)
    if isinstance(e, MaxOf):
        bs = [expr_bounds(t, store) for t in e.items]
        return max(b[0] for b in bs), max(b[1] for b in bs)
    raise TypeError(f"unknown expression node {e!r}")


def _div_hull(zlo: int, zhi: int, ylo: int, yhi: int) -> Optional[tuple[int, int]]:
    """Bounds for x in x*y within [zlo, zhi], y within [ylo, yhi].

    None means no pruning is possible (y may be 0 while 0 is allowed for the
    product). An inverted pair means no x is feasible.
    """
    if ylo <= 0 <= yhi and zlo <= 0 <= zhi:
        return None
    parts = []
    if yhi >= 1:
        c, d = max(ylo, 1), yhi
        lo = _ceildiv(zlo, d) if zlo >= 0 else _ceildiv(zlo, c)
        hi = zhi // c if zhi >= 0 else zhi // d
        if lo <= hi:
            parts.append((lo, hi))
    if ylo <= -1:
        # Substitute y' = -y: then x * y' lies in [-zhi, -zlo] with y' >= 1,
        # and the bounds for x carry over unchanged.
        c2, d2 = -min(yhi, -1), -ylo
        zl, zh = -zhi, -zlo
        lo = _ceildiv(zl, d2) if zl >= 0 else _ceildiv(zl, c2)
        hi = zh // c2 if zh >= 0 else zh // d2
        if lo <= hi:
            parts.append((lo, hi))
    if not parts:
        return (1, 0)
    return min(p[0] for p in parts), max(p[1] for p in parts)


def narrow_expr(e: NumExpr, lo: int, hi: int, store: "Store") -> bool:
    """Backward pass: restrict the expression's value to [lo, hi]."""
    elo, ehi = expr_bounds(e, store)
    lo, hi = max(lo, elo), min(hi, ehi)
    if lo > hi:
        return store.signal_infeasible(e)
    if isinstance(e, Const):
        return True
    if isinstance(e, Var):
        return store.narrow_bounds(e.ref.index, lo, hi)
    if isinstance(e, WeightedSum):
        contribs = []
        for c, t in zip(e.coeffs, e.terms):
            tlo, thi = expr_bounds(t, store)
            if c >= 0:
                contribs.append((c * tlo, c * thi))
            else:
                contribs.append((c * thi, c * tlo))
        total_lo = e.offset + sum(c[0] for c in contribs)
        total_hi = e.offset + sum(c[1] for c in contribs)
        for (c, t), (clo, chi) in zip(zip(e.coeffs, e.terms), contribs):
            others_lo = total_lo - clo
            others_hi = total_hi - chi
            a, b = lo - others_hi, hi - others_lo
            if c > 0:
                tlo, thi = _ceildiv(a, c), b // c
            elif c < 0:
                tlo, thi = _ceildiv(b, c), a // c
            else:
                if a > 0 or b < 0:
                    return store.signal_infeasible(t)
                continue
            if not narrow_expr(t, tlo, thi, store):
                return False
        return True
    if isinstance(e, Product):
        for x, y in ((e.a, e.b), (e.b, e.a)):
            ylo, yhi = expr_bounds(y, store)
            hull = _div_hull(lo, hi, ylo, yhi)
            if hull is None:
                continue
            xlo, xhi = hull
            if xlo > xhi:
                return store.signal_infeasible(x)
            if not narrow_expr(x, check_i64(xlo), check_i64(xhi), store):
                return False
        return True
    if isinstance(e, MinOf):
        for t in e.items:
            _, thi = expr_bounds(t, store)
            if not narrow_expr(t, lo, thi, store):
                return False
        witnesses = []
        for t in e.items:
            tlo, _ = expr_bounds(t, store)
            if tlo <= hi:
                witnesses.append(t)
        if not witnesses:
            return store.signal_infeasible(e)
        if len(witnesses) == 1:
            t = witnesses[0]
            tlo, _ = expr_bounds(t, store)
            return narrow_expr(t, tlo, hi, store)
        return True
    if isinstance(e, MaxOf):
        for t in e.items:
            tlo, _ = expr_bounds(t, store)
            if not narrow_expr(t, tlo, hi, store):
                return False
        witnesses = []
        for t in e.items:
            _, thi = expr_bounds(t, store)
            if thi >= lo:
                witnesses.append(t)
        if not witnesses:
            return store.signal_infeasible(e)
        if len(witnesses) == 1:
            t = witnesses[0]
            _, thi = expr_bounds(t, store)
            return narrow_expr(t, lo, thi, store)
        return True
    raise TypeError(f"unknown expression node {e!r}")


def filter_cmp(c: Cmp, store: "Store") -> bool:
    llo, lhi = expr_bounds(c.lhs, store)
    rlo, rhi = expr_bounds(c.rhs, store)
    op = c.op
    if op == "=":
        lo, hi = max(llo, rlo), min(lhi, rhi)
        if lo > hi:
            return store.signal_infeasible(c.lhs)
        return narrow_expr(c.lhs, lo, hi, store) and narrow_expr(c.rhs, lo, hi, store)
    if op == "!=":
        # Weak on purpose: prune only once one side is a fixed value.
        if llo == lhi and rlo == rhi:
            return llo != rlo or store.signal_infeasible(c.lhs)
        if llo == lhi and isinstance(c.rhs, Var):
            return store.narrow_set(c.rhs.ref.index, store.dom(c.rhs.ref.index).remove_value(llo))
        if rlo == rhi and isinstance(c.lhs, Var):
            return store.narrow_set(c.lhs.ref.index, store.dom(c.lhs.ref.index).remove_value(rlo))
        return True
    if op == "<":
        if llo >= rhi:
            return store.signal_infeasible(c.lhs)
        return narrow_expr(c.lhs, llo, rhi - 1, store) and narrow_expr(c.rhs, llo + 1, rhi, store)
    if op == "<=":
        if llo > rhi:
            return store.signal_infeasible(c.lhs)
        return narrow_expr(c.lhs, llo, rhi, store) and narrow_expr(c.rhs, llo, rhi, store)
    if op == ">":
        if rlo >= lhi:
            return store.signal_infeasible(c.lhs)
        return narrow_expr(c.rhs, rlo, lhi - 1, store) and narrow_expr(c.lhs, rlo + 1, lhi, store)
    # ">="
    if rlo > lhi:
        return store.signal_infeasible(c.lhs)
    return narrow_expr(c.rhs, rlo, lhi, store) and narrow_expr(c.lhs, rlo, lhi, store)


def filter_element(c: Element, store: "Store") -> bool:
    n = len(c.values)
    di = store.dom(c.index.index).clamp(1, n)
    dr = store.dom(c.result.index)
    keep = [i for i in di.values() if c.values[i - 1] in dr]
    if not keep:
        return store.narrow_set(c.index.index, IntervalSet.empty())
    if not store.narrow_set(c.index.index, IntervalSet.from_values(keep)):
        return False
    reachable = {c.values[i - 1] for i in keep}
    return store.narrow_set(c.result.index, IntervalSet.from_values(reachable))


def filter_table(c: Table, store: "Store") -> bool:
    if not c.vars:
        if c.tuples:
            return True
        return store.mark_failed(None)
    doms = [store.dom(v.index) for v in c.vars]
    live = [row for row in c.tuples if all(x in d for x, d in zip(row, doms))]
    if not live:
        return store.narrow_set(c.vars[0].index, IntervalSet.empty())
    for k, ref in enumerate(c.vars):
        if not store.narrow_set(ref.index, IntervalSet.from_values(row[k] for row in live)):
            return False
    return True


def filter_alldifferent(c: AllDifferent, store: "Store") -> bool:
    doms = [store.dom(v.index) for v in c.vars]
    fixed: dict[int, int] = {}
    for i, d in enumerate(doms):
        if d.is_singleton():
            v = d.value()
            if v in fixed:
                return store.mark_failed(c.vars[i].index)
            fixed[v] = i
    if not fixed:
        return True
    for ref, d in zip(c.vars, doms):
        if d.is_singleton():
            continue
        nd = d.remove_values(v for v in fixed if v in d)
        if nd is not d and not store.narrow_set(ref.index, nd):
            return False
    return True


def filter_count(c: Count, store: "Store") -> bool:
    doms = [store.dom(v.index) for v in c.vars]
    if c.op in ("<=", "="):
        decided = sum(1 for d in doms if d.is_singleton() and d.value() == c.value)
        if decided > c.n:
            return store.mark_failed(None)
        if decided == c.n:
            for ref, d in zip(c.vars, doms):
                if not d.is_singleton() and c.value in d:
                    if not store.narrow_set(ref.index, d.remove_value(c.value)):
                        return False
    if c.op in (">=", "="):
        doms = [store.dom(v.index) for v in c.vars]
        possible = sum(1 for d in doms if c.value in d)
        if possible < c.n:
            return store.mark_failed(None)
        if possible == c.n:
            for ref, d in zip(c.vars, doms):
                if c.value in d and not d.is_singleton():
                    if not store.narrow_set(ref.index, IntervalSet.point(c.value)):
                        return False
    return True


def entail_cmp(c: Cmp, store: "Store") -> Optional[bool]:
    """Three-valued truth by bounds. None means undecided."""
    llo, lhi = expr_bounds(c.lhs, store)
    rlo, rhi = expr_bounds(c.rhs, store)
    op = c.op
    if op == "=":
        if llo == lhi == rlo == rhi:
            return True
        if lhi < rlo or rhi < llo:
            return False
        return None
    if op == "!=":
        if lhi < rlo or rhi < llo:
            return True
        if llo == lhi == rlo == rhi:
            return False
        return None
    if op == "<":
        if lhi < rlo:
            return True
        if llo >= rhi:
            return False
        return None
    if op == "<=":
        if lhi <= rlo:
            return True
        if llo > rhi:
            return False
        return None
    if op == ">":
        if llo > rhi:
            return True
        if lhi <= rlo:
            return False
        return None
    # ">="
    if llo >= rhi:
        return True
    if lhi < rlo:
        return False
    return None


def entail_form(f: BoolForm, store: "Store") -> Optional[bool]:
    if isinstance(f, Atom):
        return entail_cmp(f.cmp, store)
    if isinstance(f, And):
        out: Optional[bool] = True
        for g in f.items:
            e = entail_form(g, store)
            if e is False:
                return False
            if e is None:
                out = None
        return out
    if isinstance(f, Or):
        out: Optional[bool] = False
        for g in f.items:
            e = entail_form(g, store)
            if e is True:
                return True
            if e is None:
                out = None
        return out
    if isinstance(f, Not):
        e = entail_form(f.item, store)
        return None if e is None else not e
    if isinstance(f, Implies):
        return entail_form(Or((negate(f.a), f.b)), store)
    if isinstance(f, (Iff, Xor)):
        ea = entail_form(f.a, store)
        eb = entail_form(f.b, store)
        if ea is None or eb is None:
            return None
        same = ea == eb
        return same if isinstance(f, Iff) else not same
    raise TypeError(f"unknown formula node {f!r}")


def enforce_form(f: BoolForm, store: "Store") -> bool:
    """Apply the filtering of a formula known to hold."""
    if isinstance(f, Atom):
        return filter_cmp(f.cmp, store)
    if isinstance(f, And):
        for g in f.items:
            if not enforce_form(g, store):
                return False
        return True
    if isinstance(f, Or):
        undecided = []
        for g in f.items:
            e = entail_form(g, store)
            if e is True:
                return True
            if e is None:
                undecided.append(g)
        if not undecided:
            return store.mark_failed(None)
        if len(undecided) == 1:
            return enforce_form(undecided[0], store)
        return True
    if isinstance(f, Not):
        return enforce_form(negate(f.item), store)
    if isinstance(f, Implies):
        return enforce_form(Or((negate(f.a), f.b)), store)
    if isinstance(f, Iff):
        ea = entail_form(f.a, store)
        if ea is not None:
            return enforce_form(f.b if ea else negate(f.b), store)
        eb = entail_form(f.b, store)
        if eb is not None:
            return enforce_form(f.a if eb else negate(f.a), store)
        return True
    if isinstance(f, Xor):
        return enforce_form(Iff(f.a, negate(f.b)), store)
    raise TypeError(f"unknown formula node {f!r}")


def filter_reified(c: Reified, store: "Store") -> bool:
    # The truth variable is implicitly boolean.
    if not store.narrow_bounds(c.b.index, 0, 1):
        return False
    db = store.dom(c.b.index)
    if db.is_singleton():
        form = c.form if db.value() == 1 else negate(c.form)
        return enforce_form(form, store)
    e = entail_form(c.form, store)
    if e is True:
        return store.narrow_bounds(c.b.index, 1, 1)
    if e is False:
        return store.narrow_bounds(c.b.index, 0, 0)
    return True


def run_filter(c: Constraint, store: "Store") -> bool:
    if isinstance(c, Cmp):
        return filter_cmp(c, store)
    if isinstance(c, Element):
        return filter_element(c, store)
    if isinstance(c, Table):
        return filter_table(c, store)
    if isinstance(c, AllDifferent):
        return filter_alldifferent(c, store)
    if isinstance(c, Count):
        return filter_count(c, store)
    if isinstance(c, Reified):
        return filter_reified(c, store)
    raise TypeError(f"unknown constraint {c!r}")
