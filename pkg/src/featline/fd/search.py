"""Depth-first search over a store: enumeration, counting, optimization.

Branching assigns one value at a time under a fresh level and undoes it by
popping, so backtracking is chronological and the store is restored exactly.
All orderings are deterministic. Optimization keeps a single search tree and
tightens the objective bound strictly after each incumbent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from ..errors import OutOfRangeError, UnsatisfiableError
from .domain import IntervalSet
from .expr import Cmp, Const, NumExpr
from .propagators import expr_bounds, filter_cmp
from .store import Solution, Store


class VarOrder(enum.Enum):
    DECLARATION = "declaration"
    FIRST_FAIL = "first-fail"


class ValueOrder(enum.Enum):
    ASCENDING = "ascending"
    DESCENDING = "descending"


@dataclass(frozen=True)
class Strategy:
    var_order: VarOrder = VarOrder.DECLARATION
    value_order: ValueOrder = ValueOrder.ASCENDING

    @classmethod
    def named(cls, var_order: str, value_order: str) -> "Strategy":
        return cls(VarOrder(var_order), ValueOrder(value_order))


class SearchStopped(Exception):
    """Raised inside the tree walk when a stop callback fires."""


def _pick(store: Store, strategy: Strategy) -> Optional[int]:
    if strategy.var_order is VarOrder.DECLARATION:
        for i in range(store.num_vars):
            if not store.dom(i).is_singleton():
                return i
        return None
    best = None
    best_size = None
    for i in range(store.num_vars):
        d = store.dom(i)
        if d.is_singleton():
            continue
        size = d.size()
        if best_size is None or size < best_size:
            best, best_size = i, size
    return best


def _first_value(dom: IntervalSet, strategy: Strategy) -> int:
    if strategy.value_order is ValueOrder.DESCENDING:
        return dom.max()
    return dom.min()


def _next_value(dom: IntervalSet, strategy: Strategy, prev: int) -> Optional[int]:
    """Successor of prev in branch order, read off the current domain, so a
    domain wider than memory is walked lazily and one a bound has shrunk is
    never enumerated point by point."""
    if strategy.value_order is ValueOrder.ASCENDING:
        for lo, hi in dom.intervals:
            if hi > prev:
                return lo if lo > prev else prev + 1
        return None
    for lo, hi in reversed(dom.intervals):
        if lo < prev:
            return hi if hi < prev else prev - 1
    return None


def _dfs(store: Store, strategy: Strategy, should_stop: Optional[Callable[[], bool]]) -> Iterator[Solution]:
    def rec() -> Iterator[Solution]:
        if should_stop is not None and should_stop():
            raise SearchStopped
        vi = _pick(store, strategy)
        if vi is None:
            yield store.snapshot_solution()
            return
        val: Optional[int] = _first_value(store.dom(vi), strategy)
        while val is not None:
            lvl = store.push_level()
            try:
                if store.narrow_set(vi, IntervalSet.point(val)) and store.propagate():
                    yield from rec()
            finally:
                store.pop_to(lvl)
            val = _next_value(store.dom(vi), strategy, val)

    if not store.is_failed:
        yield from rec()


class Search:
    """Resumable enumeration. Between next() calls the store sits mid-tree;
    exhausting or closing the search restores it."""

    def __init__(self, store: Store, strategy: Strategy = Strategy(),
                 should_stop: Optional[Callable[[], bool]] = None) -> None:
        self._store = store
        self._gen = _dfs(store, strategy, should_stop)
        self._done = False
        self.stopped = False

    def next(self) -> Optional[Solution]:
        if self._done:
            return None
        with self._store.frozen_epoch():
            try:
                sol = next(self._gen, None)
            except SearchStopped:
                self.stopped = True
                self._gen.close()
                sol = None
        if sol is None:
            self._done = True
        return sol

    def close(self) -> None:
        if not self._done:
            with self._store.frozen_epoch():
                self._gen.close()
            self._done = True

    def __iter__(self) -> Iterator[Solution]:
        while True:
            sol = self.next()
            if sol is None:
                return
            yield sol


@dataclass
class _SolveState:
    strategy: Strategy
    returned: int
    epoch: int


def solve_next(store: Store, strategy: Strategy = Strategy()) -> Optional[Solution]:
    """Next solution in strategy order, None once exhausted.

    The walk is deterministic, so the already-returned prefix is skipped on
    each call and the store is left exactly as it was found. Posting,
    restricting, or popping between calls starts the enumeration over.
    """
    state = getattr(store, "_solve_state", None)
    if state is None or state.strategy != strategy or state.epoch != store.epoch:
        state = _SolveState(strategy, 0, store.epoch)
        store._solve_state = state
    search = Search(store, strategy)
    try:
        sol = None
        for _ in range(state.returned + 1):
            sol = search.next()
            if sol is None:
                break
    finally:
        search.close()
    if sol is not None:
        state.returned += 1
    state.epoch = store.epoch
    return sol


def count_solutions(store: Store, cap: int, strategy: Strategy = Strategy(),
                    should_stop: Optional[Callable[[], bool]] = None) -> tuple[int, bool]:
    """(count, exact). Counting stops at cap; exact only when the tree was
    exhausted."""
    if cap < 1:
        raise OutOfRangeError("cap must be at least 1")
    search = Search(store, strategy, should_stop)
    count = 0
    exact = True
    try:
        while True:
            sol = search.next()
            if sol is None:
                exact = not search.stopped
                break
            count += 1
            if count >= cap:
                if search.next() is not None:
                    exact = False
                break
    finally:
        search.close()
    return count, exact


@dataclass
class OptimizeResult:
    solution: Optional[Solution]
    value: Optional[int]
    proven: bool


def optimize(store: Store, objective: NumExpr, direction: str,
             strategy: Strategy = Strategy(),
             should_stop: Optional[Callable[[], bool]] = None) -> OptimizeResult:
    """Best solution under the objective; raises when none exists.

    After each incumbent with value v the remaining tree must satisfy
    objective < v (minimize) or > v (maximize), enforced by filtering at
    every node, so the returned incumbent is a proven optimum on exhaustion.
    """
    if direction not in ("min", "max"):
        raise OutOfRangeError(f"direction must be 'min' or 'max', got {direction!r}")
    if store.is_failed:
        raise UnsatisfiableError("store is already inconsistent")

    best_sol: Optional[Solution] = None
    best_val: Optional[int] = None
    stopped = False

    def bound_ok() -> bool:
        if best_val is None:
            return True
        if direction == "min":
            probe = Cmp(objective, "<=", Const(best_val - 1))
        else:
            probe = Cmp(objective, ">=", Const(best_val + 1))
        return filter_cmp(probe, store) and store.propagate()

    def rec() -> None:
        nonlocal best_sol, best_val, stopped
        if should_stop is not None and should_stop():
            stopped = True
            return
        if not bound_ok():
            return
        vi = _pick(store, strategy)
        if vi is None:
            lo, hi = expr_bounds(objective, store)
            assert lo == hi
            better = (best_val is None
                      or (lo < best_val if direction == "min" else lo > best_val))
            if better:
                best_sol = store.snapshot_solution()
                best_val = lo
            return
        val: Optional[int] = _first_value(store.dom(vi), strategy)
        while val is not None:
            if stopped:
                return
            lvl = store.push_level()
            try:
                if store.narrow_set(vi, IntervalSet.point(val)) and store.propagate():
                    rec()
            finally:
                store.pop_to(lvl)
            # a new incumbent tightens the bound at this node too; cutting
            # here keeps huge domains from being walked value by value
            if not bound_ok():
                return
            val = _next_value(store.dom(vi), strategy, val)

    with store.frozen_epoch():
        base = store.push_level()
        try:
            rec()
        finally:
            store.pop_to(base)

    if best_sol is None:
        if stopped:
            return OptimizeResult(None, None, False)
        raise UnsatisfiableError("no solution satisfies the store")
    return OptimizeResult(best_sol, best_val, not stopped)
