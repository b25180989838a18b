"""Constraint store: variables, posted constraints, propagation to fixpoint.

Narrowing is trailed so that levels opened with push_level can be abandoned
with pop_to, restoring domains bit for bit and retracting any constraints
posted above the target level. A FIFO queue over constraint indices drives
propagation; a constraint sits in the queue at most once at a time, which
keeps fixpoints deterministic.
"""

from __future__ import annotations

import enum
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from ..errors import EmptyDomainError, FeatlineError, UnknownLevelError
from .domain import INT64_MAX, INT64_MIN, IntervalSet
from .expr import Constraint, Var, VarRef, constraint_vars, render_constraint
from .propagators import run_filter


class Status(enum.Enum):
    CONSISTENT = "consistent"
    FAILED = "failed"


@dataclass(frozen=True)
class Solution:
    """A total assignment, one value per variable in declaration order."""

    values: tuple[int, ...]

    def __getitem__(self, ref: Union[VarRef, int]) -> int:
        return self.values[ref.index if isinstance(ref, VarRef) else ref]


DomainLike = Union[IntervalSet, tuple, Iterable[int]]


def _as_domain(domain: DomainLike) -> IntervalSet:
    if isinstance(domain, IntervalSet):
        return domain
    if isinstance(domain, tuple) and len(domain) == 2 and all(isinstance(x, int) for x in domain):
        return IntervalSet.range(domain[0], domain[1])
    return IntervalSet.from_values(domain)


class Store:
    def __init__(self) -> None:
        self._domains: list[IntervalSet] = []
        self._names: list[str] = []
        self._originals: list[IntervalSet] = []
        # label of whatever last narrowed each variable, trailed in lockstep
        # with the domains so conflict reports stay exact across pops
        self._narrower: list[Optional[str]] = []
        self._constraints: list[Constraint] = []
        self._labels: list[str] = []
        self._subs: list[list[int]] = []
        self._trail: list[tuple[int, IntervalSet, Optional[str]]] = []
        self._open_levels: list[tuple[int, int, int]] = []
        self._next_level = 0
        self._queue: deque[int] = deque()
        self._pending: set[int] = set()
        self.status = Status.CONSISTENT
        # (label of the responsible constraint or action, index of the emptied
        # variable) recorded at the moment of failure.
        self.last_failure: Optional[tuple[Optional[str], Optional[int]]] = None
        self._active: Optional[int] = None
        self._active_label: Optional[str] = None
        self._epoch = 0
        self._epoch_holds = 0

    # -- variables ---------------------------------------------------------

    def new_var(self, domain: DomainLike, name: str = "") -> VarRef:
        ivs = _as_domain(domain)
        if ivs.is_empty():
            raise EmptyDomainError(f"variable {name or len(self._domains)} has no values")
        if ivs.min() < INT64_MIN or ivs.max() > INT64_MAX:
            raise EmptyDomainError("domain values must fit in 64-bit signed range")
        index = len(self._domains)
        ref = VarRef(index, name or f"v{index}")
        self._domains.append(ivs)
        self._originals.append(ivs)
        self._names.append(ref.name)
        self._narrower.append(None)
        self._subs.append([])
        return ref

    @property
    def num_vars(self) -> int:
        return len(self._domains)

    def dom(self, index: int) -> IntervalSet:
        return self._domains[index]

    def original_dom(self, index: int) -> IntervalSet:
        return self._originals[index]

    def var_name(self, index: int) -> str:
        return self._names[index]

    def narrowed_by(self, index: int) -> Optional[str]:
        """Label of the constraint or action that last narrowed a variable,
        None if it still has its declared domain."""
        return self._narrower[index]

    @property
    def is_failed(self) -> bool:
        return self.status is Status.FAILED

    # -- narrowing (called by propagators) ----------------------------------

    def narrow_set(self, index: int, allowed: IntervalSet) -> bool:
        """Intersect a domain with an allowed set; False and fail on wipeout."""
        cur = self._domains[index]
        nd = cur.intersect(allowed)
        if nd == cur:
            return True
        if nd.is_empty():
            return self.mark_failed(index)
        self._trail.append((index, cur, self._narrower[index]))
        self._domains[index] = nd
        if self._active is not None:
            self._narrower[index] = self._labels[self._active]
        else:
            self._narrower[index] = self._active_label
        for ci in self._subs[index]:
            if ci not in self._pending:
                self._pending.add(ci)
                self._queue.append(ci)
        return True

    def narrow_bounds(self, index: int, lo: int, hi: int) -> bool:
        if lo > hi:
            return self.mark_failed(index)
        cur = self._domains[index]
        if lo <= cur.min() and hi >= cur.max():
            return True
        return self.narrow_set(index, IntervalSet.range(lo, hi))

    def mark_failed(self, var_index: Optional[int]) -> bool:
        """Record the failure and its culprit; always returns False."""
        if self.status is not Status.FAILED:
            self.status = Status.FAILED
            if self._active is not None:
                label = self._labels[self._active]
            else:
                label = self._active_label
            self.last_failure = (label, var_index)
        return False

    def signal_infeasible(self, node) -> bool:
        vi = node.ref.index if isinstance(node, Var) else None
        return self.mark_failed(vi)

    # -- constraints and propagation ----------------------------------------

    def post(self, c: Constraint, label: Optional[str] = None) -> bool:
        """Register a constraint and propagate. False means inconsistent."""
        for ref in constraint_vars(c):
            if not (0 <= ref.index < len(self._domains)):
                raise FeatlineError(f"constraint references a foreign variable {ref!r}")
        ci = len(self._constraints)
        self._constraints.append(c)
        self._labels.append(label if label is not None else render_constraint(c))
        for vi in sorted({ref.index for ref in constraint_vars(c)}):
            self._subs[vi].append(ci)
        self._bump_epoch()
        if self.status is Status.FAILED:
            return False
        self._pending.add(ci)
        self._queue.append(ci)
        return self.propagate()

    @property
    def constraints(self) -> tuple[Constraint, ...]:
        return tuple(self._constraints)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self._labels)

    def restrict(self, ref: Union[VarRef, int], allowed: DomainLike, label: Optional[str] = None) -> bool:
        """Narrow one variable directly (a decision, not a constraint)."""
        index = ref.index if isinstance(ref, VarRef) else ref
        self._bump_epoch()
        if self.status is Status.FAILED:
            return False
        self._active_label = label if label is not None else f"restrict {self._names[index]}"
        try:
            ok = self.narrow_set(index, _as_domain(allowed))
        finally:
            self._active_label = None
        if not ok:
            self._drain_queue()
            return False
        return self.propagate()

    def propagate(self) -> bool:
        """Run the queue to fixpoint. The queue is empty afterwards."""
        if self.status is Status.FAILED:
            self._drain_queue()
            return False
        while self._queue:
            ci = self._queue.popleft()
            self._pending.discard(ci)
            self._active = ci
            try:
                ok = run_filter(self._constraints[ci], self)
            finally:
                self._active = None
            if not ok or self.status is Status.FAILED:
                if self.status is not Status.FAILED:
                    self.status = Status.FAILED
                    self.last_failure = (self._labels[ci], None)
                self._drain_queue()
                return False
        return True

    def _drain_queue(self) -> None:
        self._queue.clear()
        self._pending.clear()

    # -- levels --------------------------------------------------------------

    def push_level(self) -> int:
        if self.status is Status.FAILED:
            raise FeatlineError("cannot open a level on a failed store")
        lid = self._next_level
        self._next_level += 1
        self._open_levels.append((lid, len(self._trail), len(self._constraints)))
        return lid

    def pop_to(self, level_id: int) -> None:
        """Restore the state taken when level_id was opened; closes it and
        every level opened after it."""
        pos = None
        for i, (lid, _, _) in enumerate(self._open_levels):
            if lid == level_id:
                pos = i
                break
        if pos is None:
            raise UnknownLevelError(f"level {level_id} is not open")
        _, trail_len, ncons = self._open_levels[pos]
        del self._open_levels[pos:]
        while len(self._trail) > trail_len:
            vi, old, by = self._trail.pop()
            self._domains[vi] = old
            self._narrower[vi] = by
        for ci in range(ncons, len(self._constraints)):
            for vi in {ref.index for ref in constraint_vars(self._constraints[ci])}:
                subs = self._subs[vi]
                while subs and subs[-1] >= ncons:
                    subs.pop()
        del self._constraints[ncons:]
        del self._labels[ncons:]
        self.status = Status.CONSISTENT
        self.last_failure = None
        self._drain_queue()
        self._bump_epoch()

    @property
    def open_levels(self) -> tuple[int, ...]:
        return tuple(lid for lid, _, _ in self._open_levels)

    # -- solutions and copies --------------------------------------------------

    def all_fixed(self) -> bool:
        return all(d.is_singleton() for d in self._domains)

    def snapshot_solution(self) -> Solution:
        return Solution(tuple(d.value() for d in self._domains))

    def clone(self) -> "Store":
        """Independent copy with a fresh trail and no open levels."""
        s = Store.__new__(Store)
        s._domains = list(self._domains)
        s._names = list(self._names)
        s._originals = list(self._originals)
        s._narrower = list(self._narrower)
        s._constraints = list(self._constraints)
        s._labels = list(self._labels)
        s._subs = [list(x) for x in self._subs]
        s._trail = []
        s._open_levels = []
        s._next_level = 0
        s._queue = deque()
        s._pending = set()
        s.status = self.status
        s.last_failure = self.last_failure
        s._active = None
        s._active_label = None
        s._epoch = 0
        s._epoch_holds = 0
        return s

    # -- change tracking for resumable enumeration ------------------------------

    @property
    def epoch(self) -> int:
        return self._epoch

    def _bump_epoch(self) -> None:
        if self._epoch_holds == 0:
            self._epoch += 1

    @contextmanager
    def frozen_epoch(self):
        """Suspend epoch bumps while a search mutates and then restores state."""
        self._epoch_holds += 1
        try:
            yield
        finally:
            self._epoch_holds -= 1
