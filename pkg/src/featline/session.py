"""Interactive configuration sessions.

A session wraps one compiled model and applies user actions in stages:
narrowing a variable, adding a what-if constraint, undoing, or walking the
remaining solutions. Every accepted action opens exactly one store level, so
the decision log and the level stack always line up and undo is a pop.

Rejected actions roll back before returning: the caller sees a Conflict
naming the culprit constraint and the emptied variable, and the domains are
bit-for-bit what they were before the attempt.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .analyses import GoalResult, domain_json, json_int, solution_dict
from .compiler import ExprLowerer, VarMap, compile_model
from .errors import (
    ExprTypeError,
    FeatlineError,
    OutOfRangeError,
    UnknownGoalError,
    UnknownNameError,
    VoidModelError,
)
from .fd import (
    INT64_MAX,
    INT64_MIN,
    IntervalSet,
    Search,
    Store,
    Strategy,
    count_solutions,
    optimize as fd_optimize,
    solve_next,
)
from .model import (
    ConstraintExpr,
    Direction,
    FeatureModel,
    render_expr,
    validate_expr,
)


@dataclass(frozen=True)
class VarView:
    """How one variable looks right now. The status is a pure function of
    the domain: {0} is out, any other singleton is fixed, a domain whose
    values are all positive is forced in, anything else is open."""

    name: str
    domain: IntervalSet
    status: str
    value: Optional[int]

    @classmethod
    def of(cls, name: str, dom: IntervalSet) -> "VarView":
        if dom.is_singleton():
            v = dom.value()
            return cls(name, dom, "forced_out" if v == 0 else "fixed", v)
        if dom.min() >= 1:
            return cls(name, dom, "forced_in", None)
        return cls(name, dom, "open", None)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "domain": domain_json(self.domain),
            "status": self.status,
            "value": None if self.value is None else json_int(self.value),
        }


@dataclass(frozen=True)
class SessionView:
    vars: tuple[VarView, ...]
    remaining: int
    exact: bool

    def to_json(self) -> dict:
        return {
            "vars": [v.to_json() for v in self.vars],
            "remaining": json_int(self.remaining),
            "exact": self.exact,
        }


@dataclass(frozen=True)
class ViewDelta:
    """Every variable whose domain changed, in declaration order."""

    changed: tuple[VarView, ...]

    def to_json(self) -> dict:
        return {"changed": [v.to_json() for v in self.changed]}


@dataclass(frozen=True)
class Conflict:
    """Why an action was rejected. The session is already rolled back when
    the caller sees one of these."""

    action: str
    culprit: Optional[str]
    variable: Optional[str]

    def to_json(self) -> dict:
        return {"action": self.action, "culprit": self.culprit,
                "variable": self.variable}


@dataclass(frozen=True)
class Restriction:
    """One narrowing request. Values may be enum code names; the session
    resolves them against the model before applying."""

    kind: str  # "fix" | "at_least" | "at_most" | "in"
    value: Optional[Union[int, str]] = None
    values: tuple[Union[int, str], ...] = ()

    @classmethod
    def fix(cls, v: Union[int, str]) -> "Restriction":
        return cls("fix", value=v)

    @classmethod
    def at_least(cls, v: Union[int, str]) -> "Restriction":
        return cls("at_least", value=v)

    @classmethod
    def at_most(cls, v: Union[int, str]) -> "Restriction":
        return cls("at_most", value=v)

    @classmethod
    def within(cls, values) -> "Restriction":
        return cls("in", values=tuple(values))

    def to_json(self) -> dict:
        if self.kind == "in":
            return {"kind": "in", "values": list(self.values)}
        return {"kind": self.kind, "value": self.value}

    @classmethod
    def from_json(cls, doc: dict) -> "Restriction":
        kind = doc.get("kind")
        if kind in ("fix", "at_least", "at_most"):
            if "value" not in doc:
                raise OutOfRangeError(f"restriction '{kind}' needs a value")
            return cls(kind, value=doc["value"])
        if kind == "in":
            vals = doc.get("values")
            if not isinstance(vals, list) or not vals:
                raise OutOfRangeError("restriction 'in' needs a value list")
            return cls("in", values=tuple(vals))
        raise OutOfRangeError(f"unknown restriction kind {kind!r}")


@dataclass(frozen=True)
class LogEntry:
    kind: str  # "decide" | "constraint"
    level: int
    name: Optional[str] = None
    restriction: Optional[Restriction] = None
    expr_text: Optional[str] = None

    def to_json(self) -> dict:
        if self.kind == "decide":
            return {"kind": "decide", "name": self.name,
                    "restriction": self.restriction.to_json()}
        return {"kind": "constraint", "expr": self.expr_text}


class Session:
    """One configuration in progress. Not thread-safe: callers serialize."""

    def __init__(self, m: FeatureModel, strategy: Strategy = Strategy(),
                 count_cap: int = 10000):
        store, vm = compile_model(m)
        if store.is_failed or not _has_solution(store):
            raise VoidModelError(
                f"model '{m.name}' has no configuration to start from")
        self.model = m
        self.store = store
        self.vm = vm
        self.strategy = strategy
        self.count_cap = count_cap
        self._lowerer = ExprLowerer(store, vm)
        self.log: list[LogEntry] = []

    # -- reads ---------------------------------------------------------------

    def view(self) -> SessionView:
        views = tuple(VarView.of(ref.name, self.store.dom(ref.index))
                      for ref in self.vm.all_vars())
        remaining, exact = count_solutions(self.store, self.count_cap,
                                           self.strategy)
        return SessionView(views, remaining, exact)

    def var_view(self, name: str) -> VarView:
        ref = self._ref(name)
        return VarView.of(ref.name, self.store.dom(ref.index))

    # -- mutations -----------------------------------------------------------

    def decide(self, name: str,
               restriction: Restriction) -> Union[ViewDelta, Conflict]:
        ref = self._ref(name)
        allowed = self._restriction_set(restriction)
        action = _describe(name, restriction)
        before = self._snapshot()
        lvl = self.store.push_level()
        if not self.store.restrict(ref.index, allowed, label=action):
            culprit, emptied = self.store.last_failure
            if culprit == action and emptied is not None:
                # the request clashed with an already-narrowed domain: blame
                # whatever narrowed it, not the request itself
                culprit = self.store.narrowed_by(emptied) or culprit
            self.store.pop_to(lvl)
            return Conflict(action, culprit, self._emptied_name(emptied))
        self.log.append(LogEntry("decide", lvl, name=name,
                                 restriction=restriction))
        return self._delta(before)

    def add_constraint(
            self, e: Union[ConstraintExpr, str]) -> Union[ViewDelta, Conflict]:
        if isinstance(e, str):
            e = self._parse_expr(e)
        diags = validate_expr(self.model, e)
        if diags:
            raise ExprTypeError("; ".join(str(d) for d in diags))
        # Lowering happens outside the level: it may mint the session's
        # shared truth variable, which must survive a later undo.
        constraints = self._lowerer.lower_expr(e)
        action = render_expr(e)
        before = self._snapshot()
        lvl = self.store.push_level()
        for c in constraints:
            if not self.store.post(c, action):
                culprit, emptied = self.store.last_failure
                self.store.pop_to(lvl)
                return Conflict(action, culprit, self._emptied_name(emptied))
        self.log.append(LogEntry("constraint", lvl, expr_text=action))
        return self._delta(before)

    def undo(self, k: int) -> ViewDelta:
        if not 1 <= k <= len(self.log):
            raise OutOfRangeError(
                f"cannot undo {k} of {len(self.log)} logged actions")
        before = self._snapshot()
        self.store.pop_to(self.log[-k].level)
        del self.log[-k:]
        return self._delta(before)

    def next_solution(self) -> Optional[dict[str, int]]:
        """The next remaining configuration, None once exhausted. Restarts
        from the first one whenever the log changes."""
        sol = solve_next(self.store, self.strategy)
        if sol is None:
            return None
        return solution_dict(self.vm, sol)

    def optimize(self, goal: str, should_stop=None) -> GoalResult:
        """Best remaining configuration for a declared goal, honoring every
        decision and extra constraint made so far."""
        if goal not in self.vm.goals:
            declared = ", ".join(self.vm.goal_order) or "none declared"
            raise UnknownGoalError(f"unknown goal '{goal}' (goals: {declared})")
        direction = "min"
        for g in self.model.goals:
            if g.name == goal and g.direction is Direction.MAXIMIZE:
                direction = "max"
        res = fd_optimize(self.store, self.vm.goals[goal], direction,
                          self.strategy, should_stop)
        if res.solution is None:
            return GoalResult(None, None, False)
        return GoalResult(solution_dict(self.vm, res.solution), res.value,
                          res.proven)

    # -- log export / replay ---------------------------------------------------

    def export_log(self) -> list[dict]:
        return [entry.to_json() for entry in self.log]

    @classmethod
    def replay(cls, m: FeatureModel, entries: list[dict],
               strategy: Strategy = Strategy(),
               count_cap: int = 10000) -> "Session":
        """Rebuild a session from an exported log. A log that no longer
        applies cleanly (edited, or model changed) is an error."""
        s = cls(m, strategy, count_cap)
        for i, doc in enumerate(entries):
            kind = doc.get("kind")
            if kind == "decide":
                out = s.decide(doc["name"], Restriction.from_json(
                    doc["restriction"]))
            elif kind == "constraint":
                out = s.add_constraint(doc["expr"])
            else:
                raise OutOfRangeError(f"log entry {i} has unknown kind {kind!r}")
            if isinstance(out, Conflict):
                raise FeatlineError(
                    f"log entry {i} no longer applies: {out.culprit}")
        return s

    # -- internals --------------------------------------------------------------

    def _ref(self, name: str):
        ref = self.vm.lookup(name)
        if ref is None:
            raise UnknownNameError(f"'{name}' is not a feature or attribute")
        return ref

    def _resolve(self, v: Union[int, str]) -> int:
        if isinstance(v, int):
            return v
        if v in self.vm.codes:
            return self.vm.codes[v]
        raise UnknownNameError(f"'{v}' is not a declared code")

    def _restriction_set(self, r: Restriction) -> IntervalSet:
        if r.kind == "fix":
            return IntervalSet.point(self._resolve(r.value))
        if r.kind == "at_least":
            return IntervalSet.range(self._resolve(r.value), INT64_MAX)
        if r.kind == "at_most":
            return IntervalSet.range(INT64_MIN, self._resolve(r.value))
        if r.kind == "in":
            return IntervalSet.from_values(self._resolve(v) for v in r.values)
        raise OutOfRangeError(f"unknown restriction kind {r.kind!r}")

    def _parse_expr(self, text: str) -> ConstraintExpr:
        from .parser import parse_expr

        e, diags = parse_expr(text)
        if e is None:
            raise ExprTypeError("; ".join(str(d) for d in diags)
                                or "empty constraint expression")
        return e

    def _snapshot(self) -> list[IntervalSet]:
        return [self.store.dom(ref.index) for ref in self.vm.all_vars()]

    def _delta(self, before: list[IntervalSet]) -> ViewDelta:
        changed = []
        for ref, old in zip(self.vm.all_vars(), before):
            now = self.store.dom(ref.index)
            if now is not old and now != old:
                changed.append(VarView.of(ref.name, now))
        return ViewDelta(tuple(changed))

    def _emptied_name(self, index: Optional[int]) -> Optional[str]:
        return None if index is None else self.store.var_name(index)


def _describe(name: str, r: Restriction) -> str:
    if r.kind == "fix":
        return f"{name} = {r.value}"
    if r.kind == "at_least":
        return f"{name} >= {r.value}"
    if r.kind == "at_most":
        return f"{name} <= {r.value}"
    joined = ", ".join(str(v) for v in r.values)
    return f"{name} in {{{joined}}}"


def _has_solution(store: Store) -> bool:
    search = Search(store)
    try:
        return search.next() is not None
    finally:
        search.close()
