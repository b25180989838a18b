"""Whole-model analyses over the compiled store.

Every operation compiles its own private store, probes it under pushed
levels, and pops everything before returning, so nothing here can leak state
into a caller's store and independent analyses may run concurrently.

Reports render to a stable JSON shape; the HTTP layer serves the same
documents, so a CLI result and a service response for the same input are
interchangeable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .compiler import VarMap, compile_model
from .errors import (
    OutOfRangeError,
    UnknownGoalError,
    UnknownNameError,
    UnsatisfiableError,
    VoidModelError,
)
from .fd import (
    IntervalSet,
    Search,
    Solution,
    Store,
    Strategy,
    ValueOrder,
    VarOrder,
    count_solutions,
    eval_constraint,
    optimize,
)
from .model import Direction, FeatureModel

# IEEE-754 doubles hold integers exactly only up to this magnitude; larger
# values travel as strings so JSON clients cannot silently round them.
JSON_SAFE_MAX = 2**53 - 1

StopFn = Optional[Callable[[], bool]]


def json_int(v: int) -> Union[int, str]:
    return v if abs(v) <= JSON_SAFE_MAX else str(v)


def domain_json(dom: IntervalSet) -> list[list[Union[int, str]]]:
    return [[json_int(lo), json_int(hi)] for lo, hi in dom.intervals]


def solution_dict(vm: VarMap, sol: Solution) -> dict[str, int]:
    """Model-level view of a solution: feature and attribute variables only,
    in declaration order; helper variables are dropped."""
    return {ref.name: sol[ref] for ref in vm.all_vars()}


def solution_json(assignment: dict[str, int]) -> dict[str, Union[int, str]]:
    return {name: json_int(v) for name, v in assignment.items()}


def _first_solution(store: Store, should_stop: StopFn = None) -> Optional[Solution]:
    search = Search(store, should_stop=should_stop)
    try:
        return search.next()
    finally:
        search.close()


# -- operations --------------------------------------------------------------


def is_void(m: FeatureModel, should_stop: StopFn = None) -> bool:
    """True iff the model admits no configuration at all."""
    store, _ = compile_model(m)
    if store.is_failed:
        return True
    return _first_solution(store, should_stop) is None


def core_and_dead(m: FeatureModel,
                  should_stop: StopFn = None) -> tuple[list[str], list[str]]:
    """(core, dead) feature names, each in declaration order.

    A feature is dead when no configuration includes it and core when every
    configuration does; both facts come from one probe pair per feature on a
    pushed level, so the compiled store ends up exactly as it started.
    """
    store, vm = compile_model(m)
    if store.is_failed or _first_solution(store, should_stop) is None:
        raise VoidModelError(f"model '{m.name}' has no configuration")
    core: list[str] = []
    dead: list[str] = []
    for f in m.features:
        ref = vm.features[f.name]
        if _probe_unsat(store, ref.index, IntervalSet.point(0), should_stop):
            core.append(f.name)
        if _probe_unsat(store, ref.index, IntervalSet.range(1, f.max_count),
                        should_stop):
            dead.append(f.name)
    return core, dead


def _probe_unsat(store: Store, index: int, allowed: IntervalSet,
                 should_stop: StopFn) -> bool:
    lvl = store.push_level()
    try:
        if not store.restrict(index, allowed):
            return True
        return _first_solution(store, should_stop) is None
    finally:
        store.pop_to(lvl)


def count_configurations(m: FeatureModel, cap: int,
                         project_features: bool = False,
                         strategy: Strategy = Strategy(),
                         should_stop: StopFn = None) -> tuple[int, bool]:
    """(count, exact). Counts distinct total assignments, attribute values
    included; with project_features, configurations that differ only in
    attribute values collapse into one."""
    if cap < 1:
        raise OutOfRangeError("cap must be at least 1")
    store, vm = compile_model(m)
    if store.is_failed:
        return 0, True
    if not project_features:
        return count_solutions(store, cap, strategy, should_stop)
    findices = [ref.index for ref in vm.features.values()]
    return _count_projected(store, findices, cap, strategy, should_stop)


def _count_projected(store: Store, findices: list[int], cap: int,
                     strategy: Strategy,
                     should_stop: StopFn) -> tuple[int, bool]:
    """Label feature variables only; each feature-complete node counts once
    when some attribute completion exists under it."""
    count = 0
    exact = True

    def pick() -> Optional[int]:
        open_ixs = [i for i in findices if not store.dom(i).is_singleton()]
        if not open_ixs:
            return None
        if strategy.var_order is VarOrder.FIRST_FAIL:
            return min(open_ixs, key=lambda i: store.dom(i).size())
        return open_ixs[0]

    def rec() -> bool:
        """False stops the walk (cap passed or caller cancelled)."""
        nonlocal count, exact
        if should_stop is not None and should_stop():
            exact = False
            return False
        vi = pick()
        if vi is None:
            if _first_solution(store, should_stop) is not None:
                count += 1
                if count > cap:
                    count = cap
                    exact = False
                    return False
            return True
        vals = list(store.dom(vi).values())
        if strategy.value_order is ValueOrder.DESCENDING:
            vals.reverse()
        for val in vals:
            lvl = store.push_level()
            try:
                if store.narrow_set(vi, IntervalSet.point(val)) and store.propagate():
                    if not rec():
                        return False
            finally:
                store.pop_to(lvl)
        return True

    rec()
    return count, exact


def enumerate_configs(m: FeatureModel, limit: int,
                      strategy: Strategy = Strategy(),
                      should_stop: StopFn = None) -> list[dict[str, int]]:
    """First `limit` configurations in strategy order."""
    if limit < 1:
        raise OutOfRangeError("limit must be at least 1")
    store, vm = compile_model(m)
    out: list[dict[str, int]] = []
    if store.is_failed:
        return out
    search = Search(store, strategy, should_stop)
    try:
        while len(out) < limit:
            sol = search.next()
            if sol is None:
                break
            out.append(solution_dict(vm, sol))
    finally:
        search.close()
    return out


@dataclass(frozen=True)
class GoalResult:
    assignment: Optional[dict[str, int]]
    value: Optional[int]
    proven: bool


def optimize_goal(m: FeatureModel, goal: str,
                  strategy: Strategy = Strategy(),
                  should_stop: StopFn = None) -> GoalResult:
    """Proven optimum of a declared goal; proven is False only when a stop
    callback cut the search short."""
    store, vm = compile_model(m)
    if goal not in vm.goals:
        declared = ", ".join(vm.goal_order) or "none declared"
        raise UnknownGoalError(f"unknown goal '{goal}' (goals: {declared})")
    direction = "min"
    for g in m.goals:
        if g.name == goal:
            direction = "min" if g.direction is Direction.MINIMIZE else "max"
    res = optimize(store, vm.goals[goal], direction, strategy, should_stop)
    if res.solution is None:
        return GoalResult(None, None, False)
    return GoalResult(solution_dict(vm, res.solution), res.value, res.proven)


def validate_configuration(m: FeatureModel,
                           assignment: dict[str, Union[int, str]]) -> list[str]:
    """Empty list when the total assignment is a configuration; otherwise
    every violated constraint label plus any out-of-domain bindings."""
    store, vm = compile_model(m)
    model_vars = vm.all_vars()
    values: dict[int, int] = {}
    for name, raw in assignment.items():
        ref = vm.lookup(name)
        if ref is None:
            raise UnknownNameError(f"'{name}' is not a feature or attribute")
        if isinstance(raw, str):
            if raw not in vm.codes:
                raise UnknownNameError(f"'{raw}' is not a declared code")
            raw = vm.codes[raw]
        values[ref.index] = raw
    missing = [r.name for r in model_vars if r.index not in values]
    if missing:
        raise UnknownNameError(
            "assignment gives no value for: " + ", ".join(missing))

    if not store.is_failed:
        lvl = store.push_level()
        try:
            ok = all(store.restrict(i, IntervalSet.point(v))
                     for i, v in sorted(values.items()))
        finally:
            store.pop_to(lvl)
        if ok:
            return []

    # Not a configuration: name every offender by evaluating each constraint
    # on the ground tuple. Helper variables keep their (singleton) domains.
    violations: list[str] = []
    full = []
    for i in range(store.num_vars):
        if i in values:
            full.append(values[i])
        else:
            full.append(store.original_dom(i).value())
    for i, v in sorted(values.items()):
        if v not in store.original_dom(i):
            violations.append(
                f"{store.var_name(i)} in {store.original_dom(i)!r}")
    for c, label in zip(store.constraints, store.labels):
        if not eval_constraint(c, full):
            violations.append(label)
    return violations


# -- report rendering ---------------------------------------------------------


@dataclass(frozen=True)
class AnalysisReport:
    """One analysis outcome: the kind tag, a payload shaped by that kind, and
    how long the run took."""

    kind: str
    payload: dict
    elapsed_ms: int

    def to_json(self, include_elapsed: bool = False) -> dict:
        doc: dict = {"kind": self.kind}
        doc.update(self.payload)
        if include_elapsed:
            doc["elapsed_ms"] = self.elapsed_ms
        return doc


ANALYSIS_KINDS = ("void", "core_dead", "count", "enumerate", "optimize",
                  "validate")


def run_analysis(m: FeatureModel, kind: str, params: Optional[dict] = None,
                 should_stop: StopFn = None) -> AnalysisReport:
    """Shared dispatcher behind the CLI and the HTTP analysis endpoint."""
    params = params or {}
    strategy = Strategy.named(params.get("var_order", "declaration"),
                              params.get("value_order", "ascending"))
    started = time.monotonic()
    if kind == "void":
        payload: dict = {"void": is_void(m, should_stop)}
    elif kind == "core_dead":
        core, dead = core_and_dead(m, should_stop)
        payload = {"core": core, "dead": dead}
    elif kind == "count":
        count, exact = count_configurations(
            m, int(params.get("cap", 10000)),
            bool(params.get("project_features", False)), strategy, should_stop)
        payload = {"count": json_int(count), "exact": exact}
    elif kind == "enumerate":
        sols = enumerate_configs(m, int(params.get("limit", 1)), strategy,
                                 should_stop)
        payload = {"solutions": [solution_json(s) for s in sols]}
    elif kind == "optimize":
        res = optimize_goal(m, str(params.get("goal", "")), strategy,
                            should_stop)
        payload = {
            "goal": params.get("goal", ""),
            "value": None if res.value is None else json_int(res.value),
            "solution": None if res.assignment is None
            else solution_json(res.assignment),
            "proven": res.proven,
        }
    elif kind == "validate":
        violations = validate_configuration(m, dict(params.get("assignment", {})))
        payload = {"ok": not violations, "violations": violations}
    else:
        raise OutOfRangeError(
            f"unknown analysis '{kind}' (one of: {', '.join(ANALYSIS_KINDS)})")
    elapsed_ms = int((time.monotonic() - started) * 1000)
    return AnalysisReport(kind, payload, elapsed_ms)
