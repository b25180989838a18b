"""Enumeration order, counting caps, resumable solving, and optimization."""

import pytest

from featline.errors import OutOfRangeError, UnsatisfiableError
from featline.fd import (
    AllDifferent,
    Cmp,
    Const,
    IntervalSet,
    Product,
    Search,
    Strategy,
    Store,
    ValueOrder,
    Var,
    VarOrder,
    count_solutions,
    optimize,
    solve_next,
    sum_of,
)

from oracle import solutions_flat


def two_var_store():
    s = Store()
    x = s.new_var((0, 2), "X")
    y = s.new_var((0, 2), "Y")
    assert s.post(Cmp(sum_of([x, y]), "=", Const(2)))
    return s, x, y


def test_declaration_ascending_order():
    s, x, y = two_var_store()
    sols = [sol.values for sol in Search(s)]
    assert sols == [(0, 2), (1, 1), (2, 0)]


def test_descending_value_order():
    s, x, y = two_var_store()
    strat = Strategy(value_order=ValueOrder.DESCENDING)
    sols = [sol.values for sol in Search(s, strat)]
    assert sols == [(2, 0), (1, 1), (0, 2)]


def test_first_fail_picks_smallest_domain():
    s = Store()
    x = s.new_var((0, 4), "X")
    y = s.new_var((0, 1), "Y")
    assert s.post(Cmp(sum_of([x, y]), "<=", Const(4)))
    strat = Strategy(var_order=VarOrder.FIRST_FAIL)
    sols = [sol.values for sol in Search(s, strat)]
    # Y (two values) is labeled before X (five values)
    assert sols == [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0),
                    (0, 1), (1, 1), (2, 1), (3, 1)]


def test_search_restores_store_after_exhaustion():
    s, x, y = two_var_store()
    before = (s.dom(x.index), s.dom(y.index))
    list(Search(s))
    assert (s.dom(x.index), s.dom(y.index)) == before
    assert not s.open_levels


def test_solve_next_no_duplicates_and_restores():
    s, x, y = two_var_store()
    seen = []
    while True:
        sol = solve_next(s)
        assert (s.dom(x.index), s.dom(y.index)) == (IntervalSet.range(0, 2),) * 2
        if sol is None:
            break
        seen.append(sol.values)
    assert seen == [(0, 2), (1, 1), (2, 0)]
    assert solve_next(s) is None


def test_solve_next_resets_after_mutation():
    s, x, y = two_var_store()
    assert solve_next(s).values == (0, 2)
    assert solve_next(s).values == (1, 1)
    assert s.restrict(x, IntervalSet.range(0, 1))
    # enumeration starts over on the narrowed store
    assert solve_next(s).values == (0, 2)


def test_matches_oracle_on_alldifferent():
    s = Store()
    refs = [s.new_var((1, 3), f"Q{i}") for i in range(3)]
    assert s.post(AllDifferent(tuple(refs)))
    got = sorted(sol.values for sol in Search(s))
    want = sorted(solutions_flat([[1, 2, 3]] * 3, [AllDifferent(tuple(refs))]))
    assert got == want
    assert len(got) == 6


def test_count_cap_and_exactness():
    s, _, _ = two_var_store()
    assert count_solutions(s, cap=10) == (3, True)
    assert count_solutions(s, cap=3) == (3, True)
    assert count_solutions(s, cap=2) == (2, False)
    with pytest.raises(OutOfRangeError):
        count_solutions(s, cap=0)


def test_count_on_failed_store_is_zero():
    s = Store()
    x = s.new_var((0, 1), "X")
    assert not s.post(Cmp(Var(x), ">=", Const(5)))
    assert count_solutions(s, cap=10) == (0, True)


def test_minimize_product_floor():
    # smallest X + Y with X, Y in 2..5 and X * Y at least 12
    s = Store()
    x = s.new_var((2, 5), "X")
    y = s.new_var((2, 5), "Y")
    assert s.post(Cmp(Product(Var(x), Var(y)), ">=", Const(12)))
    before = (s.dom(x.index), s.dom(y.index))
    res = optimize(s, sum_of([x, y]), "min")
    assert res.value == 7
    assert res.proven
    assert res.solution.values in ((3, 4), (4, 3))
    # store left as optimize found it
    assert (s.dom(x.index), s.dom(y.index)) == before


def test_maximize_and_tie_break_is_deterministic():
    s = Store()
    x = s.new_var((0, 3), "X")
    y = s.new_var((0, 3), "Y")
    assert s.post(Cmp(sum_of([x, y]), "<=", Const(4)))
    res = optimize(s, sum_of([x, y]), "max")
    assert res.value == 4
    # first optimum in declaration-ascending order is kept
    assert res.solution.values == (1, 3)


def test_optimize_infeasible_raises():
    s = Store()
    x = s.new_var((0, 3), "X")
    assert s.post(Cmp(Var(x), ">=", Const(1)))
    assert s.restrict(x, IntervalSet.point(2))
    assert not s.post(Cmp(Var(x), "=", Const(3)))
    with pytest.raises(UnsatisfiableError):
        optimize(s, Var(x), "min")


def test_optimize_explores_single_tree():
    # strict tightening: after an incumbent of value v, only better leaves
    # are visited, so every later incumbent improves
    s = Store()
    xs = [s.new_var((0, 2), f"X{i}") for i in range(4)]
    assert s.post(Cmp(sum_of(xs), ">=", Const(3)))
    res = optimize(s, sum_of(xs), "min")
    assert res.value == 3
    assert res.proven


def test_stop_callback_flags_inexact():
    s = Store()
    for i in range(6):
        s.new_var((0, 3), f"X{i}")
    calls = [0]

    def stop():
        calls[0] += 1
        return calls[0] > 40

    count, exact = count_solutions(s, cap=10**9, should_stop=stop)
    assert not exact
    assert count < 4**6
