"""Store bookkeeping: posting, failure reporting, levels, and the trail."""

import pytest

from featline.errors import EmptyDomainError, FeatlineError, UnknownLevelError
from featline.fd import Cmp, Const, IntervalSet, Status, Store, Var, sum_of


def test_new_var_rejects_empty_domain():
    s = Store()
    with pytest.raises(EmptyDomainError):
        s.new_var(IntervalSet.empty(), "X")


def test_new_var_rejects_out_of_range_values():
    s = Store()
    with pytest.raises(EmptyDomainError):
        s.new_var((0, 2**63), "X")


def test_post_rejects_foreign_variable():
    s = Store()
    other = Store()
    x = other.new_var((0, 3), "X")
    with pytest.raises(FeatlineError):
        s.post(Cmp(Var(x), "=", Const(1)))


def test_failure_records_culprit_and_variable():
    s = Store()
    x = s.new_var((0, 3), "X")
    assert not s.post(Cmp(Var(x), ">=", Const(7)), label="lift X")
    assert s.status is Status.FAILED
    label, var_index = s.last_failure
    assert label == "lift X"
    assert var_index == x.index


def test_post_after_failure_stays_inconsistent():
    s = Store()
    x = s.new_var((0, 3), "X")
    assert not s.post(Cmp(Var(x), ">", Const(5)))
    assert not s.post(Cmp(Var(x), ">=", Const(0)))
    assert len(s.constraints) == 2


def test_pop_restores_domains_and_constraints():
    s = Store()
    x = s.new_var((0, 9), "X")
    y = s.new_var((0, 9), "Y")
    assert s.post(Cmp(Var(x), "<=", Var(y)))
    before = (s.dom(x.index), s.dom(y.index), len(s.constraints))

    lvl = s.push_level()
    assert s.post(Cmp(Var(x), ">=", Const(5)))
    assert s.restrict(y, IntervalSet.range(0, 6))
    assert s.dom(x.index) == IntervalSet.range(5, 6)
    s.pop_to(lvl)

    assert (s.dom(x.index), s.dom(y.index), len(s.constraints)) == before
    assert s.status is Status.CONSISTENT


def test_nested_levels_pop_outer_undoes_inner():
    s = Store()
    x = s.new_var((0, 9), "X")
    outer = s.push_level()
    assert s.restrict(x, IntervalSet.range(2, 8))
    inner = s.push_level()
    assert s.restrict(x, IntervalSet.range(4, 6))
    s.pop_to(outer)
    assert s.dom(x.index) == IntervalSet.range(0, 9)
    with pytest.raises(UnknownLevelError):
        s.pop_to(inner)


def test_pop_to_closed_level_raises():
    s = Store()
    s.new_var((0, 1), "X")
    lvl = s.push_level()
    s.pop_to(lvl)
    with pytest.raises(UnknownLevelError):
        s.pop_to(lvl)


def test_pop_restores_failed_status():
    s = Store()
    x = s.new_var((0, 3), "X")
    lvl = s.push_level()
    assert not s.restrict(x, IntervalSet.from_values([9]))
    assert s.is_failed
    s.pop_to(lvl)
    assert not s.is_failed
    assert s.dom(x.index) == IntervalSet.range(0, 3)


def test_retracted_constraint_no_longer_fires():
    s = Store()
    x = s.new_var((0, 9), "X")
    y = s.new_var((0, 9), "Y")
    lvl = s.push_level()
    assert s.post(Cmp(Var(x), "=", Var(y)))
    s.pop_to(lvl)
    assert s.restrict(x, IntervalSet.point(3))
    assert s.dom(y.index) == IntervalSet.range(0, 9)


def test_clone_is_isolated():
    s = Store()
    x = s.new_var((0, 5), "X")
    y = s.new_var((0, 5), "Y")
    assert s.post(Cmp(sum_of([x, y]), "=", Const(5)))
    c = s.clone()
    assert c.restrict(x, IntervalSet.point(1))
    assert c.dom(y.index) == IntervalSet.point(4)
    assert s.dom(x.index) == IntervalSet.range(0, 5)
    assert s.dom(y.index) == IntervalSet.range(0, 5)


def test_queue_is_empty_after_propagate():
    s = Store()
    x = s.new_var((0, 9), "X")
    y = s.new_var((0, 9), "Y")
    z = s.new_var((0, 9), "Z")
    assert s.post(Cmp(Var(x), "<=", Var(y)))
    assert s.post(Cmp(Var(y), "<=", Var(z)))
    assert s.restrict(z, IntervalSet.range(0, 4))
    assert not s._queue and not s._pending
    assert s.dom(x.index) == IntervalSet.range(0, 4)
