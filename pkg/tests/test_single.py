from __future__ import annotations

from fractions import Fraction

import pytest

from powernap.core import make_instance
from powernap.oracle import brute_opt_single, gap_instance
from powernap.single import (
    approx_35_18,
    guarantee,
    near_optimal,
    near_optimal_indices,
    opt_plus_p,
    scaled_algorithm,
    sqrt_alpha,
)

E1 = make_instance([(0, 3, 2)], wake_cost=2)
TWO = make_instance([(0, 1, 1), (5, 6, 1)], wake_cost=2)
EMPTY = make_instance([], wake_cost=2)


def report(name, sched, inst, alpha=None):
    o = brute_opt_single(inst)
    return guarantee(name, sched.cost.total, o.opt_cost, inst.total_processing, o.q_min, alpha=alpha)


def test_opt_plus_p_examples():
    out = opt_plus_p(E1)
    assert out.cost.total == 4 and report("opt-plus-p", out, E1).bound == 6
    out = opt_plus_p(TWO)
    assert out.cost.total == 6 and report("opt-plus-p", out, TWO).bound == 8
    assert opt_plus_p(EMPTY).cost.total == 0


def test_scaled_examples():
    out = scaled_algorithm(E1, 2)
    r = report("scaled", out, E1, 2)
    assert out.cost.total <= 4 and r.bound == 4 + 12 + 2 and r.satisfied
    out = scaled_algorithm(TWO, 2)
    assert out.violation(TWO) is None and report("scaled", out, TWO, 2).satisfied
    with pytest.raises(ValueError):
        scaled_algorithm(E1, 1)


def test_scaled_alpha_three_bound_formula():
    r = guarantee("scaled", 0, 10, 6, 4, alpha=3)
    assert r.bound == 10 + 8 * 4 + Fraction(6, 2)


def test_near_optimal_examples():
    long_job = make_instance([(0, 100, 100)], wake_cost=1)
    out = near_optimal(long_job)
    # window length equals p: the only schedule keeps one interval [0, 100)
    r = guarantee("near-opt", out.cost.total, 101, 100, 1)
    assert out.cost.total == 101 and r.t == 100 and r.satisfied
    assert r.bound == pytest.approx(101 * 1.8)
    tiny = make_instance([(0, 1, 1)], wake_cost=5)
    out = near_optimal(tiny)
    assert out.cost.total == 6 and out.details["index"] == 0
    assert near_optimal(EMPTY).cost.total == 0


def test_near_optimal_indices_and_alpha():
    inst = make_instance([(0, 100, 100)], wake_cost=1)
    assert near_optimal_indices(inst)[:2] == [1, 2]
    assert sqrt_alpha(100, 1, 1) == 10
    assert sqrt_alpha(2, 1, 1) < Fraction(1415, 1000)


def test_approx_35_18_examples():
    assert approx_35_18(E1).cost.total == 4
    gap = gap_instance(2)
    assert approx_35_18(gap).cost.total <= Fraction(35, 18) * 8
    out = approx_35_18(TWO)
    assert report("a35-18", out, TWO).satisfied


def test_single_machine_algorithms_reject_multi():
    with pytest.raises(ValueError):
        opt_plus_p(E1.with_machines(2))
