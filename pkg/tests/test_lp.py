import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from postedprice import BuyerDistribution, Instance, random_instance
from postedprice.evaluation import eval_spm
from postedprice.lp import (
    approximation_bound,
    build_lp_spm,
    expected_min_poisson,
    expected_sales,
    lagrangian_assign,
    solve_lp,
    solve_lp_float,
)


def scipy_lp(inst):
    """The relaxation solved directly over x[i, v] with HiGHS."""
    cols = [(i, v, t) for i, b in enumerate(inst.buyers) for v, t in b.menu()]
    c = [-float(v * t) for _, v, t in cols]
    a_ub = [[float(t) for _, _, t in cols]]
    b_ub = [inst.copies]
    for i in range(inst.n):
        a_ub.append([1.0 if j == i else 0.0 for j, _, _ in cols])
        b_ub.append(1.0)
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=(0, None), method="highs")
    assert res.status == 0
    return -res.fun


def test_single_buyer_lp():
    b = BuyerDistribution.from_support([(1, F(1, 2)), (2, F(1, 2))])
    sol = solve_lp(Instance((b,), 1))
    assert sol.objective == 1
    assert sol.tau_star == 0


def test_split_boundary_buyer():
    # buyer 1 mixes its two prices at the optimum
    b1 = BuyerDistribution.from_tails([2, 3], [F(9, 10), F(1, 2)])
    b2 = BuyerDistribution.from_tails([1], [F(3, 10)])
    inst = Instance((b1, b2), 1)
    sol = solve_lp(inst)
    assert sol.objective == F(39, 20)
    assert sol.split is not None and sol.split.buyer == 0
    assert sol.expected_sales == 1
    assert abs(float(sol.objective) - scipy_lp(inst)) < 1e-9
    sched = build_lp_spm(inst, sol)
    assert eval_spm(inst, sched) / sol.objective >= approximation_bound(1)


@pytest.mark.parametrize("seed", range(60))
def test_matches_scipy(seed):
    rng = np.random.default_rng([seed, 11])
    n = int(rng.integers(1, 12))
    k = int(rng.integers(1, n + 1))
    inst = random_instance(n, k, 4, seed=seed)
    sol = solve_lp(inst)
    ref = scipy_lp(inst)
    assert abs(float(sol.objective) - ref) <= 1e-7 * max(1.0, ref)
    assert abs(solve_lp_float(inst) - ref) <= 1e-7 * max(1.0, ref)


@pytest.mark.parametrize("seed", range(30))
def test_solution_is_feasible(seed):
    inst = random_instance(10, 3, 4, seed=seed)
    sol = solve_lp(inst)
    assert sol.expected_sales <= inst.copies
    if sol.tau_star > 0:
        assert sol.expected_sales == inst.copies
    assert len(sol.fractional_buyers()) <= 1
    assert sum(sol.y().values()) == sol.expected_sales
    for p in sol.all_parts():
        assert 0 < p.fraction <= 1
        assert p.price in inst.buyers[p.buyer].values
    per_buyer = {}
    for p in sol.all_parts():
        per_buyer[p.buyer] = per_buyer.get(p.buyer, 0) + p.fraction
    assert all(x <= 1 for x in per_buyer.values())


def test_lagrangian_helpers():
    inst = random_instance(5, 2, 3, seed=1)
    assign = lagrangian_assign(inst, 0)
    assert all(p is not None for p, _ in assign)
    assert expected_sales(inst, 10**6) == 0
    with pytest.raises(ValueError):
        lagrangian_assign(inst, -1)
    taus = [F(x) for x in range(0, 101, 5)]
    sales = [expected_sales(inst, t) for t in taus]
    assert all(a >= b for a, b in zip(sales, sales[1:]))


def test_schedule_is_decreasing_price():
    inst = random_instance(12, 3, 5, seed=7)
    sched = build_lp_spm(inst)
    prices = [p for _, p in sched.offers()]
    assert prices == sorted(prices, reverse=True)


def test_bound_constants():
    assert approximation_bound(1) == pytest.approx(1 - 1 / math.e, abs=1e-15)
    for k in range(1, 40):
        exact = 1 - k**k / (math.factorial(k) * math.e**k)
        assert approximation_bound(k) == pytest.approx(exact, abs=1e-12)
        assert approximation_bound(k) >= 1 - 1 / math.sqrt(2 * math.pi * k)
        assert expected_min_poisson(k) == pytest.approx(k * approximation_bound(k), abs=1e-10)
    assert approximation_bound(500) < 1
    with pytest.raises(ValueError):
        approximation_bound(0)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    n=st.integers(1, 8),
    k=st.integers(1, 8),
)
def test_guarantee_property(seed, n, k):
    k = min(k, n)
    inst = random_instance(n, k, 4, seed=seed)
    sol = solve_lp(inst)
    value = eval_spm(inst, build_lp_spm(inst, sol))
    assert value <= sol.objective
    assert float(value / sol.objective) >= approximation_bound(k) - 1e-12
