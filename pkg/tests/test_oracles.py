import itertools
from fractions import Fraction as F
from functools import lru_cache

import numpy as np
import pytest

from postedprice import SKIP, BudgetExceededError, BuyerDistribution, Instance, SpmSchedule, random_instance
from postedprice.evaluation import eval_aspm, eval_spm
from postedprice.lp import solve_lp
from postedprice.oracles import OracleBudget, adaptivity_gap, brute_spm_opt, exact_aspm_opt

HALF = BuyerDistribution.from_support([(1, F(1, 2)), (2, F(1, 2))])


def naive_spm_opt(inst):
    """Every price vector in every order, evaluated exactly."""
    best = F(0)
    options = [[SKIP] + list(b.values) for b in inst.buyers]
    for prices in itertools.product(*options):
        for order in itertools.permutations(range(inst.n)):
            best = max(best, eval_spm(inst, SpmSchedule(tuple((b, prices[b]) for b in order))))
    return best


def naive_aspm_opt(inst):
    menus = inst.menus()

    @lru_cache(maxsize=None)
    def best(left, k):
        if k == 0 or not left:
            return F(0)
        out = F(0)
        for b in left:
            rest = left - {b}
            for v, t in menus[b]:
                out = max(out, t * (v + best(rest, k - 1)) + (1 - t) * best(rest, k))
        return out

    return best(frozenset(range(inst.n)), inst.copies)


def test_examples():
    _, v = brute_spm_opt(Instance((HALF,), 1))
    assert v == 1
    tree, v = exact_aspm_opt(Instance((HALF, HALF), 1))
    assert v == F(3, 2)
    assert eval_aspm(Instance((HALF, HALF), 1), tree) == F(3, 2)


@pytest.mark.parametrize("seed", range(30))
def test_spm_matches_naive_search(seed):
    rng = np.random.default_rng([seed, 21])
    n = int(rng.integers(1, 4))
    k = int(rng.integers(1, n + 1))
    inst = random_instance(n, k, 3, seed=seed)
    sched, value = brute_spm_opt(inst)
    assert value == naive_spm_opt(inst)
    assert eval_spm(inst, sched) == value


@pytest.mark.parametrize("seed", range(30))
def test_aspm_matches_naive_recursion(seed):
    rng = np.random.default_rng([seed, 22])
    n = int(rng.integers(1, 7))
    k = int(rng.integers(1, n + 1))
    inst = random_instance(n, k, 3, seed=seed)
    tree, value = exact_aspm_opt(inst)
    assert value == naive_aspm_opt(inst)
    assert eval_aspm(inst, tree) == value
    _, fvalue = exact_aspm_opt(inst, exact=False)
    assert fvalue == value


@pytest.mark.parametrize("seed", range(30))
def test_ordering_of_optima(seed):
    rng = np.random.default_rng([seed, 23])
    n = int(rng.integers(1, 8))
    k = int(rng.integers(1, n + 1))
    inst = random_instance(n, k, 3, seed=seed)
    _, spm = brute_spm_opt(inst)
    _, aspm = exact_aspm_opt(inst)
    assert spm <= aspm <= solve_lp(inst).objective
    if k == 1:
        assert spm == aspm
    assert adaptivity_gap(inst) == (aspm / spm if spm else 1)


def test_gap_fixture_like_instance_has_gap():
    found = max(adaptivity_gap(random_instance(4, 2, 3, seed=s)) for s in range(60))
    assert found > 1


def test_budgets():
    inst = random_instance(8, 2, 3, seed=0)
    with pytest.raises(BudgetExceededError):
        brute_spm_opt(inst, OracleBudget(max_enumeration=10))
    with pytest.raises(BudgetExceededError):
        exact_aspm_opt(inst, OracleBudget(max_states=10))
    with pytest.raises(ValueError):
        OracleBudget(0, 1)
