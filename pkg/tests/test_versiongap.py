from fractions import Fraction as F

import pytest

from postedprice import BudgetExceededError, InvalidInstanceError
from postedprice.versiongap import (
    AtMostOne,
    Antichains,
    Explicit,
    VgAssignment,
    VgBin,
    VgInstance,
    brute_versiongap,
    object_options,
    random_versiongap,
    solve_versiongap,
)


def test_knapsack_example():
    # one bin of capacity 1/2; objects (3, 1/2) and (2, 1/4) x2
    vg = VgInstance(
        objects=(((3, F(1, 2)),), ((2, F(1, 4)),), ((2, F(1, 4)),)),
        bins=(VgBin(F(1, 2), 1),),
        family=AtMostOne(),
        granularity=4,
    )
    assign, profit = solve_versiongap(vg)
    assert profit == 4
    assert assign.bins_of(1) == (0,) and assign.bins_of(2) == (0,)
    assert brute_versiongap(vg)[1] == 4


def test_discounts_and_versions():
    vg = VgInstance(
        objects=(((1, F(1, 4)), (5, 1)),),
        bins=(VgBin(F(1, 4), 1), VgBin(1, F(1, 2))),
        family=AtMostOne(),
        granularity=4,
    )
    assign, profit = solve_versiongap(vg)
    assert profit == F(5, 2)
    assert assign.placements == ((0, 1, 1),)


def test_single_bins_and_windows():
    b = VgBin(F(1, 2), 1, single=True, min_size=F(1, 4))
    assert b.fits(F(1, 2)) and not b.fits(F(1, 4)) and not b.fits(F(3, 4))
    vg = VgInstance(
        objects=(((4, F(1, 4)),), ((3, F(1, 2)),), ((3, F(1, 2)),)),
        bins=(b,),
        granularity=4,
    )
    assign, profit = solve_versiongap(vg)
    assert profit == 3
    assign.validate(vg)
    assert brute_versiongap(vg)[1] == 3


def test_families():
    assert AtMostOne().subsets(2) == [(), (0,), (1,)]
    fam = Antichains((None, 0, 0, None))
    subs = fam.subsets(4)
    assert (1, 2) in subs and (0, 1) not in subs and (1, 2, 3) in subs
    assert len(subs) == len(set(subs))
    assert all(fam.allows(s, 4) for s in subs)
    assert not fam.allows((0, 2), 4)
    with pytest.raises(InvalidInstanceError):
        Antichains((1, None))
    ex = Explicit(((1, 0),))
    assert ex.sets == ((), (0, 1))
    assert ex.allows((1, 0), 2) and not ex.allows((0,), 2)


def test_assignment_validation():
    vg = VgInstance(objects=(((1, F(1, 2)),), ((1, F(1, 2)),)),
                    bins=(VgBin(F(1, 2), 1), VgBin(F(1, 2), 1)), family=AtMostOne(), granularity=2)
    VgAssignment(((0, 0, 0), (1, 0, 1))).validate(vg)
    with pytest.raises(InvalidInstanceError):
        VgAssignment(((0, 0, 0), (1, 0, 0))).validate(vg)
    with pytest.raises(InvalidInstanceError):
        VgAssignment(((0, 0, 0), (0, 0, 1))).validate(vg)
    with pytest.raises(InvalidInstanceError):
        VgAssignment(((0, 3, 0),)).validate(vg)


def test_instance_validation():
    with pytest.raises(InvalidInstanceError):
        VgInstance(objects=(((1, F(1, 3)),),), bins=(), granularity=2)
    with pytest.raises(InvalidInstanceError):
        VgInstance(objects=(), bins=(VgBin(F(1, 3), 1),), granularity=2)
    with pytest.raises(InvalidInstanceError):
        VgInstance(objects=(((-1, 0),),), bins=(), granularity=2)
    with pytest.raises(InvalidInstanceError):
        VgBin(2, 1)


def test_object_options_include_empty_first():
    vg = random_versiongap(2, 2, 2, 4, seed=3, family="all")
    opts = object_options(vg, 0)
    assert opts[0][0] == () and opts[0][2] == 0


@pytest.mark.parametrize("seed", range(120))
def test_dp_matches_brute_force(seed):
    vg = random_versiongap(1 + seed % 6, 1 + seed % 3, 1 + seed % 3, 2 + seed % 7, seed=seed, single_prob=0.3)
    assign, profit = solve_versiongap(vg)
    fassign, fprofit = solve_versiongap(vg, exact=False)
    assign.validate(vg)
    fassign.validate(vg)
    _, best = brute_versiongap(vg)
    assert profit == best == fprofit


def test_dp_is_deterministic():
    vg = random_versiongap(6, 3, 3, 8, seed=5, family="tree")
    assert solve_versiongap(vg) == solve_versiongap(vg)


def test_budgets():
    vg = random_versiongap(6, 3, 3, 8, seed=1, family="all")
    with pytest.raises(BudgetExceededError):
        solve_versiongap(vg, max_states=10)
    with pytest.raises(BudgetExceededError):
        brute_versiongap(vg, budget=5)
    with pytest.raises(ValueError):
        random_versiongap(2, 2, 2, 4, family="nope")
