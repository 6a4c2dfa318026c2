import json
import pickle
from fractions import Fraction as F

import gmpy2
import pytest

from postedprice import (
    SKIP,
    AspmNode,
    AspmTree,
    BuyerDistribution,
    Instance,
    InvalidInstanceError,
    SpmSchedule,
    discretize,
    random_instance,
    tail_probability,
)
from postedprice.model import probability_grid, to_fraction
from postedprice.serialize import (
    format_rational,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    load_mechanism,
    mechanism_from_dict,
    mechanism_to_dict,
    save_instance,
    save_mechanism,
)


def test_to_fraction_inputs():
    assert to_fraction(0.1) == F(1, 10)
    assert to_fraction("3/7") == F(3, 7)
    assert to_fraction(" 0.25 ") == F(1, 4)
    assert to_fraction(gmpy2.mpq(2, 3)) == F(2, 3)
    assert to_fraction(5) == F(5)
    with pytest.raises(InvalidInstanceError):
        to_fraction("abc")
    with pytest.raises(InvalidInstanceError):
        to_fraction(float("nan"))
    with pytest.raises(InvalidInstanceError):
        to_fraction(object())


def test_tail_probability_examples():
    b = BuyerDistribution.from_support([(1, 0.5), (2, 0.5)])
    assert tail_probability(b, 1) == 1
    assert tail_probability(b, 2) == F(1, 2)
    assert tail_probability(b, F(3, 2)) == F(1, 2)
    assert tail_probability(b, 3) == 0
    assert tail_probability(b, F(1, 2)) == 1
    with pytest.raises(ValueError):
        tail_probability(b, 0)


def test_residual_mass_sits_at_zero():
    b = BuyerDistribution.from_tails([1, 10], [1, F(1, 10)])
    assert b.masses == (F(9, 10), F(1, 10))
    c = BuyerDistribution.from_support([(3, F(1, 4))])
    assert c.tails == (F(1, 4),)
    assert c.tail(1) == F(1, 4)


@pytest.mark.parametrize("values, masses", [
    ((), ()),
    ((0, 1), (F(1, 2), F(1, 2))),
    ((2, 1), (F(1, 2), F(1, 2))),
    ((1, 2), (F(3, 4), F(1, 2))),
    ((1,), (0,)),
    ((1, 2), (F(1, 2),)),
])
def test_buyer_rejects_bad_support(values, masses):
    with pytest.raises(InvalidInstanceError):
        BuyerDistribution(values, masses)


def test_instance_checks_copies():
    b = BuyerDistribution.from_support([(1, 1)])
    with pytest.raises(InvalidInstanceError):
        Instance((b,), 2)
    assert Instance((b,), 2, allow_excess_copies=True).copies == 2
    with pytest.raises(InvalidInstanceError):
        Instance((b,), 0)
    with pytest.raises(InvalidInstanceError):
        Instance((), 1)
    assert Instance((b, b), 1).with_copies(3).allow_excess_copies


def test_schedule_validation():
    inst = random_instance(3, 1, 2, seed=1)
    b0 = inst.buyers[0].values[0]
    SpmSchedule(((0, b0), (1, SKIP))).validate(inst)
    with pytest.raises(InvalidInstanceError):
        SpmSchedule(((0, b0), (0, b0))).validate(inst)
    with pytest.raises(InvalidInstanceError):
        SpmSchedule(((5, b0),)).validate(inst)
    with pytest.raises(InvalidInstanceError):
        SpmSchedule(((0, b0 + F(1, 3)),)).validate(inst)


def test_tree_validation():
    b = BuyerDistribution.from_support([(1, F(1, 2)), (2, F(1, 2))])
    inst = Instance((b, b), 1)
    # a sale child after the last copy is harmless: it is never reached
    AspmTree((AspmNode(0, 2, 1, 1), AspmNode(1, 1))).validate(inst)
    with pytest.raises(InvalidInstanceError):
        AspmTree((AspmNode(0, 2, 1, None), AspmNode(0, 1))).validate(inst)
    with pytest.raises(InvalidInstanceError):
        AspmTree((AspmNode(0, 2, 0, None),)).validate(inst)
    with pytest.raises(InvalidInstanceError):
        AspmTree((AspmNode(0, 2, 3, None),)).validate(inst)
    b3 = BuyerDistribution.from_support([(1, F(1, 2))])
    deep = Instance((b3, b3, b3), 1)
    with pytest.raises(InvalidInstanceError):
        AspmTree((AspmNode(0, 1, 1), AspmNode(1, 1, 2), AspmNode(2, 1))).validate(deep)


def test_tree_from_schedule_shape():
    inst = random_instance(4, 2, 2, seed=3)
    sched = SpmSchedule(tuple((i, inst.buyers[i].values[0]) for i in range(4)))
    tree = AspmTree.from_schedule(sched, 2)
    tree.validate(inst)
    assert tree.depth() == 4
    assert len(tree.nodes) <= 2 * 4


def test_skip_is_singleton():
    assert pickle.loads(pickle.dumps(SKIP)) is SKIP
    assert repr(SKIP) == "SKIP"


def test_random_instance_is_seeded_and_on_grid():
    a = random_instance(5, 2, 3, seed=9)
    assert a == random_instance(5, 2, 3, seed=9)
    assert a != random_instance(5, 2, 3, seed=10)
    q = probability_grid(5)
    for b in a.buyers:
        assert all((t * q).denominator == 1 for t in b.tails)
        assert all(v.denominator == 1 and 1 <= v <= 100 for v in b.values)
    big = random_instance(4, 1, 2, seed=0, min_tail=F(1, 2))
    assert all(t > F(1, 2) for b in big.buyers for t in b.tails)
    fixed = random_instance(4, 1, 3, seed=0, fixed_support=True)
    assert all(len(b) == 3 for b in fixed.buyers)
    with pytest.raises(ValueError):
        random_instance(2, 3, 1)
    with pytest.raises(ValueError):
        random_instance(2, 1, 5, value_range=(1, 3))


def test_discretize_keeps_point_revenue():
    b = BuyerDistribution.from_tails([10, 20], [F(1, 3), F(1, 7)])
    inst = Instance((b, b), 1)
    out = discretize(inst)
    q = probability_grid(2)
    for orig, new in zip(inst.buyers, out.buyers):
        assert all((t * q).denominator == 1 for t in new.tails)
        assert sorted(v * t for v, t in new.menu()) == sorted(v * t for v, t in orig.menu())
    assert discretize(out) == out


def test_discretize_snaps_values():
    b = BuyerDistribution.from_tails([37, 100], [F(1, 2), F(1, 5)])
    out = discretize(Instance((b, b, b), 1), snap_values=True)
    for buyer in out.buyers:
        for v, t in buyer.menu():
            assert v * t <= 100
    assert out.n == 3


def test_format_rational():
    assert format_rational(F(1, 4)) == "0.25"
    assert format_rational(F(-1, 8)) == "-0.125"
    assert format_rational(F(1, 3)) == "1/3"
    assert format_rational(F(7)) == "7"
    assert format_rational(F(1, 40)) == "0.025"
    assert to_fraction(format_rational(F(22, 7))) == F(22, 7)


def test_instance_round_trip(tmp_path):
    inst = random_instance(6, 3, 4, seed=11)
    assert instance_from_dict(json.loads(json.dumps(instance_to_dict(inst)))) == inst
    path = tmp_path / "i.json"
    save_instance(inst, path)
    assert load_instance(path) == inst
    with pytest.raises(InvalidInstanceError):
        instance_from_dict({"buyers": []})


def test_mechanism_round_trip(tmp_path):
    sched = SpmSchedule(((2, F(5)), (0, SKIP), (1, F(7, 3))))
    assert mechanism_from_dict(mechanism_to_dict(sched)) == sched
    tree = AspmTree((AspmNode(0, F(2), 1, None), AspmNode(1, F(1, 3))))
    save_mechanism(tree, tmp_path / "t.json")
    assert load_mechanism(tmp_path / "t.json") == tree
    with pytest.raises(InvalidInstanceError):
        mechanism_from_dict({"type": "other"})
    with pytest.raises(TypeError):
        mechanism_to_dict(3)
