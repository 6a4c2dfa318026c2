"""Buyers, instances and mechanisms for K-unit posted pricing.

All probabilities and prices are held as :class:`fractions.Fraction` so that
evaluation, LP breakpoints and DP comparisons are exact.  A buyer's residual
probability mass (one minus the sum of its support masses) sits implicitly at
value zero: such a buyer rejects every positive price.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInstanceError

__all__ = [
    "SKIP",
    "to_fraction",
    "BuyerDistribution",
    "Instance",
    "SpmSchedule",
    "AspmNode",
    "AspmTree",
    "tail_probability",
    "probability_grid",
    "discretize",
    "random_instance",
]


class _Skip:
    """Sentinel price meaning "do not make this buyer an offer"."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "SKIP"

    def __reduce__(self):
        return (_Skip, ())


SKIP = _Skip()


def to_fraction(x) -> Fraction:
    """Convert ints, decimal or ``p/q`` strings, floats and mpq to Fraction.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InvalidInstanceError(f"non-finite number {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInstanceError(f"cannot parse number {x!r}") from exc
    # gmpy2.mpq and numpy integers
    try:
        return Fraction(int(x.numerator), int(x.denominator))
    except AttributeError:
        raise InvalidInstanceError(f"unsupported number type {type(x).__name__}") from None


@dataclass(frozen=True)
class BuyerDistribution:
    """Discrete value distribution of one buyer.

    ``values`` are strictly increasing and positive; ``masses[j]`` is the
    probability of ``values[j]``.  ``tails[j]`` caches the success
    probability of posting ``values[j]``.
    """

    values: tuple
    masses: tuple
    tails: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = tuple(to_fraction(v) for v in self.values)
        masses = tuple(to_fraction(m) for m in self.masses)
        if len(values) != len(masses):
            raise InvalidInstanceError("values and masses differ in length")
        if not values:
            raise InvalidInstanceError("a buyer needs at least one support point")
        if values[0] <= 0:
            raise InvalidInstanceError("support values must be positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidInstanceError("support values must be strictly increasing")
        if any(m <= 0 for m in masses):
            raise InvalidInstanceError("support masses must be positive")
        tails = []
        acc = Fraction(0)
        for m in reversed(masses):
            acc += m
            tails.append(acc)
        tails.reverse()
        if tails[0] > 1:
            raise InvalidInstanceError(f"support masses sum to {tails[0]} > 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "tails", tuple(tails))

    @classmethod
    def from_support(cls, support: Iterable) -> "BuyerDistribution":
        """Build from ``(value, mass)`` pairs."""
        pairs = [(to_fraction(v), to_fraction(m)) for v, m in support]
        return cls(tuple(v for v, _ in pairs), tuple(m for _, m in pairs))

    @classmethod
    def from_tails(cls, values: Sequence, tails: Sequence) -> "BuyerDistribution":
        """Build from support values and the success probability at each."""
        values = [to_fraction(v) for v in values]
        tails = [to_fraction(t) for t in tails]
        nxt = tails[1:] + [Fraction(0)]
        return cls(tuple(values), tuple(t - u for t, u in zip(tails, nxt)))

    @property
    def support(self):
        return tuple(zip(self.values, self.masses))

    def menu(self):
        """``(price, success probability)`` for every support value."""
        return tuple(zip(self.values, self.tails))

    def tail(self, v) -> Fraction:
        if v is SKIP:
            return Fraction(0)
        idx = bisect.bisect_left(self.values, v)
        return self.tails[idx] if idx < len(self.tails) else Fraction(0)

    def __len__(self):
        return len(self.values)


def tail_probability(b: BuyerDistribution, v) -> Fraction:
    """Probability that a buyer with distribution ``b`` accepts price ``v``."""
    v = to_fraction(v)
    if v <= 0:
        raise ValueError("price must be positive")
    return b.tail(v)


@dataclass(frozen=True)
class Instance:
    buyers: tuple
    copies: int
    allow_excess_copies: bool = False

    def __post_init__(self):
        object.__setattr__(self, "buyers", tuple(self.buyers))
        if not self.buyers:
            raise InvalidInstanceError("an instance needs at least one buyer")
        if not all(isinstance(b, BuyerDistribution) for b in self.buyers):
            raise InvalidInstanceError("buyers must be BuyerDistribution objects")
        if int(self.copies) != self.copies or self.copies < 1:
            raise InvalidInstanceError("copies must be a positive integer")
        object.__setattr__(self, "copies", int(self.copies))
        if self.copies > len(self.buyers) and not self.allow_excess_copies:
            raise InvalidInstanceError(
                f"K={self.copies} exceeds n={len(self.buyers)}; pass allow_excess_copies=True"
            )

    @property
    def n(self) -> int:
        return len(self.buyers)

    @property
    def max_support(self) -> int:
        return max(len(b) for b in self.buyers)

    def with_copies(self, k: int) -> "Instance":
        return Instance(self.buyers, k, allow_excess_copies=k > self.n or self.allow_excess_copies)

    def menus(self):
        return [b.menu() for b in self.buyers]


@dataclass(frozen=True)
class SpmSchedule:
    """Non-adaptive mechanism: offers made in order, one per buyer."""

    steps: tuple

    def __post_init__(self):
        steps = []
        for buyer, price in self.steps:
            steps.append((int(buyer), price if price is SKIP else to_fraction(price)))
        object.__setattr__(self, "steps", tuple(steps))

    @property
    def buyers(self):
        return tuple(b for b, _ in self.steps)

    def offers(self):
        """Steps that actually post a price."""
        return tuple((b, p) for b, p in self.steps if p is not SKIP)

    def validate(self, inst: Instance) -> None:
        seen = set()
        for buyer, price in self.steps:
            if not 0 <= buyer < inst.n:
                raise InvalidInstanceError(f"schedule references unknown buyer {buyer}")
            if buyer in seen:
                raise InvalidInstanceError(f"buyer {buyer} appears twice in schedule")
            seen.add(buyer)
            if price is not SKIP and price not in inst.buyers[buyer].values:
                raise InvalidInstanceError(f"price {price} is not in buyer {buyer}'s support")

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class AspmNode:
    buyer: int
    price: Fraction
    on_sale: int | None = None
    on_no_sale: int | None = None


@dataclass(frozen=True)
class AspmTree:
    """Adaptive mechanism as a decision graph.

    Each node offers ``price`` to ``buyer`` and moves to ``on_sale`` or
    ``on_no_sale`` (``None`` is a leaf).  Children may be shared, so the
    structure is a DAG whose root-to-leaf paths are the decision-tree paths.
    """

    nodes: tuple
    root: int | None = 0

    def __post_init__(self):
        nodes = tuple(
            AspmNode(int(nd.buyer), to_fraction(nd.price), nd.on_sale, nd.on_no_sale) for nd in self.nodes
        )
        object.__setattr__(self, "nodes", nodes)
        if not nodes:
            object.__setattr__(self, "root", None)

    def children(self, idx):
        nd = self.nodes[idx]
        return [c for c in (nd.on_sale, nd.on_no_sale) if c is not None]

    def topological_order(self):
        """Reachable node indices, parents before children; rejects cycles."""
        if self.root is None:
            return []
        n = len(self.nodes)
        state = [0] * n
        order = []
        stack = [(self.root, False)]
        while stack:
            idx, done = stack.pop()
            if not 0 <= idx < n:
                raise InvalidInstanceError(f"child index {idx} out of range")
            if done:
                state[idx] = 2
                order.append(idx)
                continue
            if state[idx] == 2:
                continue
            if state[idx] == 1:
                raise InvalidInstanceError("decision graph contains a cycle")
            state[idx] = 1
            stack.append((idx, True))
            for c in self.children(idx):
                if not 0 <= c < n:
                    raise InvalidInstanceError(f"child index {c} out of range")
                if state[c] == 1:
                    raise InvalidInstanceError("decision graph contains a cycle")
                if state[c] == 0:
                    stack.append((c, False))
        order.reverse()
        return order

    def validate(self, inst: Instance) -> None:
        order = self.topological_order()
        if not order:
            return
        ancestors = {self.root: 0}
        max_sales = {self.root: 0}
        for idx in order:
            nd = self.nodes[idx]
            if not 0 <= nd.buyer < inst.n:
                raise InvalidInstanceError(f"node {idx} references unknown buyer {nd.buyer}")
            if nd.price not in inst.buyers[nd.buyer].values:
                raise InvalidInstanceError(f"node {idx} price {nd.price} not in buyer support")
            bit = 1 << nd.buyer
            if ancestors[idx] & bit:
                raise InvalidInstanceError(f"buyer {nd.buyer} offered twice on a path through node {idx}")
            if max_sales[idx] > inst.copies:
                raise InvalidInstanceError(f"node {idx} is reachable after more than {inst.copies} sales")
            below = ancestors[idx] | bit
            for c, sold in ((nd.on_sale, 1), (nd.on_no_sale, 0)):
                if c is None:
                    continue
                ancestors[c] = ancestors.get(c, 0) | below
                max_sales[c] = max(max_sales.get(c, 0), max_sales[idx] + sold)

    def depth(self) -> int:
        order = self.topological_order()
        d = {}
        for idx in reversed(order):
            d[idx] = 1 + max((d[c] for c in self.children(idx)), default=0)
        return d[self.root] if order else 0

    @classmethod
    def from_schedule(cls, schedule: SpmSchedule, copies: int) -> "AspmTree":
        """Path-shaped mechanism equivalent to ``schedule``.

        Nodes are indexed by (step, copies sold) so no node sits past the
        K-th sale.
        """
        offers = schedule.offers()
        index = {}
        nodes = []

        def build(step, sold):
            if step == len(offers) or sold == copies:
                return None
            key = (step, sold)
            if key in index:
                return index[key]
            idx = len(nodes)
            index[key] = idx
            nodes.append(None)
            sale = build(step + 1, sold + 1)
            no_sale = build(step + 1, sold)
            buyer, price = offers[step]
            nodes[idx] = AspmNode(buyer, price, sale, no_sale)
            return idx

        root = build(0, 0)
        return cls(tuple(nodes), root)


def probability_grid(n: int) -> int:
    """Denominator of the tail-probability grid for ``n`` buyers."""
    return 10 * n * n


def _snap_down(v: Fraction, anchor: Fraction, ratio: Fraction) -> Fraction:
    # largest anchor * ratio**k that is <= v
    k = max(0, math.floor(math.log(float(anchor / v)) / -math.log(float(ratio))))
    g = anchor * ratio**k
    while g > v:
        k += 1
        g *= ratio
    while k > 0 and g / ratio <= v:
        k -= 1
        g /= ratio
    return g


def discretize(inst: Instance, snap_values: bool = False) -> Instance:
    """Round every success probability up to a multiple of ``1/(10 n^2)``.

    Each point's value is rescaled so that ``value * tail`` is unchanged.
    Points that end up dominated (another point with at least the same
    success probability and at least the same value) are dropped.  With
    ``snap_values`` the values are first snapped down to powers of
    ``1 - 1/n^2`` times the largest value; that stage loses up to a
    ``1/n^2`` fraction of each point's revenue and is not idempotent.
    """
    n = inst.n
    q = probability_grid(n)
    anchor = max(b.values[-1] for b in inst.buyers)
    ratio = 1 - Fraction(1, max(n, 2) ** 2)
    buyers = []
    for b in inst.buyers:
        pts = list(b.menu())
        if snap_values:
            cells = {}
            for v, t in pts:
                g = _snap_down(v, anchor, ratio)
                cells[g] = max(cells.get(g, Fraction(0)), t)
            pts = sorted(cells.items())
        rounded = []
        for v, t in pts:
            t2 = Fraction(math.ceil(t * q), q)
            if t2 > 1:
                raise InvalidInstanceError("rounded success probability exceeds 1")
            rounded.append((v * t / t2, t2))
        rounded.sort(key=lambda p: (-p[1], -p[0]))
        kept = []
        for v, t in rounded:
            if not kept or v > kept[-1][0]:
                kept.append((v, t))
        buyers.append(BuyerDistribution.from_tails([v for v, _ in kept], [t for _, t in kept]))
    return Instance(tuple(buyers), inst.copies, inst.allow_excess_copies)


def random_instance(
    n: int,
    copies: int,
    max_support: int,
    value_range=(1, 100),
    seed: int = 0,
    min_tail=0,
    fixed_support: bool = False,
) -> Instance:
    """Seeded instance already on the discretization grid.

    Values are distinct integers drawn from ``value_range`` (inclusive);
    success probabilities are multiples of ``1/(10 n^2)`` strictly above
    ``min_tail``.  Each buyer gets between 1 and ``max_support`` points, or
    exactly ``max_support`` with ``fixed_support``.
    """
    if n < 1 or copies < 1 or max_support < 1:
        raise ValueError("need n >= 1, copies >= 1, max_support >= 1")
    if copies > n:
        raise ValueError(f"copies={copies} exceeds n={n}")
    lo, hi = (int(x) for x in value_range)
    if lo < 1 or hi - lo + 1 < max_support:
        raise ValueError(f"value range {value_range} cannot hold {max_support} distinct positive values")
    q = probability_grid(n)
    t_lo = max(1, math.floor(to_fraction(min_tail) * q) + 1)
    if q - t_lo + 1 < max_support:
        raise ValueError(f"grid 1/{q} above min_tail={min_tail} cannot hold {max_support} distinct tails")
    rng = np.random.default_rng(seed)
    buyers = []
    for _ in range(n):
        size = max_support if fixed_support else int(rng.integers(1, max_support + 1))
        values = np.sort(rng.choice(np.arange(lo, hi + 1), size=size, replace=False))
        tails = np.sort(rng.choice(np.arange(t_lo, q + 1), size=size, replace=False))[::-1]
        buyers.append(
            BuyerDistribution.from_tails([int(v) for v in values], [Fraction(int(t), q) for t in tails])
        )
    return Instance(tuple(buyers), copies)
