"""Exact and sampled revenue of posted-price mechanisms.

Also holds the two easy optimizations: the best order for fixed prices
(decreasing price) and the best copy-dependent prices for a fixed order.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import SKIP, AspmNode, AspmTree, Instance, SpmSchedule

__all__ = [
    "StockDistribution",
    "eval_spm",
    "eval_aspm",
    "eval_mechanism",
    "order_by_decreasing_price",
    "adaptive_prices_for_order",
    "monte_carlo",
]


@dataclass(frozen=True)
class StockDistribution:
    """Distribution of copies sold so far.

    ``probs[j]`` for ``j < K`` is the probability that exactly ``j`` copies
    are gone; ``probs[K]`` lumps every state with the stock exhausted.
    """

    probs: tuple

    @classmethod
    def initial(cls, copies: int) -> "StockDistribution":
        return cls((Fraction(1),) + (Fraction(0),) * copies)

    @property
    def copies(self) -> int:
        return len(self.probs) - 1

    @property
    def live(self):
        """Probability that at least one copy is left."""
        return sum(self.probs[:-1], Fraction(0))

    def after(self, p) -> "StockDistribution":
        """Distribution after an offer accepted with probability ``p``."""
        k = self.copies
        q = 1 - p
        out = [self.probs[0] * q]
        for j in range(1, k):
            out.append(self.probs[j] * q + self.probs[j - 1] * p)
        out.append(self.probs[k] + self.probs[k - 1] * p)
        return StockDistribution(tuple(out))


def eval_spm(inst: Instance, schedule: SpmSchedule, copies: int | None = None) -> Fraction:
    """Expected revenue of a non-adaptive schedule, exactly."""
    schedule.validate(inst)
    k = inst.copies if copies is None else copies
    if k == 0:
        return Fraction(0)
    stock = StockDistribution.initial(k)
    revenue = Fraction(0)
    for buyer, price in schedule.offers():
        p = inst.buyers[buyer].tail(price)
        revenue += price * p * stock.live
        stock = stock.after(p)
    return revenue


def eval_aspm(inst: Instance, tree: AspmTree, copies: int | None = None) -> Fraction:
    """Expected revenue of an adaptive mechanism, exactly."""
    tree.validate(inst)
    k = inst.copies if copies is None else copies
    order = tree.topological_order()
    if not order or k == 0:
        return Fraction(0)
    zero = (Fraction(0),) * (k + 1)
    value = {}
    for idx in reversed(order):
        nd = tree.nodes[idx]
        p = inst.buyers[nd.buyer].tail(nd.price)
        sale = zero if nd.on_sale is None else value[nd.on_sale]
        no_sale = zero if nd.on_no_sale is None else value[nd.on_no_sale]
        row = [Fraction(0)]
        for c in range(1, k + 1):
            row.append(p * (nd.price + sale[c - 1]) + (1 - p) * no_sale[c])
        value[idx] = tuple(row)
    return value[tree.root][k]


def eval_mechanism(inst: Instance, mech) -> Fraction:
    if isinstance(mech, SpmSchedule):
        return eval_spm(inst, mech)
    return eval_aspm(inst, mech)


def order_by_decreasing_price(prices) -> SpmSchedule:
    """Schedule visiting buyers by decreasing price, ties by buyer index.

    ``prices`` maps buyer index to price, or is a sequence indexed by buyer;
    ``None`` and ``SKIP`` entries are left out.
    """
    items = prices.items() if isinstance(prices, dict) else enumerate(prices)
    steps = [(b, p) for b, p in items if p is not None and p is not SKIP]
    steps.sort(key=lambda s: (-s[1], s[0]))
    return SpmSchedule(tuple(steps))


def adaptive_prices_for_order(inst: Instance, order, copies: int | None = None):
    """Best copy-dependent prices for a fixed visiting order.

    Returns ``(tree, value)``.  ``table[i][j]`` is the best revenue from the
    buyers at positions ``i..`` with ``j`` copies left; at each state the
    buyer is either skipped or offered one of its support values.  Ties
    prefer skipping, then the larger price.
    """
    order = [int(b) for b in order]
    if not order:
        raise ValueError("order must name at least one buyer")
    if len(set(order)) != len(order) or not all(0 <= b < inst.n for b in order):
        raise ValueError("order must list distinct, valid buyer indices")
    k = inst.copies if copies is None else copies
    m = len(order)
    table = [[Fraction(0)] * (k + 1) for _ in range(m + 1)]
    choice = [[None] * (k + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        menu = inst.buyers[order[i]].menu()
        for j in range(1, k + 1):
            best, pick = table[i + 1][j], SKIP
            for v, t in reversed(menu):
                val = t * (v + table[i + 1][j - 1]) + (1 - t) * table[i + 1][j]
                if val > best:
                    best, pick = val, v
            table[i][j] = best
            choice[i][j] = pick

    nodes = []
    index = {}

    def build(i, j):
        while i < m and j > 0 and choice[i][j] is SKIP:
            i += 1
        if i == m or j == 0:
            return None
        if (i, j) in index:
            return index[(i, j)]
        idx = len(nodes)
        index[(i, j)] = idx
        nodes.append(None)
        sale = build(i + 1, j - 1)
        no_sale = build(i + 1, j)
        nodes[idx] = AspmNode(order[i], choice[i][j], sale, no_sale)
        return idx

    root = build(0, k)
    return AspmTree(tuple(nodes), root), table[0][k]


def _sample_support_indices(inst: Instance, trials: int, rng) -> np.ndarray:
    # column b holds the sampled support index of buyer b, -1 for value zero
    out = np.empty((trials, inst.n), dtype=np.int64)
    for b, buyer in enumerate(inst.buyers):
        masses = np.array([float(m) for m in buyer.masses])
        p = np.concatenate(([max(0.0, 1.0 - masses.sum())], masses))
        out[:, b] = rng.choice(len(p), size=trials, p=p / p.sum()) - 1
    return out


def _price_index(inst: Instance, buyer: int, price) -> int:
    return bisect.bisect_left(inst.buyers[buyer].values, price)


def monte_carlo(inst: Instance, mechanism, trials: int, seed: int = 0):
    """Simulated mean revenue and its standard error.

    Buyer values are drawn independently each trial.  The standard error is
    ``nan`` for a single trial.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    draws = _sample_support_indices(inst, trials, rng)
    k = inst.copies
    revenue = np.zeros(trials)
    sold = np.zeros(trials, dtype=np.int64)
    if isinstance(mechanism, SpmSchedule):
        mechanism.validate(inst)
        for buyer, price in mechanism.offers():
            accept = (draws[:, buyer] >= _price_index(inst, buyer, price)) & (sold < k)
            revenue += accept * float(price)
            sold += accept
    else:
        mechanism.validate(inst)
        node = np.full(trials, -1 if mechanism.root is None else mechanism.root, dtype=np.int64)
        while True:
            active = node >= 0
            if not active.any():
                break
            nxt = node.copy()
            for u in np.unique(node[active]):
                nd = mechanism.nodes[u]
                here = node == u
                accept = here & (draws[:, nd.buyer] >= _price_index(inst, nd.buyer, nd.price))
                reject = here & ~accept
                revenue[accept] += float(nd.price)
                sold[accept] += 1
                nxt[accept] = -1 if nd.on_sale is None else nd.on_sale
                nxt[reject] = -1 if nd.on_no_sale is None else nd.on_no_sale
            nxt[sold >= k] = -1
            node = nxt
    mean = float(revenue.mean())
    se = float(revenue.std(ddof=1) / math.sqrt(trials)) if trials > 1 else float("nan")
    return mean, se
