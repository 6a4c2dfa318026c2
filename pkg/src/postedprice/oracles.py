"""Exponential-time exact optima, used as ground truth.

The best SPM is found by trying every price vector (with "skip") and
visiting buyers by decreasing price, which is optimal for fixed prices.
The best ASPM comes from a DP over (remaining buyers, copies left): the
optimal continuation depends on nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np

from . import kernels
from .errors import BudgetExceededError
from .evaluation import eval_aspm, eval_spm, order_by_decreasing_price
from .model import AspmNode, AspmTree, Instance

__all__ = ["OracleBudget", "brute_spm_opt", "exact_aspm_opt", "subset_values", "adaptivity_gap"]


@dataclass(frozen=True)
class OracleBudget:
    """Limits on price vectors tried and DP states stored."""

    max_enumeration: int = 2_000_000
    max_states: int = 1 << 22

    def __post_init__(self):
        if self.max_enumeration < 1 or self.max_states < 1:
            raise ValueError("budget limits must be positive")


def _float_revenues(inst: Instance, choice: np.ndarray, price_tab, tail_tab) -> np.ndarray:
    # choice[r, b] = option index for buyer b in row r (0 = skip)
    rows, n = choice.shape
    cols = np.arange(n)
    price = price_tab[cols, choice]
    tail = tail_tab[cols, choice]
    order = np.argsort(-price, axis=1, kind="stable")
    price = np.take_along_axis(price, order, axis=1)
    tail = np.take_along_axis(tail, order, axis=1)
    k = inst.copies
    stock = np.zeros((rows, k + 1))
    stock[:, 0] = 1.0
    revenue = np.zeros(rows)
    for j in range(n):
        p = tail[:, j][:, None]
        revenue += price[:, j] * tail[:, j] * stock[:, :k].sum(axis=1)
        moved = stock[:, :k] * p
        stock[:, :k] -= moved
        stock[:, 1:] += moved
    return revenue


def brute_spm_opt(inst: Instance, budget: OracleBudget | None = None, allow_skip: bool = True):
    """Optimal SPM by exhaustive price-vector search; ``(schedule, value)``.

    Candidates are screened in floating point, and every vector within a
    small relative margin of the best is re-evaluated exactly, so the
    returned value is the exact optimum.  Among exact ties the first
    vector in enumeration order wins (options ordered skip, then ascending
    price, buyer 0 varying slowest).
    """
    budget = budget or OracleBudget()
    menus = inst.menus()
    sizes = [len(m) + (1 if allow_skip else 0) for m in menus]
    total = math.prod(sizes)
    if total > budget.max_enumeration:
        raise BudgetExceededError(f"{total} price vectors exceed budget {budget.max_enumeration}")
    width = max(len(m) for m in menus) + 1
    price_tab = np.zeros((inst.n, width))
    tail_tab = np.zeros((inst.n, width))
    for b, menu in enumerate(menus):
        for j, (v, t) in enumerate(menu):
            price_tab[b, j + 1] = float(v)
            tail_tab[b, j + 1] = float(t)
    offset = 0 if allow_skip else 1
    grids = np.meshgrid(*[np.arange(offset, offset + s) for s in sizes], indexing="ij")
    choice = np.stack([g.ravel() for g in grids], axis=1) if inst.n else np.zeros((1, 0), dtype=int)

    best_val, best_sched = None, None
    chunk = 1 << 16
    for start in range(0, total, chunk):
        block = choice[start : start + chunk]
        rev = _float_revenues(inst, block, price_tab, tail_tab)
        top = rev.max()
        cand = np.nonzero(rev >= top - 1e-9 * max(1.0, abs(top)))[0]
        for r in cand:
            prices = [None if c == 0 else menus[b][c - 1][0] for b, c in enumerate(block[r])]
            sched = order_by_decreasing_price(prices)
            val = eval_spm(inst, sched)
            if best_val is None or val > best_val:
                best_val, best_sched = val, sched
    return best_sched, best_val


def subset_values(inst: Instance, budget: OracleBudget | None = None, exact: bool = True):
    """Tables of the ASPM subset DP: ``(value, buyer, option)`` by ``[mask][k]``.

    Exact mode runs on rationals; otherwise on floats with the compiled
    kernel when available.
    """
    budget = budget or OracleBudget()
    states = (1 << inst.n) * (inst.copies + 1)
    if states > budget.max_states:
        raise BudgetExceededError(f"{states} DP states exceed budget {budget.max_states}")
    if exact:
        menus = [[(gmpy2.mpq(v.numerator, v.denominator), gmpy2.mpq(t.numerator, t.denominator)) for v, t in m]
                 for m in inst.menus()]
        return kernels.python.subset_dp(menus, inst.copies, zero=gmpy2.mpq(0), one=gmpy2.mpq(1))
    menus = [[(float(v), float(t)) for v, t in m] for m in inst.menus()]
    return kernels.subset_dp(menus, inst.copies)


def _materialize(inst: Instance, pbuyer, popt) -> AspmTree:
    menus = inst.menus()
    nodes = []
    index = {}
    full = (1 << inst.n) - 1
    stack = [(full, inst.copies)]
    order = []
    # first pass assigns indices in DFS preorder, second fills children
    while stack:
        mask, k = stack.pop()
        if k == 0 or mask == 0 or (mask, k) in index or pbuyer[mask][k] < 0:
            continue
        index[(mask, k)] = len(order)
        order.append((mask, k))
        rest = mask ^ (1 << int(pbuyer[mask][k]))
        stack.append((rest, k))
        stack.append((rest, k - 1))
    for mask, k in order:
        b = int(pbuyer[mask][k])
        rest = mask ^ (1 << b)
        nodes.append(AspmNode(b, menus[b][int(popt[mask][k])][0], index.get((rest, k - 1)), index.get((rest, k))))
    return AspmTree(tuple(nodes), 0 if nodes else None)


def exact_aspm_opt(inst: Instance, budget: OracleBudget | None = None, exact: bool = True):
    """Optimal ASPM by subset DP; ``(tree, value)``.

    The tree shares equal (remaining buyers, copies) states, so it is a DAG
    of at most ``2^n K`` nodes.  With ``exact=False`` the policy comes from
    the floating DP and the value is the exact value of that policy.
    """
    value, pbuyer, popt = subset_values(inst, budget, exact)
    tree = _materialize(inst, pbuyer, popt)
    full = (1 << inst.n) - 1
    if exact:
        v = value[full][inst.copies]
        return tree, Fraction(int(v.numerator), int(v.denominator))
    return tree, eval_aspm(inst, tree)


def adaptivity_gap(inst: Instance, budget: OracleBudget | None = None) -> Fraction:
    """Ratio of optimal ASPM revenue to optimal SPM revenue (1 if both are 0)."""
    _, spm = brute_spm_opt(inst, budget)
    _, aspm = exact_aspm_opt(inst, budget)
    if spm == 0:
        return Fraction(1)
    return aspm / spm
