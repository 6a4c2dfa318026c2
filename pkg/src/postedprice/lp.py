"""LP relaxation of K-unit posted pricing and the SPM built from it.

The relaxation lets each buyer take a fractional mix of prices subject to
selling at most K copies in expectation.  Dropping the K constraint with a
per-sale cost ``tau`` decouples the buyers: each independently takes the
price maximizing ``(v - tau) * tail(v)``.  The optimal ``tau`` is one of
finitely many breakpoints (support values and pairwise crossings inside a
buyer's menu), so it is found exactly by searching those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .evaluation import eval_spm
from .model import Instance, SpmSchedule

__all__ = [
    "LpPart",
    "StructuredLpSolution",
    "lagrangian_assign",
    "expected_sales",
    "solve_lp",
    "solve_lp_float",
    "build_lp_spm",
    "approximation_bound",
    "expected_min_poisson",
]


def _argmax(menu, tau):
    # best (v, t) with v >= tau and positive (v - tau) * t; ties to larger v
    best, pick = Fraction(0), None
    for v, t in menu:
        if v < tau:
            continue
        m = (v - tau) * t
        if m > best or (m == best and pick is not None and m > 0):
            best, pick = m, (v, t)
    return pick, best


def lagrangian_assign(inst: Instance, tau):
    """Per-buyer ``(price or None, marginal)`` for sale cost ``tau``."""
    tau = Fraction(tau)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    out = []
    for menu in inst.menus():
        pick, best = _argmax(menu, tau)
        out.append((None if pick is None else pick[0], best))
    return out


def expected_sales(inst: Instance, tau) -> Fraction:
    """Expected copies sold by the Lagrangian assignment at ``tau``."""
    tau = Fraction(tau)
    total = Fraction(0)
    for menu in inst.menus():
        pick, _ = _argmax(menu, tau)
        if pick is not None:
            total += pick[1]
    return total


@dataclass(frozen=True)
class LpPart:
    buyer: int
    price: Fraction
    tail: Fraction
    fraction: Fraction

    @property
    def sales(self) -> Fraction:
        return self.tail * self.fraction

    @property
    def revenue(self) -> Fraction:
        return self.price * self.tail * self.fraction


@dataclass(frozen=True)
class StructuredLpSolution:
    """Optimal LP solution with one price per buyer.

    ``parts[i]`` is buyer ``i``'s assignment (``None`` when it gets no
    offer).  ``split`` carries the second price of the single boundary buyer
    when the optimum needs that buyer mixed across two prices, which happens
    when ``tau_star`` sits on a crossing of two of its options.
    """

    parts: tuple
    split: LpPart | None
    tau_star: Fraction
    objective: Fraction

    def prices(self):
        return tuple(None if p is None else p.price for p in self.parts)

    def fractions(self):
        return tuple(Fraction(0) if p is None else p.fraction for p in self.parts)

    def all_parts(self):
        parts = [p for p in self.parts if p is not None]
        if self.split is not None:
            parts.append(self.split)
        return parts

    @property
    def expected_sales(self) -> Fraction:
        return sum((p.sales for p in self.all_parts()), Fraction(0))

    def y(self):
        """Sale probabilities ``y = tail * x`` keyed by (buyer, price)."""
        return {(p.buyer, p.price): p.sales for p in self.all_parts()}

    def fractional_buyers(self):
        out = [p.buyer for p in self.parts if p is not None and p.fraction < 1]
        if self.split is not None and self.split.buyer not in out:
            out.append(self.split.buyer)
        return out


def _breakpoints(inst: Instance):
    cands = {Fraction(0)}
    for menu in inst.menus():
        for j, (v1, t1) in enumerate(menu):
            cands.add(v1)
            for v2, t2 in menu[j + 1 :]:
                # (v1 - tau) t1 == (v2 - tau) t2; t1 > t2 since v1 < v2
                tau = (v1 * t1 - v2 * t2) / (t1 - t2)
                if tau > 0:
                    cands.add(tau)
    return sorted(cands)


def solve_lp(inst: Instance) -> StructuredLpSolution:
    """Exact optimum of the LP relaxation, in structured form."""
    k = inst.copies
    menus = inst.menus()
    cands = _breakpoints(inst)
    if expected_sales(inst, 0) <= k:
        tau = Fraction(0)
    else:
        lo, hi = 0, len(cands) - 1  # sales(cands[lo]) > k >= sales(cands[hi])
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if expected_sales(inst, cands[mid]) <= k:
                hi = mid
            else:
                lo = mid
        tau = cands[hi]

    parts = []
    movable = []
    for i, menu in enumerate(menus):
        pick, best = _argmax(menu, tau)
        tied = [(v, t) for v, t in menu if v >= tau and (v - tau) * t == best and (best > 0 or v == tau)]
        parts.append(None if pick is None else LpPart(i, pick[0], pick[1], Fraction(1)))
        if tau > 0 and tied:
            high = max(tied, key=lambda o: o[1])
            low_tail = Fraction(0) if pick is None else pick[1]
            if high[1] > low_tail:
                movable.append((i, high))

    split = None
    if tau > 0:
        room = k - sum((p.sales for p in parts if p is not None), Fraction(0))
        movable.sort(key=lambda m: (-(m[1][0] * m[1][1]), m[0]))
        for i, (v, t) in movable:
            if room <= 0:
                break
            low = parts[i]
            gain = t - (Fraction(0) if low is None else low.tail)
            if gain <= room:
                parts[i] = LpPart(i, v, t, Fraction(1))
                room -= gain
                continue
            theta = room / gain
            if low is None:
                parts[i] = LpPart(i, v, t, theta)
            else:
                parts[i] = LpPart(i, low.price, low.tail, 1 - theta)
                split = LpPart(i, v, t, theta)
            room = Fraction(0)

    all_parts = [p for p in parts if p is not None] + ([split] if split else [])
    objective = sum((p.revenue for p in all_parts), Fraction(0))
    dual = k * tau + sum((_argmax(m, tau)[1] for m in menus), Fraction(0))
    assert objective == dual, "primal and Lagrangian values disagree"
    return StructuredLpSolution(tuple(parts), split, tau, objective)


def solve_lp_float(inst: Instance, tol: float = 1e-12) -> float:
    """Floating-point LP value by bisection on ``tau``.

    Kept for large inputs; agrees with :func:`solve_lp` to roughly ``tol``
    times the largest value.
    """
    k = inst.copies
    menus = [[(float(v), float(t)) for v, t in m] for m in inst.menus()]

    def sales(tau):
        s = 0.0
        for menu in menus:
            best, bt = 0.0, 0.0
            for v, t in menu:
                m = (v - tau) * t
                if m > best or (m == best and m > 0):
                    best, bt = m, t
            s += bt
        return s

    def dual(tau):
        return k * tau + sum(max(0.0, max((v - tau) * t for v, t in m)) for m in menus)

    if sales(0.0) <= k:
        return dual(0.0)
    lo, hi = 0.0, max(v for m in menus for v, _ in m)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if sales(mid) <= k:
            hi = mid
        else:
            lo = mid
    return min(dual(lo), dual(hi))


def build_lp_spm(inst: Instance, solution: StructuredLpSolution | None = None) -> SpmSchedule:
    """Offer each LP-assigned price, visiting buyers by decreasing price.

    The fractional buyer is offered its price outright and goes last among
    equal prices.  A buyer mixed across two prices is offered whichever of
    the two gives the larger exact revenue (the first on ties).
    """
    sol = solve_lp(inst) if solution is None else solution
    frac = set(sol.fractional_buyers())

    def schedule(prices):
        steps = [(i, p) for i, p in enumerate(prices) if p is not None]
        steps.sort(key=lambda s: (-s[1], s[0] in frac, s[0]))
        return SpmSchedule(tuple(steps))

    prices = list(sol.prices())
    best = schedule(prices)
    if sol.split is not None:
        alt = list(prices)
        alt[sol.split.buyer] = sol.split.price
        other = schedule(alt)
        if eval_spm(inst, other) > eval_spm(inst, best):
            best = other
    return best


def _log_poisson_peak(k: int) -> float:
    # log(K^K / (K! e^K))
    return k * math.log(k) - math.lgamma(k + 1) - k


def approximation_bound(k: int) -> float:
    """``1 - K^K / (K! e^K)``, the LP-SPM guarantee for K copies."""
    if k < 1:
        raise ValueError("K must be >= 1")
    return -math.expm1(_log_poisson_peak(k))


def expected_min_poisson(k: int) -> float:
    """``E[min(P, K)]`` for ``P ~ Poisson(K)``, i.e. ``K - K^(K+1)/(K! e^K)``."""
    if k < 1:
        raise ValueError("K must be >= 1")
    return k - math.exp(math.log(k) + _log_poisson_peak(k))
