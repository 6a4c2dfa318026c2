"""Generalized assignment with versions and per-bin discounts.

Each object offers several versions ``(profit, size)``.  A solution places
at most one version of an object in each bin, the set of bins an object uses
must belong to a feasible family, and every bin's total size stays within
its capacity.  A placement in bin ``b`` earns ``discount[b] * profit``.

The exact solver is a DP over objects whose state is the capacity used in
every bin, so it is polynomial for a fixed number of bins.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import numpy as np

from . import kernels
from .errors import BudgetExceededError, InvalidInstanceError
from .model import to_fraction

__all__ = [
    "VgBin",
    "AtMostOne",
    "Antichains",
    "Explicit",
    "VgInstance",
    "VgAssignment",
    "object_options",
    "solve_versiongap",
    "brute_versiongap",
    "random_versiongap",
]

DEFAULT_MAX_STATES = 2_000_000


@dataclass(frozen=True)
class VgBin:
    """A bin of the given capacity and discount.

    A ``single`` bin holds at most one object, whose size must lie in
    ``(min_size, capacity]``.
    """

    capacity: Fraction
    discount: Fraction
    single: bool = False
    min_size: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "capacity", to_fraction(self.capacity))
        object.__setattr__(self, "discount", to_fraction(self.discount))
        object.__setattr__(self, "min_size", to_fraction(self.min_size))
        if not 0 <= self.capacity <= 1:
            raise InvalidInstanceError("bin capacity must lie in [0, 1]")
        if not 0 <= self.discount <= 1:
            raise InvalidInstanceError("bin discount must lie in [0, 1]")

    def fits(self, size) -> bool:
        if self.single:
            return self.min_size < size <= self.capacity
        return size <= self.capacity


@dataclass(frozen=True)
class AtMostOne:
    """Each object goes to at most one bin."""

    def subsets(self, nbins):
        return [()] + [(b,) for b in range(nbins)]

    def allows(self, bins, nbins) -> bool:
        return len(bins) <= 1 and all(0 <= b < nbins for b in bins)


@dataclass(frozen=True)
class Antichains:
    """Bins form a forest; an object's bins must be pairwise unrelated.

    ``parents[b]`` is bin ``b``'s parent or ``None`` for a root, and every
    parent index must be smaller than its child's.
    """

    parents: tuple

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        for b, p in enumerate(self.parents):
            if p is not None and not 0 <= p < b:
                raise InvalidInstanceError("bin parents must precede their children")

    def _ancestors(self):
        anc = []
        for b, p in enumerate(self.parents):
            anc.append(0 if p is None else anc[p] | (1 << p))
        return anc

    def subsets(self, nbins):
        if nbins != len(self.parents):
            raise InvalidInstanceError("antichain family size does not match bin count")
        anc = self._ancestors()
        related = [anc[b] for b in range(nbins)]
        for c in range(nbins):
            for b in range(nbins):
                if anc[c] >> b & 1:
                    related[b] |= 1 << c
        out = []
        # extend by larger indices only, so each subset appears once, sorted
        frontier = [((), 0)]
        while frontier:
            out.extend(s for s, _ in frontier)
            nxt = []
            for s, blocked in frontier:
                start = s[-1] + 1 if s else 0
                for b in range(start, nbins):
                    if not blocked >> b & 1:
                        nxt.append((s + (b,), blocked | related[b]))
            frontier = nxt
        return out

    def allows(self, bins, nbins) -> bool:
        if nbins != len(self.parents) or not all(0 <= b < nbins for b in bins):
            return False
        anc = self._ancestors()
        return all(not (anc[a] >> b & 1 or anc[b] >> a & 1) for a, b in itertools.combinations(bins, 2))


@dataclass(frozen=True)
class Explicit:
    """Listed subsets of bin indices; the empty set is always added."""

    sets: tuple = ()

    def __post_init__(self):
        norm = {()}
        for s in self.sets:
            t = tuple(sorted(set(int(b) for b in s)))
            norm.add(t)
        object.__setattr__(self, "sets", tuple(sorted(norm, key=lambda t: (len(t), t))))

    def subsets(self, nbins):
        return [s for s in self.sets if all(0 <= b < nbins for b in s)]

    def allows(self, bins, nbins) -> bool:
        return tuple(sorted(bins)) in self.sets and all(0 <= b < nbins for b in bins)


@dataclass(frozen=True)
class VgInstance:
    """``objects[i]`` lists the ``(profit, size)`` versions of object ``i``."""

    objects: tuple
    bins: tuple
    family: object = field(default_factory=AtMostOne)
    granularity: int = 2

    def __post_init__(self):
        objs = tuple(tuple((to_fraction(p), to_fraction(s)) for p, s in vers) for vers in self.objects)
        object.__setattr__(self, "objects", objs)
        object.__setattr__(self, "bins", tuple(self.bins))
        m = self.granularity
        if int(m) != m or m < 2:
            raise InvalidInstanceError("granularity must be an integer >= 2")
        for vers in objs:
            for p, s in vers:
                if p < 0:
                    raise InvalidInstanceError("profits must be nonnegative")
                if not 0 <= s <= 1 or (s * m).denominator != 1:
                    raise InvalidInstanceError(f"size {s} is not a multiple of 1/{m} in [0, 1]")
        for b in self.bins:
            if (b.capacity * m).denominator != 1:
                raise InvalidInstanceError(f"capacity {b.capacity} is not a multiple of 1/{m}")

    @property
    def nbins(self) -> int:
        return len(self.bins)


@dataclass(frozen=True)
class VgAssignment:
    """Placements ``(object, version, bin)``, sorted."""

    placements: tuple

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple(sorted((int(o), int(v), int(b)) for o, v, b in self.placements)))

    def profit(self, vg: VgInstance) -> Fraction:
        return sum((vg.bins[b].discount * vg.objects[o][v][0] for o, v, b in self.placements), Fraction(0))

    def bins_of(self, obj):
        return tuple(b for o, _, b in self.placements if o == obj)

    def contents(self, nbins):
        """Per bin, the ``(object, version)`` pairs placed there."""
        out = [[] for _ in range(nbins)]
        for o, v, b in self.placements:
            out[b].append((o, v))
        return out

    def validate(self, vg: VgInstance) -> None:
        seen = set()
        used = [Fraction(0)] * vg.nbins
        count = [0] * vg.nbins
        per_obj = {}
        for o, v, b in self.placements:
            if not 0 <= o < len(vg.objects) or not 0 <= v < len(vg.objects[o]):
                raise InvalidInstanceError(f"unknown object/version ({o}, {v})")
            if not 0 <= b < vg.nbins:
                raise InvalidInstanceError(f"unknown bin {b}")
            if (o, b) in seen:
                raise InvalidInstanceError(f"object {o} placed twice in bin {b}")
            seen.add((o, b))
            size = vg.objects[o][v][1]
            if vg.bins[b].single and not vg.bins[b].fits(size):
                raise InvalidInstanceError(f"object {o} does not fit single bin {b}")
            used[b] += size
            count[b] += 1
            per_obj.setdefault(o, []).append(b)
        for b, bn in enumerate(vg.bins):
            if bn.single and count[b] > 1:
                raise InvalidInstanceError(f"single bin {b} holds {count[b]} objects")
            if used[b] > bn.capacity:
                raise InvalidInstanceError(f"bin {b} over capacity")
        for o, bins in per_obj.items():
            if not vg.family.allows(tuple(sorted(bins)), vg.nbins):
                raise InvalidInstanceError(f"object {o} uses an infeasible bin set {sorted(bins)}")


def _bin_caps(vg: VgInstance):
    return [1 if b.single else int(b.capacity * vg.granularity) for b in vg.bins]


def object_options(vg: VgInstance, obj: int, subsets=None, number=Fraction):
    """All ways to place object ``obj``: ``(placement, delta, gain)`` triples.

    ``placement`` is a tuple of ``(version, bin)``; ``delta[b]`` is the grid
    capacity it uses in bin ``b`` (one slot for single bins).  The empty
    placement comes first.  ``number`` converts the exact gains (for
    example to ``float``).
    """
    nb = vg.nbins
    m = vg.granularity
    vers = vg.objects[obj]
    if subsets is None:
        subsets = vg.family.subsets(nb)
    fit = []
    for bn in vg.bins:
        row = {}
        for v, (p, s) in enumerate(vers):
            if bn.fits(s):
                row[v] = (1 if bn.single else int(s * m), bn.discount * p)
        fit.append(row)
    out = []
    zero = (0,) * nb
    for subset in subsets:
        if not subset:
            out.append(((), zero, number(0)))
            continue
        for pick in itertools.product(*(fit[b] for b in subset)):
            delta = [0] * nb
            gain = Fraction(0)
            for b, v in zip(subset, pick):
                d, g = fit[b][v]
                delta[b] = d
                gain += g
            out.append((tuple(zip(pick, subset)), tuple(delta), number(gain)))
    return out


def _to_mpq(q):
    q = Fraction(q)
    return gmpy2.mpq(q.numerator, q.denominator)


def _state_count(caps):
    return math.prod(c + 1 for c in caps)


def solve_versiongap(vg: VgInstance, exact: bool = True, max_states: int = DEFAULT_MAX_STATES):
    """Optimal assignment by DP over objects; returns ``(assignment, profit)``.

    With ``exact`` the DP runs on exact rationals; otherwise it uses the
    floating kernel and the returned profit is recomputed exactly for the
    chosen assignment.  Raises :class:`BudgetExceededError` when the state
    table would exceed ``max_states``.
    """
    caps = _bin_caps(vg)
    if _state_count(caps) > max_states:
        raise BudgetExceededError(f"VersionGAP needs {_state_count(caps)} states > {max_states}")
    subsets = vg.family.subsets(vg.nbins)
    number = _to_mpq if exact else float
    opts = [object_options(vg, i, subsets, number) for i in range(len(vg.objects))]
    dp_opts = [[(d, g) for _, d, g in o] for o in opts]
    if exact:
        _, picks = kernels.python.vg_dp(caps, dp_opts, zero=gmpy2.mpq(0))
    else:
        _, picks = kernels.vg_dp(caps, dp_opts, zero=0.0)
    placements = []
    for i, k in enumerate(picks):
        placements.extend((i, v, b) for v, b in opts[i][k][0])
    assign = VgAssignment(tuple(placements))
    return assign, assign.profit(vg)


def brute_versiongap(vg: VgInstance, budget: int = 10**7):
    """Exhaustive search over every object's placements.

    Independent of the DP: capacities are tracked as exact sizes and each
    complete assignment is scored from scratch.  ``budget`` caps the number
    of search nodes visited.
    """
    nb = vg.nbins
    subsets = vg.family.subsets(nb)
    per_obj = []
    for vers in vg.objects:
        cand = []
        for subset in subsets:
            for pick in itertools.product(range(len(vers)), repeat=len(subset)):
                cand.append(tuple(zip(pick, subset)))
        per_obj.append(cand)
    best = [Fraction(-1), ()]
    visited = [0]
    used = [Fraction(0)] * nb
    count = [0] * nb
    chosen = []

    def rec(i):
        visited[0] += 1
        if visited[0] > budget:
            raise BudgetExceededError(f"brute force visited more than {budget} nodes")
        if i == len(per_obj):
            assign = VgAssignment(tuple((o, v, b) for o, pl in enumerate(chosen) for v, b in pl))
            p = assign.profit(vg)
            if p > best[0]:
                best[0], best[1] = p, assign
            return
        for pl in per_obj[i]:
            ok = True
            for v, b in pl:
                s = vg.objects[i][v][1]
                bn = vg.bins[b]
                if used[b] + s > bn.capacity or (bn.single and (count[b] or not bn.fits(s))):
                    ok = False
                    break
            if not ok:
                continue
            for v, b in pl:
                used[b] += vg.objects[i][v][1]
                count[b] += 1
            chosen.append(pl)
            rec(i + 1)
            chosen.pop()
            for v, b in pl:
                used[b] -= vg.objects[i][v][1]
                count[b] -= 1

    rec(0)
    return best[1], best[0]


def random_versiongap(n_objects, n_versions, n_bins, granularity, seed=0, family="random", single_prob=0.0):
    """Seeded random instance for testing.

    ``family`` is ``"one"`` (at most one bin), ``"all"`` (any subset),
    ``"tree"`` (antichains of a random forest) or ``"random"`` (one of the
    three, drawn from the seed).
    """
    rng = np.random.default_rng(seed)
    m = int(granularity)
    if family == "random":
        family = ["one", "all", "tree"][int(rng.integers(3))]
    objects = []
    for _ in range(n_objects):
        k = int(rng.integers(1, n_versions + 1))
        objects.append(
            tuple((Fraction(int(rng.integers(0, 20))), Fraction(int(rng.integers(0, m + 1)), m)) for _ in range(k))
        )
    bins = []
    for _ in range(n_bins):
        single = bool(rng.random() < single_prob)
        cap = Fraction(int(rng.integers(0, m + 1)), m)
        disc = Fraction(int(rng.integers(0, 5)), 4)
        bins.append(VgBin(cap, disc, single=single, min_size=Fraction(int(rng.integers(0, m)), 2 * m) if single else 0))
    if family == "one":
        fam = AtMostOne()
    elif family == "all":
        fam = Explicit(tuple(s for r in range(n_bins + 1) for s in itertools.combinations(range(n_bins), r)))
    elif family == "tree":
        fam = Antichains(tuple(None if b == 0 or rng.random() < 0.3 else int(rng.integers(0, b)) for b in range(n_bins)))
    else:
        raise ValueError(f"unknown family {family!r}")
    return VgInstance(tuple(objects), tuple(bins), fam, m)
