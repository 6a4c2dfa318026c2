"""Approximation scheme for the best adaptive mechanism.

Same idea as the schedule search, with the weight profile arranged as a
tree.  Each segment is a non-branching run.  When it ends, the process
either continues into a single child or branches on the number of copies
left, one child per value.  A buyer may sit in several segments as long as
no two of them lie on one root-to-leaf path, so every path still offers
each buyer at most once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetExceededError, InvalidInstanceError
from .evaluation import eval_aspm
from .model import AspmNode, AspmTree, Instance
from .ptas_spm import (
    Configuration,
    PtasParams,
    _bin_for,
    _check_common,
    _objects,
    _segment_runs,
    allowed_weights,
    check_grid,
)
from .serialize import format_rational
from .versiongap import Antichains, VgInstance, solve_versiongap

__all__ = [
    "TreeSegment",
    "TreeConfiguration",
    "AspmPtasParams",
    "derive_aspm_params",
    "enumerate_tree_configurations",
    "tree_discount_factors",
    "tree_config_to_versiongap",
    "assemble_tree",
    "ptas_aspm",
]

DEFAULT_MAX_CONFIGURATIONS = 200_000

_OVERRIDE_KEYS = ("delta", "weight_cap", "depth_bound", "segment_budget", "path_budget", "tau_g")


@dataclass(frozen=True)
class AspmPtasParams:
    """Search parameters for tree-shaped profiles.

    ``depth_bound`` (D) bounds the number of non-branching pieces and
    ``weight_cap`` (H) the weight of each, which give the total segment
    budget ``segment_budget = ceil(2 D H / delta) + n``.  ``path_budget``
    bounds segments along any root-to-leaf path, and the weight along a
    path before its last segment is at most ``K * weight_cap``.
    """

    epsilon: Fraction
    copies: int
    n: int
    delta: Fraction
    weight_cap: Fraction
    depth_bound: int
    segment_budget: int
    path_budget: int
    tau_g: Fraction
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.tau_g <= 0:
            raise ValueError("tau_g must be positive")
        if self.segment_budget < 1 or self.path_budget < 1:
            raise ValueError("segment budgets must be >= 1")

    def weight(self, z: int) -> Fraction:
        return min(z * self.tau_g, Fraction(1))

    def is_small(self, z: int) -> bool:
        return z * self.tau_g <= self.delta

    @property
    def path_weight_cap(self) -> Fraction:
        return self.copies * self.weight_cap

    def as_path_params(self) -> PtasParams:
        """Equivalent parameters for a single path."""
        return PtasParams(self.epsilon, self.copies, self.n, self.delta, self.path_weight_cap,
                          self.path_budget, self.tau_g, self.overrides)

    def as_dict(self) -> dict:
        return {
            "epsilon": format_rational(self.epsilon),
            "copies": self.copies,
            "n": self.n,
            "delta": format_rational(self.delta),
            "weight_cap": format_rational(self.weight_cap),
            "depth_bound": self.depth_bound,
            "segment_budget": self.segment_budget,
            "path_budget": self.path_budget,
            "tau_g": format_rational(self.tau_g),
            "overrides": {k: str(v) for k, v in sorted(self.overrides.items())},
        }


def derive_aspm_params(epsilon, copies: int, n: int, overrides: dict | None = None) -> AspmPtasParams:
    """Defaults: ``delta = eps^3/(20K^3)``, ``H = K ln(K/eps)``,
    ``D = ceil((K/eps)^K)``, ``segment_budget = ceil(2DH/delta) + n``,
    ``path_budget = min(segment_budget, ceil(2H/delta) + n)`` and
    ``tau_g = delta / (20 segment_budget)``.
    """
    eps, overrides = _check_common(epsilon, copies, n, overrides, _OVERRIDE_KEYS)
    k = copies
    get = overrides.get
    delta = Fraction(get("delta")) if "delta" in overrides else eps**3 / (20 * k**3)
    cap = Fraction(get("weight_cap")) if "weight_cap" in overrides else Fraction(k * math.log(k / eps))
    d = int(get("depth_bound")) if "depth_bound" in overrides else math.ceil((k / eps) ** k)
    c = int(get("segment_budget")) if "segment_budget" in overrides else math.ceil(2 * d * cap / delta) + n
    if "path_budget" in overrides:
        pb = int(get("path_budget"))
    else:
        pb = min(c, math.ceil(2 * cap / delta) + n)
    tau = Fraction(get("tau_g")) if "tau_g" in overrides else delta / (20 * c)
    return AspmPtasParams(eps, k, n, delta, cap, d, c, pb, tau, overrides)


@dataclass(frozen=True)
class TreeSegment:
    """``label`` is the copies-left value routing into this segment, or
    ``None`` when the parent continues into it unconditionally."""

    kind: str
    z: int
    parent: int | None
    label: int | None


def _reach_after(reach):
    # copies-left values possible after one more trial, excluding 0
    return tuple(sorted(set(reach) | {c - 1 for c in reach if c > 1}))


@dataclass(frozen=True)
class TreeConfiguration:
    """Segments in preorder; segment 0 is the root."""

    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @classmethod
    def from_configuration(cls, config: Configuration) -> "TreeConfiguration":
        return cls(tuple(TreeSegment(s.kind, s.z, None if i == 0 else i - 1, None)
                         for i, s in enumerate(config.segments)))

    @property
    def parents(self):
        return tuple(s.parent for s in self.segments)

    def children(self):
        out = [[] for _ in self.segments]
        for i, s in enumerate(self.segments):
            if s.parent is not None:
                out[s.parent].append(i)
        return out

    def depths(self):
        d = []
        for s in self.segments:
            d.append(1 if s.parent is None else d[s.parent] + 1)
        return d

    def reachable(self, copies):
        """Copies-left values with which each segment can be entered."""
        reach = []
        for s in self.segments:
            if s.parent is None:
                reach.append((copies,))
            else:
                after = _reach_after(reach[s.parent])
                reach.append(after if s.label is None else (s.label,))
        return reach

    def is_path(self) -> bool:
        return all(s.label is None for s in self.segments) and all(
            len(c) <= 1 for c in self.children())

    def validate(self, params: AspmPtasParams) -> None:
        segs = self.segments
        if not segs:
            return
        if len(segs) > params.segment_budget:
            raise InvalidInstanceError("too many segments")
        if segs[0].parent is not None or segs[0].label is not None:
            raise InvalidInstanceError("segment 0 must be an unlabeled root")
        for i, s in enumerate(segs[1:], 1):
            if s.parent is None or not 0 <= s.parent < i:
                raise InvalidInstanceError(f"segment {i} must have an earlier parent")
            if s.kind != ("small" if params.is_small(s.z) else "big") or s.z < 1:
                raise InvalidInstanceError(f"segment {i} kind does not match its weight")
        reach = self.reachable(params.copies)
        depth = self.depths()
        before = []
        for i, s in enumerate(segs):
            before.append(Fraction(0) if s.parent is None else before[s.parent] + params.weight(segs[s.parent].z))
            if before[i] > params.path_weight_cap:
                raise InvalidInstanceError(f"weight above segment {i} exceeds the cap")
            if depth[i] > params.path_budget:
                raise InvalidInstanceError(f"segment {i} is deeper than the path budget")
        for p, kids in enumerate(self.children()):
            labels = [segs[c].label for c in kids]
            if None in labels and len(kids) > 1:
                raise InvalidInstanceError(f"segment {p} mixes an unconditional child with others")
            named = [lb for lb in labels if lb is not None]
            if len(set(named)) != len(named):
                raise InvalidInstanceError(f"segment {p} has repeated branch labels")
            allowed = _reach_after(reach[p])
            if any(lb not in allowed for lb in named):
                raise InvalidInstanceError(f"segment {p} has a child for an unreachable copies count")

    def __len__(self):
        return len(self.segments)


def _subtrees(zs, params, reach, depth, above, budget, pruned):
    """Subtrees as lists of (z, local parent, label) in preorder."""
    if budget < 1:
        return
    for z in zs:
        w = params.weight(z)
        yield [(z, None, None)]
        below = above + w
        if budget < 2 or depth + 1 > params.path_budget or below > params.path_weight_cap:
            continue
        after = _reach_after(reach)
        for sub in _subtrees(zs, params, after, depth + 1, below, budget - 1, pruned):
            yield [(z, None, None)] + _place(sub, 1, None)
        if pruned:
            label_sets = [after] if len(after) > 1 else []
        else:
            label_sets = [tuple(c for j, c in enumerate(after) if mask >> j & 1) for mask in range(1, 1 << len(after))]
        for labels in label_sets:
            for kids in _forests(zs, params, labels, depth + 1, below, budget - 1, pruned):
                yield [(z, None, None)] + kids


def _place(sub, base, label):
    # relocate a subtree to start at index ``base`` under the segment at 0
    return [(z, 0, label) if p is None else (z, p + base, lb) for z, p, lb in sub]


def _forests(zs, params, labels, depth, above, budget, pruned, base=1):
    """One child subtree per label, sharing the segment budget."""
    if not labels:
        yield []
        return
    head, rest = labels[0], labels[1:]
    for sub in _subtrees(zs, params, (head,), depth, above, budget - len(rest), pruned):
        placed = _place(sub, base, head)
        for tail in _forests(zs, params, rest, depth, above, budget - len(sub), pruned, base + len(sub)):
            yield placed + tail


def enumerate_tree_configurations(params: AspmPtasParams, weights=None, pruned: bool = True,
                                  max_configurations: int = DEFAULT_MAX_CONFIGURATIONS):
    """Lazily yield tree configurations, each once, in a fixed order.

    With ``pruned`` a segment either ends the path, continues into one
    unconditional child, or branches into one child for every copies-left
    value it can end with (only when there are at least two).  These
    dominate partial branching, because a segment may be left empty.  With
    ``pruned=False`` every nonempty subset of reachable labels is tried.
    """
    zs = list(allowed_weights(params.as_path_params()) if weights is None else weights)
    count = 0
    for local in _subtrees(zs, params, (params.copies,), 1, Fraction(0), params.segment_budget, pruned):
        count += 1
        if count > max_configurations:
            raise BudgetExceededError(f"more than {max_configurations} tree configurations")
        yield TreeConfiguration(tuple(
            TreeSegment("small" if params.is_small(z) else "big", z, p, lb) for z, p, lb in local))


def tree_discount_factors(tc: TreeConfiguration, params_or_weights, copies: int):
    """Probability that each segment is reached with at least one copy.

    Each segment is modeled as one trial of its weight.  Mass entering a
    segment with ``c`` copies leaves with ``c`` or ``c - 1`` and moves to
    the unconditional child, or to the child labeled with that count, or
    stops.  Returns ``(factors, entry)`` where ``entry[i]`` maps copies-left
    values to entry probabilities.
    """
    if isinstance(params_or_weights, (AspmPtasParams, PtasParams)):
        weights = [params_or_weights.weight(s.z) for s in tc.segments]
    else:
        weights = [Fraction(w) for w in params_or_weights]
    for w in weights:
        if not 0 <= w <= 1:
            raise ValueError("segment weight must lie in [0, 1]")
    kids = tc.children()
    entry = [dict() for _ in tc.segments]
    if tc.segments:
        entry[0][copies] = Fraction(1)
    for i, seg in enumerate(tc.segments):
        w = weights[i]
        out = {}
        for c, mass in entry[i].items():
            out[c] = out.get(c, Fraction(0)) + mass * (1 - w)
            if c > 1:
                out[c - 1] = out.get(c - 1, Fraction(0)) + mass * w
        for ch in kids[i]:
            lb = tc.segments[ch].label
            for c, mass in out.items():
                if lb is None or lb == c:
                    entry[ch][c] = entry[ch].get(c, Fraction(0)) + mass
    factors = tuple(sum(e.values(), Fraction(0)) for e in entry)
    return factors, entry


def tree_config_to_versiongap(inst: Instance, tc: TreeConfiguration, params: AspmPtasParams,
                              factors=None) -> VgInstance:
    """VersionGAP instance for a tree profile; bins are segments and each
    buyer's bins must form an antichain of the tree."""
    m = check_grid(inst)
    if factors is None:
        factors, _ = tree_discount_factors(tc, params, params.copies)
    bins = tuple(_bin_for(params, s.z, m, factors[i]) for i, s in enumerate(tc.segments))
    return VgInstance(_objects(inst), bins, Antichains(tc.parents), m)


def assemble_tree(inst: Instance, tc: TreeConfiguration, assignment, copies: int) -> AspmTree:
    """Decision graph walking the segments.

    Inside a segment buyers are offered by decreasing price; when it ends
    the walk follows the unconditional child or the child labeled with the
    copies left.  Nodes are shared by (segment, position, copies left).
    """
    runs = _segment_runs(inst, assignment, len(tc.segments))
    uncond = {}
    labeled = {}
    for i, s in enumerate(tc.segments):
        if s.parent is None:
            continue
        if s.label is None:
            uncond[s.parent] = i
        else:
            labeled[(s.parent, s.label)] = i
    nodes = []
    index = {}

    def enter(seg, pos, c):
        while True:
            if c == 0:
                return None
            if pos < len(runs[seg]):
                return node(seg, pos, c)
            nxt = uncond.get(seg, labeled.get((seg, c)))
            if nxt is None:
                return None
            seg, pos = nxt, 0

    def node(seg, pos, c):
        key = (seg, pos, c)
        if key in index:
            return index[key]
        idx = len(nodes)
        index[key] = idx
        nodes.append(None)
        buyer, price = runs[seg][pos]
        sale = enter(seg, pos + 1, c - 1)
        no_sale = enter(seg, pos + 1, c)
        nodes[idx] = AspmNode(buyer, price, sale, no_sale)
        return idx

    root = enter(0, 0, copies) if tc.segments else None
    return AspmTree(tuple(nodes), root)


def ptas_aspm(inst: Instance, epsilon=Fraction(1, 2), overrides: dict | None = None,
              max_configurations: int = DEFAULT_MAX_CONFIGURATIONS, pruned: bool = True,
              exact_gap: bool = False, max_states: int = 2_000_000):
    """Best adaptive mechanism over all tree configurations.

    Returns ``(tree, value, metadata)`` with ``value`` the exact revenue of
    ``tree``.  Ties go to the configuration enumerated first.
    """
    check_grid(inst)
    params = derive_aspm_params(epsilon, inst.copies, inst.n, overrides)
    weights = allowed_weights(params.as_path_params(), inst)
    best = (Fraction(0), AspmTree(()), None, Fraction(0))
    cache = {}
    examined = 0
    for tc in enumerate_tree_configurations(params, weights, pruned, max_configurations):
        examined += 1
        factors, _ = tree_discount_factors(tc, params, params.copies)
        vg = tree_config_to_versiongap(inst, tc, params, factors)
        assign, objective = solve_versiongap(vg, exact=exact_gap, max_states=max_states)
        tree = assemble_tree(inst, tc, assign, inst.copies)
        key = (tree.nodes, tree.root)
        if key not in cache:
            cache[key] = eval_aspm(inst, tree)
        value = cache[key]
        if value > best[0]:
            best = (value, tree, tc, objective)
    value, tree, tc, objective = best
    meta = {
        "params": params.as_dict(),
        "configurations_examined": examined,
        "distinct_mechanisms": len(cache),
        "best_configuration": None if tc is None else [
            {"z": s.z, "kind": s.kind, "parent": s.parent, "label": s.label} for s in tc.segments],
        "gap_objective": str(objective),
        "tree_segments": 0 if tc is None else len(tc),
        "tree_depth": 0 if tc is None else max(tc.depths()),
        "branching_segments": 0 if tc is None else sum(
            1 for kids in tc.children() if any(tc.segments[c].label is not None for c in kids)),
        "mechanism_nodes": len(tree.nodes),
    }
    return tree, value, meta
