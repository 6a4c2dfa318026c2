"""Approximation scheme for the best non-adaptive schedule.

A near-optimal schedule splits into "segments": runs of buyers whose total
success probability (weight) is at most ``delta``, or single heavy buyers.
A segment's revenue is close to its reach probability times the sum of
``price * tail`` over its buyers, and the reach probabilities depend only on
the rounded weights of the earlier segments.  So the search enumerates
weight profiles ("configurations") on a grid of step ``tau_g``.  For each
profile it computes the reach probabilities and fills the segments by a
VersionGAP solve, then keeps the best schedule by exact revenue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import BudgetExceededError, InvalidInstanceError
from .evaluation import eval_spm
from .model import Instance, SpmSchedule, probability_grid, to_fraction
from .serialize import format_rational
from .versiongap import AtMostOne, VgBin, VgInstance, solve_versiongap

__all__ = [
    "PtasParams",
    "derive_params",
    "Segment",
    "Configuration",
    "allowed_weights",
    "enumerate_configurations",
    "segment_discount_factors",
    "config_to_versiongap",
    "assemble_schedule",
    "ptas_spm",
    "check_grid",
]

DEFAULT_MAX_CONFIGURATIONS = 200_000

_OVERRIDE_KEYS = ("delta", "weight_cap", "segment_budget", "tau_g")


@dataclass(frozen=True)
class PtasParams:
    """Search parameters.

    ``delta`` bounds the weight of a segment of light buyers, ``weight_cap``
    bounds the weight a schedule may accumulate before its last segment,
    ``segment_budget`` bounds the number of segments and ``tau_g`` is the
    weight grid step.  ``overrides`` records the fields set by hand.
    """

    epsilon: Fraction
    copies: int
    n: int
    delta: Fraction
    weight_cap: Fraction
    segment_budget: int
    tau_g: Fraction
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.tau_g <= 0:
            raise ValueError("tau_g must be positive")
        if self.segment_budget < 1:
            raise ValueError("segment_budget must be >= 1")

    def weight(self, z: int) -> Fraction:
        """Weight of ``z`` grid steps, capped at 1."""
        return min(z * self.tau_g, Fraction(1))

    def is_small(self, z: int) -> bool:
        return z * self.tau_g <= self.delta

    def as_dict(self) -> dict:
        return {
            "epsilon": format_rational(self.epsilon),
            "copies": self.copies,
            "n": self.n,
            "delta": format_rational(self.delta),
            "weight_cap": format_rational(self.weight_cap),
            "segment_budget": self.segment_budget,
            "tau_g": format_rational(self.tau_g),
            "overrides": {k: str(v) for k, v in sorted(self.overrides.items())},
        }


def _check_common(epsilon, copies, n, overrides, allowed):
    eps = to_fraction(epsilon)
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if copies < 1 or n < 1:
        raise ValueError("need K >= 1 and n >= 1")
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(allowed)
    if unknown:
        raise ValueError(f"unknown override(s): {sorted(unknown)}")
    return eps, overrides


def derive_params(epsilon, copies: int, n: int, overrides: dict | None = None) -> PtasParams:
    """Parameters from ``epsilon``, ``K`` and ``n``, with optional overrides.

    ``delta = eps^3 / (20 K^3)``, ``weight_cap = K ln(K/eps)``,
    ``segment_budget = ceil(2 weight_cap / delta) + n`` and
    ``tau_g = delta / (20 segment_budget)``.  Overridden fields replace the
    formula and feed the fields derived from them.
    """
    eps, overrides = _check_common(epsilon, copies, n, overrides, _OVERRIDE_KEYS)
    k = copies
    delta = to_fraction(overrides["delta"]) if "delta" in overrides else eps**3 / (20 * k**3)
    if "weight_cap" in overrides:
        cap = to_fraction(overrides["weight_cap"])
    else:
        cap = Fraction(k * math.log(k / eps))
    if "segment_budget" in overrides:
        c = int(overrides["segment_budget"])
    else:
        c = math.ceil(2 * cap / delta) + n
    tau = to_fraction(overrides["tau_g"]) if "tau_g" in overrides else delta / (20 * c)
    return PtasParams(eps, k, n, delta, cap, c, tau, overrides)


@dataclass(frozen=True)
class Segment:
    kind: str
    z: int


@dataclass(frozen=True)
class Configuration:
    """Ordered weight profile; segment ``i`` has weight ``z_i * tau_g``."""

    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @classmethod
    def from_units(cls, zs, params: PtasParams) -> "Configuration":
        return cls(tuple(Segment("small" if params.is_small(z) else "big", int(z)) for z in zs))

    @property
    def units(self):
        return tuple(s.z for s in self.segments)

    def weights(self, params: PtasParams):
        return [params.weight(s.z) for s in self.segments]

    def validate(self, params: PtasParams) -> None:
        if len(self.segments) > params.segment_budget:
            raise InvalidInstanceError("too many segments")
        before = Fraction(0)
        for i, s in enumerate(self.segments):
            if s.z < 1:
                raise InvalidInstanceError("segment weights must be positive")
            if s.kind != ("small" if params.is_small(s.z) else "big"):
                raise InvalidInstanceError(f"segment {i} kind does not match its weight")
            if before > params.weight_cap:
                raise InvalidInstanceError("weight before a segment exceeds the cap")
            before += params.weight(s.z)

    def __len__(self):
        return len(self.segments)


def check_grid(inst: Instance) -> int:
    """Grid denominator ``10 n^2``; raises unless every tail lies on it."""
    m = probability_grid(inst.n)
    for b in inst.buyers:
        for t in b.tails:
            if (t * m).denominator != 1:
                raise InvalidInstanceError(f"tail {t} is off the 1/{m} grid; discretize the instance first")
    return m


def allowed_weights(params: PtasParams, inst: Instance | None = None):
    """Grid weights worth trying, ascending.

    Light weights (at most ``delta``) are kept only when some offer is
    light.  A heavy weight ``z`` is kept only when some heavy offer has
    tail in ``((z-1) tau_g, z tau_g]``: a bin with no such offer is beaten
    by the next smaller weight.  Without an instance every grid weight up
    to 1 is returned.
    """
    small_top = math.floor(params.delta / params.tau_g)
    if inst is None:
        return list(range(1, math.ceil(1 / params.tau_g) + 1))
    tails = {t for b in inst.buyers for t in b.tails}
    out = set()
    if any(t <= params.delta for t in tails):
        out.update(range(1, small_top + 1))
    for t in tails:
        if t > params.delta:
            out.add(math.ceil(t / params.tau_g))
    return sorted(out)


def enumerate_configurations(params: PtasParams, weights=None, max_configurations: int = DEFAULT_MAX_CONFIGURATIONS):
    """Lazily yield every valid configuration once, in lexicographic order.

    A configuration is valid when it has at most ``segment_budget``
    segments and the weight accumulated before each segment is at most
    ``weight_cap``.  ``weights`` restricts the grid units tried (see
    :func:`allowed_weights`).  Raises :class:`BudgetExceededError` once more
    than ``max_configurations`` have been produced.
    """
    zs = list(allowed_weights(params) if weights is None else weights)
    count = 0
    stack = [((), Fraction(0))]
    # depth-first, children pushed in reverse so ascending order pops first
    while stack:
        prefix, total = stack.pop()
        if prefix:
            count += 1
            if count > max_configurations:
                raise BudgetExceededError(f"more than {max_configurations} configurations")
            yield Configuration.from_units(prefix, params)
        if len(prefix) < params.segment_budget and total <= params.weight_cap:
            for z in reversed(zs):
                stack.append((prefix + (z,), total + params.weight(z)))


def segment_discount_factors(weights, copies: int):
    """Reach probabilities for a sequence of single-trial segments.

    ``rho[l][i]`` is the probability that segment ``i`` (0-based) is reached
    with at least ``l`` copies left, for ``l`` in ``0..K+1``; row 0 is all
    ones.  Returns ``(A, rho)`` with ``A[i] = rho[1][i]``.
    """
    w = [to_fraction(x) for x in weights]
    for x in w:
        if not 0 <= x <= 1:
            raise ValueError("segment weight must lie in [0, 1]")
    m = len(w)
    k = copies
    rho = [[Fraction(0)] * (m + 1) for _ in range(k + 2)]
    for ell in range(k + 2):
        rho[ell][0] = Fraction(1) if ell <= k else Fraction(0)
    for i in range(m):
        s = w[i]
        rho[0][i + 1] = Fraction(1)
        for ell in range(1, k + 2):
            nxt = rho[ell + 1][i] if ell + 1 <= k + 1 else Fraction(0)
            rho[ell][i + 1] = rho[ell][i] * (1 - s) + nxt * s
    return tuple(rho[1][:m]), rho


def _bin_for(params: PtasParams, z: int, m: int, discount) -> VgBin:
    cap = Fraction(math.floor(params.weight(z) * m), m)
    if params.is_small(z):
        return VgBin(cap, discount)
    low = max(params.delta, (z - 1) * params.tau_g)
    return VgBin(cap, discount, single=True, min_size=low)


def _objects(inst: Instance):
    return tuple(tuple((v * t, t) for v, t in b.menu()) for b in inst.buyers)


def config_to_versiongap(inst: Instance, config: Configuration, params: PtasParams, factors=None) -> VgInstance:
    """VersionGAP instance filling ``config``'s segments with buyers.

    Objects are buyers and versions are their offers, with profit
    ``price * tail`` and size ``tail``.  Bin ``i`` has capacity ``z_i tau_g``
    rounded down to the grid and discount ``A[i]``.  A heavy bin holds one
    buyer whose tail lies in ``(max(delta, (z_i - 1) tau_g), z_i tau_g]``.
    """
    m = check_grid(inst)
    if factors is None:
        factors, _ = segment_discount_factors(config.weights(params), params.copies)
    bins = tuple(_bin_for(params, s.z, m, factors[i]) for i, s in enumerate(config.segments))
    return VgInstance(_objects(inst), bins, AtMostOne(), m)


def _segment_runs(inst: Instance, assignment, nbins):
    runs = []
    for content in assignment.contents(nbins):
        run = [(o, inst.buyers[o].values[v]) for o, v in content]
        run.sort(key=lambda s: (-s[1], s[0]))
        runs.append(run)
    return runs


def assemble_schedule(inst: Instance, assignment, nbins: int) -> SpmSchedule:
    """Concatenate bin contents in bin order, each by decreasing price."""
    steps = [s for run in _segment_runs(inst, assignment, nbins) for s in run]
    return SpmSchedule(tuple(steps))


def ptas_spm(inst: Instance, epsilon=Fraction(1, 2), overrides: dict | None = None,
             max_configurations: int = DEFAULT_MAX_CONFIGURATIONS, exact_gap: bool = False,
             max_states: int = 2_000_000):
    """Best schedule over all configurations; ``(schedule, value, metadata)``.

    ``value`` is the exact revenue of the returned schedule.  Ties between
    configurations go to the one enumerated first.  The instance must
    already be on the ``1/(10 n^2)`` tail grid.
    """
    check_grid(inst)
    params = derive_params(epsilon, inst.copies, inst.n, overrides)
    weights = allowed_weights(params, inst)
    best = (Fraction(0), SpmSchedule(()), None, Fraction(0))
    cache = {}
    examined = 0
    for config in enumerate_configurations(params, weights, max_configurations):
        examined += 1
        factors, _ = segment_discount_factors(config.weights(params), params.copies)
        vg = config_to_versiongap(inst, config, params, factors)
        assign, objective = solve_versiongap(vg, exact=exact_gap, max_states=max_states)
        sched = assemble_schedule(inst, assign, vg.nbins)
        if sched.steps not in cache:
            cache[sched.steps] = eval_spm(inst, sched)
        value = cache[sched.steps]
        if value > best[0]:
            best = (value, sched, config, objective)
    value, sched, config, objective = best
    meta = {
        "params": params.as_dict(),
        "configurations_examined": examined,
        "distinct_schedules": len(cache),
        "best_configuration": None if config is None else list(config.units),
        "gap_objective": str(objective),
    }
    return sched, value, meta
