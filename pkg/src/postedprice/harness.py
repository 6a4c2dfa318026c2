"""Experiment runner behind the command line.

A run takes an :class:`ExperimentSpec`, builds the instances (from a file or
from the seeded generator), applies one algorithm to each and returns rows
sorted by (K, seed).  Rows hold exact values as rational strings next to
float summaries, so the output is byte-identical across runs.  Wall time is
added only on request.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import BudgetExceededError
from .evaluation import eval_mechanism, monte_carlo
from .lp import approximation_bound, build_lp_spm, solve_lp
from .model import Instance, random_instance
from .oracles import OracleBudget, brute_spm_opt, exact_aspm_opt
from .ptas_aspm import ptas_aspm
from .ptas_spm import derive_params, ptas_spm
from .serialize import format_rational, instance_to_dict, load_instance, load_mechanism, mechanism_to_dict

__all__ = [
    "ALGORITHMS",
    "ExperimentSpec",
    "run",
    "rows_to_csv",
    "rows_to_json",
    "write_rows",
    "emit_ratio_table",
    "gap_search",
]

ALGORITHMS = ("lp", "ptas-spm", "ptas-aspm", "oracle-spm", "oracle-aspm", "eval", "gap")

COLUMNS = [
    "algorithm", "K", "seed", "n", "status", "value", "value_float",
    "lp_objective", "ratio_to_lp", "bound", "reference", "reference_float", "extra",
]


@dataclass
class ExperimentSpec:
    """What to run and on which instances.

    With ``instance`` set, that file is the only instance (``ks`` may
    override its copies).  Otherwise one instance is generated per
    ``(K, seed)`` pair.  ``big_only`` raises the generator's minimum success
    probability to the search's light-weight threshold, so every offer is
    heavy.
    """

    algorithm: str
    instance: str | None = None
    mechanism: str | None = None
    n: int = 6
    ks: tuple = ()
    seeds: tuple = (0,)
    max_support: int = 3
    value_range: tuple = (1, 100)
    min_tail: str = "0"
    big_only: bool = False
    epsilon: str = "0.5"
    overrides: dict = field(default_factory=dict)
    budget: int | None = None
    trials: int = 0
    timing: bool = False

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {', '.join(ALGORITHMS)}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if len(set(self.ks)) != len(self.ks):
            raise ValueError("K values must be distinct")
        if self.algorithm == "eval" and not (self.instance and self.mechanism):
            raise ValueError("eval needs an instance file and a mechanism file")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        if self.instance is not None and not Path(self.instance).exists():
            raise FileNotFoundError(self.instance)
        if self.mechanism is not None and not Path(self.mechanism).exists():
            raise FileNotFoundError(self.mechanism)


def _instances(spec: ExperimentSpec):
    if spec.instance is not None:
        base = load_instance(spec.instance, allow_excess_copies=True)
        ks = spec.ks if spec.ks else (base.copies,)
        for k in ks:
            yield k, None, base if k == base.copies else base.with_copies(k)
        return
    for k in spec.ks or (1,):
        for seed in spec.seeds:
            min_tail = spec.min_tail
            if spec.big_only:
                min_tail = max(Fraction(min_tail), derive_params(spec.epsilon, k, spec.n, _ptas_overrides(spec)).delta)
            yield k, seed, random_instance(spec.n, k, spec.max_support, spec.value_range, seed, min_tail=min_tail)


def _ptas_overrides(spec):
    # the keys both searches share; the tree search adds its own
    return {k: v for k, v in spec.overrides.items() if k in ("delta", "weight_cap", "segment_budget", "tau_g")}


def _fmt(x):
    return "" if x is None else format_rational(x)


def _flt(x):
    return "" if x is None else repr(float(x))


def _row(spec, k, seed, inst, status, value=None, lp=None, reference=None, extra=None, mechanism=None):
    ratio = None
    if value is not None and lp:
        ratio = float(value / lp)
    return {
        "algorithm": spec.algorithm,
        "K": k,
        "seed": "" if seed is None else seed,
        "n": inst.n,
        "status": status,
        "value": _fmt(value),
        "value_float": _flt(value),
        "lp_objective": _fmt(lp),
        "ratio_to_lp": "" if ratio is None else repr(ratio),
        "bound": repr(approximation_bound(k)),
        "reference": _fmt(reference),
        "reference_float": _flt(reference),
        "extra": "" if extra is None else json.dumps(extra, sort_keys=True),
        "_mechanism": None if mechanism is None else mechanism_to_dict(mechanism),
        "_instance": instance_to_dict(inst),
    }


def _run_one(spec: ExperimentSpec, k, seed, inst):
    budget = OracleBudget() if spec.budget is None else OracleBudget(spec.budget, spec.budget)
    algo = spec.algorithm
    lp = solve_lp(inst).objective
    if algo == "lp":
        sched = build_lp_spm(inst)
        return _row(spec, k, seed, inst, "ok", eval_mechanism(inst, sched), lp, mechanism=sched)
    if algo == "eval":
        mech = load_mechanism(spec.mechanism)
        value = eval_mechanism(inst, mech)
        extra = None
        if spec.trials:
            mean, se = monte_carlo(inst, mech, spec.trials, seed=0 if seed is None else seed)
            extra = {"mc_mean": repr(mean), "mc_se": repr(se), "trials": spec.trials}
        return _row(spec, k, seed, inst, "ok", value, lp, extra=extra, mechanism=mech)
    if algo == "oracle-spm":
        sched, value = brute_spm_opt(inst, budget)
        return _row(spec, k, seed, inst, "ok", value, lp, mechanism=sched)
    if algo == "oracle-aspm":
        tree, value = exact_aspm_opt(inst, budget)
        return _row(spec, k, seed, inst, "ok", value, lp, mechanism=tree)
    if algo == "gap":
        _, spm = brute_spm_opt(inst, budget)
        tree, aspm = exact_aspm_opt(inst, budget)
        gap = Fraction(1) if spm == 0 else aspm / spm
        return _row(spec, k, seed, inst, "ok", aspm, lp, reference=spm,
                    extra={"gap": repr(float(gap)), "gap_exact": format_rational(gap)}, mechanism=tree)
    kwargs = {} if spec.budget is None else {"max_configurations": spec.budget}
    if algo == "ptas-spm":
        mech, value, meta = ptas_spm(inst, spec.epsilon, spec.overrides, **kwargs)
    else:
        mech, value, meta = ptas_aspm(inst, spec.epsilon, spec.overrides, **kwargs)
    return _row(spec, k, seed, inst, "ok", value, lp, extra=meta, mechanism=mech)


def run(spec: ExperimentSpec):
    """Rows for every instance of ``spec``, sorted by (K, seed).

    A row whose computation exceeds a budget is kept with status
    ``"budget"``; the run continues.
    """
    spec.validate()
    rows = []
    for k, seed, inst in _instances(spec):
        start = time.perf_counter()
        try:
            row = _run_one(spec, k, seed, inst)
        except BudgetExceededError as exc:
            row = _row(spec, k, seed, inst, "budget", extra={"error": str(exc)})
        if spec.timing:
            row["wall_time"] = repr(round(time.perf_counter() - start, 6))
        rows.append(row)
    rows.sort(key=lambda r: (r["K"], -1 if r["seed"] == "" else r["seed"]))
    return rows


def _columns(rows):
    cols = list(COLUMNS)
    if rows and "wall_time" in rows[0]:
        cols.append("wall_time")
    return cols


def rows_to_csv(rows, columns=None) -> str:
    columns = columns or _columns(rows)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def rows_to_json(rows) -> str:
    out = []
    for r in rows:
        d = {c: r[c] for c in _columns(rows) if c in r}
        if d.get("extra"):
            d["extra"] = json.loads(d["extra"])
        d["mechanism"] = r.get("_mechanism")
        d["instance"] = r.get("_instance")
        out.append(d)
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def write_rows(rows, path=None, fmt="csv", stream=None) -> str:
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    if path is not None:
        Path(path).write_text(text)
    elif stream is not None:
        stream.write(text)
    return text


def emit_ratio_table(ks, seeds, n=20, max_support=5, value_range=(1, 100)):
    """Per K: the smallest LP-schedule to LP-bound ratio seen over ``seeds``,
    next to ``1 - K^K/(K! e^K)`` and ``1 - 1/sqrt(2 pi K)``."""
    table = []
    for k in ks:
        worst = None
        for seed in seeds:
            inst = random_instance(n, k, max_support, value_range, seed)
            sol = solve_lp(inst)
            if sol.objective == 0:
                continue
            r = eval_mechanism(inst, build_lp_spm(inst, sol)) / sol.objective
            worst = r if worst is None or r < worst else worst
        table.append({
            "K": k,
            "instances": len(seeds),
            "min_ratio": "" if worst is None else repr(float(worst)),
            "min_ratio_exact": _fmt(worst),
            "bound": repr(approximation_bound(k)),
            "sqrt_bound": repr(1 - 1 / math.sqrt(2 * math.pi * k)),
        })
    return table


def gap_search(seeds, copies=2, n_range=(2, 6), max_support=3, value_range=(1, 100), threshold=1.01,
               fixture=None, budget: OracleBudget | None = None):
    """Look for an instance whose adaptive optimum beats the best schedule.

    The instance size for seed ``s`` is drawn from ``n_range`` by a
    generator seeded with ``(s, copies)``.  Returns ``(best, rows)``: the
    best record (seed, n, gap and instance) and one summary row per seed.
    The best instance is saved to ``fixture`` when given and the gap
    reaches ``threshold``.
    """
    best = None
    rows = []
    for seed in seeds:
        rng = np.random.default_rng([seed, copies])
        n = int(rng.integers(max(n_range[0], copies), n_range[1] + 1))
        inst = random_instance(n, copies, max_support, value_range, seed)
        _, spm = brute_spm_opt(inst, budget)
        _, aspm = exact_aspm_opt(inst, budget)
        gap = Fraction(1) if spm == 0 else aspm / spm
        rows.append({"seed": seed, "n": n, "spm": format_rational(spm), "aspm": format_rational(aspm),
                     "gap": repr(float(gap))})
        if best is None or gap > best["gap_exact"]:
            best = {"seed": seed, "n": n, "gap_exact": gap, "instance": inst, "spm": spm, "aspm": aspm}
    if fixture is not None and best is not None and best["gap_exact"] >= Fraction(threshold).limit_denominator(10**9):
        save_gap_fixture(best, fixture)
    return best, rows


def save_gap_fixture(best, path) -> None:
    data = {
        "seed": best["seed"],
        "gap": format_rational(best["gap_exact"]),
        "spm_opt": format_rational(best["spm"]),
        "aspm_opt": format_rational(best["aspm"]),
        "instance": instance_to_dict(best["instance"]),
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
