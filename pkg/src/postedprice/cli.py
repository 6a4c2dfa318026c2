"""Command-line front end.

Every option can also come from a JSON file given with ``--config``, whose
keys are the long option names (``"seeds": "0..49"``, ``"override":
["tau_g=1/160"]``).  Options given on the command line win.

Exit status: 0 on success, 2 when some rows hit a budget, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import BudgetExceededError, InvalidInstanceError
from .harness import ExperimentSpec, emit_ratio_table, gap_search, rows_to_csv, run, write_rows
from .model import discretize, random_instance
from .oracles import OracleBudget
from .ptas_spm import derive_params
from .serialize import instance_to_dict, load_instance

DEFAULTS = {
    "k": None,
    "seed": None,
    "seeds": None,
    "n": 6,
    "max_support": 3,
    "value_range": "1..100",
    "min_tail": "0",
    "big_only": False,
    "epsilon": "0.5",
    "override": [],
    "out": None,
    "format": "csv",
    "budget": None,
    "trials": 0,
    "timing": False,
    "instance": None,
    "mechanism": None,
    "kind": "spm",
    "ratio_table": False,
    "discretize": False,
    "snap_values": False,
    "threshold": "1.01",
    "n_min": 2,
    "n_max": 6,
    "fixture": None,
    "repeats": 3,
    "scale": 1,
}


def parse_ints(text) -> tuple:
    """``"3"``, ``"1..8"`` (inclusive) or ``"0,2,5"`` as a tuple of ints."""
    if isinstance(text, int):
        return (text,)
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    text = str(text).strip()
    if ".." in text:
        a, b = text.split("..", 1)
        a, b = int(a), int(b)
        if b < a:
            raise ValueError(f"empty range {text!r}")
        return tuple(range(a, b + 1))
    return tuple(int(x) for x in text.split(",") if x.strip())


def parse_range(text) -> tuple:
    """``"lo..hi"`` as ``(lo, hi)``."""
    if isinstance(text, (list, tuple)):
        lo, hi = text
    else:
        lo, _, hi = str(text).partition("..")
        if not hi:
            raise ValueError(f"range {text!r} is not lo..hi")
    return int(lo), int(hi)


def parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not KEY=VAL")
        key, val = item.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _add_common(p, generator=True, output=True):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--instance", help="instance JSON file")
    if generator:
        p.add_argument("--k", help="copies K, or a range A..B")
        p.add_argument("--seed", type=int, help="single generator seed")
        p.add_argument("--seeds", help="generator seeds, A..B or a comma list")
        p.add_argument("--n", type=int, help="buyers per generated instance")
        p.add_argument("--max-support", type=int, help="support points per buyer (at most)")
        p.add_argument("--value-range", help="integer value range lo..hi")
        p.add_argument("--min-tail", help="success probabilities strictly above this")
        p.add_argument("--big-only", action="store_true", default=None,
                       help="every success probability above the search's light-weight threshold")
    if output:
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--timing", action="store_true", default=None, help="add wall-time column")
    p.add_argument("--budget", type=int, help="enumeration / state budget")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="postedprice", description="Posted-price mechanisms for K-unit auctions.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate (or discretize) an instance")
    _add_common(p, output=False)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--discretize", action="store_true", default=None, help="round --instance onto the grid")
    p.add_argument("--snap-values", action="store_true", default=None, help="also snap values to the geometric grid")

    p = sub.add_parser("eval", help="exact value of a stored mechanism")
    _add_common(p, generator=False)
    p.add_argument("--mechanism", help="mechanism JSON file")
    p.add_argument("--k", help="override the instance's copies")
    p.add_argument("--trials", type=int, help="Monte Carlo trials (0 = none)")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")

    p = sub.add_parser("lp", help="LP bound and LP-derived schedule")
    _add_common(p)
    p.add_argument("--ratio-table", action="store_true", default=None, help="emit per-K minimum ratios")

    for name in ("ptas-spm", "ptas-aspm"):
        p = sub.add_parser(name, help=f"{'schedule' if name == 'ptas-spm' else 'adaptive'} approximation scheme")
        _add_common(p)
        p.add_argument("--epsilon", help="accuracy parameter in (0, 1)")
        p.add_argument("--override", action="append", help="KEY=VAL parameter override (repeatable)")

    p = sub.add_parser("oracle", help="exact optimum by exhaustive search")
    _add_common(p)
    p.add_argument("--kind", choices=["spm", "aspm"])

    p = sub.add_parser("gap", help="adaptivity gap over seeded instances")
    _add_common(p)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--threshold", help="gap needed to save a fixture")
    p.add_argument("--fixture", help="where to save the best instance")

    p = sub.add_parser("bench", help="compiled kernels against the Python fallback")
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--repeats", type=int)
    p.add_argument("--scale", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    return ap


def _resolve(args) -> dict:
    config = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            config = {k.replace("-", "_"): v for k, v in json.load(fh).items()}
    out = {}
    for key, default in DEFAULTS.items():
        val = getattr(args, key, None)
        if val is None:
            val = config.get(key, default)
        out[key] = val
    return out


def _seeds(opt):
    if opt["seeds"] is not None:
        return parse_ints(opt["seeds"])
    if opt["seed"] is not None:
        return (int(opt["seed"]),)
    return (0,)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spec(command, opt) -> ExperimentSpec:
    algo = {"oracle": f"oracle-{opt['kind']}"}.get(command, command)
    lo, hi = parse_range(opt["value_range"])
    return ExperimentSpec(
        algorithm=algo,
        instance=opt["instance"],
        mechanism=opt["mechanism"],
        n=int(opt["n"]),
        ks=parse_ints(opt["k"]) if opt["k"] is not None else (),
        seeds=_seeds(opt),
        max_support=int(opt["max_support"]),
        value_range=(lo, hi),
        min_tail=str(opt["min_tail"]),
        big_only=bool(opt["big_only"]),
        epsilon=str(opt["epsilon"]),
        overrides=parse_overrides(opt["override"]),
        budget=None if opt["budget"] is None else int(opt["budget"]),
        trials=int(opt["trials"]),
        timing=bool(opt["timing"]),
    )


def _cmd_gen(opt):
    if opt["instance"]:
        inst = load_instance(opt["instance"], allow_excess_copies=True)
        if opt["discretize"]:
            inst = discretize(inst, snap_values=bool(opt["snap_values"]))
    else:
        k = parse_ints(opt["k"])[0] if opt["k"] is not None else 1
        seed = _seeds(opt)[0]
        vr = parse_range(opt["value_range"])
        min_tail = Fraction(str(opt["min_tail"]))
        if opt["big_only"]:
            min_tail = max(min_tail, derive_params(opt["epsilon"], k, int(opt["n"])).delta)
        inst = random_instance(int(opt["n"]), k, int(opt["max_support"]), vr, seed, min_tail=min_tail)
    _emit(json.dumps(instance_to_dict(inst), indent=2) + "\n", opt["out"])
    return 0


def _cmd_ratio_table(opt):
    ks = parse_ints(opt["k"]) if opt["k"] is not None else tuple(range(1, 9))
    vr = parse_range(opt["value_range"])
    table = emit_ratio_table(ks, _seeds(opt), int(opt["n"]), int(opt["max_support"]), vr)
    if opt["format"] == "json":
        text = json.dumps(table, indent=2, sort_keys=True) + "\n"
    else:
        text = rows_to_csv(table, ["K", "instances", "min_ratio", "min_ratio_exact", "bound", "sqrt_bound"])
    _emit(text, opt["out"])
    return 0


def _cmd_gap(opt):
    k = parse_ints(opt["k"])[0] if opt["k"] is not None else 2
    vr = parse_range(opt["value_range"])
    budget = None if opt["budget"] is None else OracleBudget(int(opt["budget"]), int(opt["budget"]))
    best, rows = gap_search(_seeds(opt), k, (int(opt["n_min"]), int(opt["n_max"])), int(opt["max_support"]),
                            vr, Fraction(str(opt["threshold"])), opt["fixture"], budget)
    if opt["format"] == "json":
        summary = {"best_seed": best["seed"], "best_gap": repr(float(best["gap_exact"])), "rows": rows}
        text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    else:
        text = rows_to_csv(rows, ["seed", "n", "spm", "aspm", "gap"])
    _emit(text, opt["out"])
    return 0


def _cmd_bench(opt):
    from . import kernels
    from .bench import run_benchmark

    rows = run_benchmark(int(opt["repeats"]), int(opt["scale"]))
    text = f"# backend: {kernels.BACKEND}\n" + rows_to_csv(
        rows, ["kernel", "case", "python_s", "compiled_s", "speedup", "agree"])
    _emit(text, opt["out"])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opt = _resolve(args)
        if args.command == "gen":
            return _cmd_gen(opt)
        if args.command == "bench":
            return _cmd_bench(opt)
        if args.command == "gap" and opt["instance"] is None:
            return _cmd_gap(opt)
        if args.command == "lp" and opt["ratio_table"]:
            return _cmd_ratio_table(opt)
        spec = _spec(args.command, opt)
        rows = run(spec)
        write_rows(rows, opt["out"], opt["format"], stream=sys.stdout)
        return 2 if any(r["status"] == "budget" for r in rows) else 0
    except (OSError, ValueError, InvalidInstanceError, BudgetExceededError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
