"""JSON forms of instances and mechanisms.

Numbers are written as strings: a terminating decimal when the rational has
one, ``"p/q"`` otherwise, so a round trip is exact.
"""

from __future__ import annotations

import json
from pathlib import Path

from .errors import InvalidInstanceError
from .model import SKIP, AspmNode, AspmTree, BuyerDistribution, Instance, SpmSchedule, to_fraction


def format_rational(q) -> str:
    q = to_fraction(q)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    scaled = q.numerator * 10**places // q.denominator
    if places == 0:
        return str(scaled)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def instance_to_dict(inst: Instance) -> dict:
    return {
        "copies": inst.copies,
        "buyers": [
            {"support": [{"value": format_rational(v), "mass": format_rational(m)} for v, m in b.support]}
            for b in inst.buyers
        ],
    }


def instance_from_dict(data: dict, allow_excess_copies: bool = False) -> Instance:
    try:
        buyers = tuple(
            BuyerDistribution.from_support((pt["value"], pt["mass"]) for pt in b["support"]) for b in data["buyers"]
        )
        copies = data["copies"]
    except (KeyError, TypeError) as exc:
        raise InvalidInstanceError(f"instance JSON missing field: {exc}") from exc
    return Instance(buyers, copies, allow_excess_copies=allow_excess_copies)


def load_instance(path, allow_excess_copies: bool = False) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh), allow_excess_copies)


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def _price_out(p):
    return "skip" if p is SKIP else format_rational(p)


def _price_in(p):
    return SKIP if p == "skip" else to_fraction(p)


def mechanism_to_dict(mech) -> dict:
    if isinstance(mech, SpmSchedule):
        return {"type": "spm", "steps": [{"buyer": b, "price": _price_out(p)} for b, p in mech.steps]}
    if isinstance(mech, AspmTree):
        return {
            "type": "aspm",
            "root": mech.root,
            "nodes": [
                {"buyer": nd.buyer, "price": _price_out(nd.price), "on_sale": nd.on_sale, "on_no_sale": nd.on_no_sale}
                for nd in mech.nodes
            ],
        }
    raise TypeError(f"not a mechanism: {type(mech).__name__}")


def mechanism_from_dict(data: dict):
    kind = data.get("type")
    if kind == "spm":
        return SpmSchedule(tuple((s["buyer"], _price_in(s["price"])) for s in data["steps"]))
    if kind == "aspm":
        nodes = tuple(
            AspmNode(nd["buyer"], to_fraction(nd["price"]), nd.get("on_sale"), nd.get("on_no_sale"))
            for nd in data["nodes"]
        )
        return AspmTree(nodes, data.get("root", 0) if nodes else None)
    raise InvalidInstanceError(f"unknown mechanism type {kind!r}")


def load_mechanism(path):
    with open(path) as fh:
        return mechanism_from_dict(json.load(fh))


def save_mechanism(mech, path) -> None:
    Path(path).write_text(json.dumps(mechanism_to_dict(mech), indent=2) + "\n")
