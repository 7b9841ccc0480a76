"""Policy strings.

Gang:      afcfs | afcfs+bypass:T | afcfs+migrate:L | afcfs+nobackfill | lgfs
           | edf-gang-ac:restricted | edf-gang-ac:holistic
DAG:       hlf | ish | heft | dsc | dsh | lstf | edf | edf-ac:{ff,bf,wf}
           | sa[:T0,cool,iters[,temps]] | ga[:pop,gens,cx,mut]
BoT:       minmin | maxmin | sufferage | caees
Periodic:  mfed

Modifiers combine with ``+`` (``afcfs+bypass:3+migrate:2``).  SA/GA
parameters may also be given as ``key=value`` pairs.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class PolicyParseError(ValueError):
    pass


GANG = ("afcfs", "lgfs", "edf-gang-ac")
DAG = ("hlf", "ish", "heft", "dsc", "dsh", "lstf", "edf", "edf-ac", "sa", "ga")
BOT = ("minmin", "maxmin", "sufferage", "caees")
PERIODIC = ("mfed",)

VALID = (
    "afcfs, afcfs+bypass:T, afcfs+migrate:L, afcfs+nobackfill, lgfs, edf-gang-ac:restricted, "
    "edf-gang-ac:holistic, hlf, ish, heft, dsc, dsh, lstf, edf, edf-ac:ff, edf-ac:bf, edf-ac:wf, "
    "sa:T0,cool,iters, ga:pop,gens,cx,mut, minmin, maxmin, sufferage, caees, mfed"
)

SA_KEYS = ("T0", "cool", "iters", "temps")
SA_DEFAULTS = {"T0": 10.0, "cool": 0.9, "iters": 20, "temps": 30}
GA_KEYS = ("pop", "gens", "cx", "mut")
GA_DEFAULTS = {"pop": 20, "gens": 30, "cx": 0.9, "mut": 0.1}


@dataclass(frozen=True)
class Policy:
    text: str
    name: str
    workload_class: str
    params: dict = field(default_factory=dict)


def _kv(arg, keys, defaults):
    params = dict(defaults)
    if not arg:
        return params
    for i, item in enumerate(arg.strip("{}").split(",")):
        item = item.strip()
        if not item:
            continue
        if "=" in item:
            k, v = item.split("=", 1)
        else:
            if i >= len(keys):
                raise PolicyParseError(f"too many parameters: {arg!r}")
            k, v = keys[i], item
        if k not in defaults:
            raise PolicyParseError(f"unknown parameter {k!r}; expected {list(keys)}")
        try:
            params[k] = type(defaults[k])(float(v)) if isinstance(defaults[k], int) else float(v)
        except ValueError:
            raise PolicyParseError(f"parameter {k} must be numeric, got {v!r}") from None
    return params


def parse_policy(text: str) -> Policy:
    text = text.strip()
    base, *mods = text.split("+")
    name, _, arg = base.partition(":")
    bad = PolicyParseError(f"unknown policy {text!r}; valid policies: {VALID}")

    if name == "afcfs":
        if arg:
            raise bad
        params = {"backfilling": True, "bypass_threshold": None, "migration_limit": None}
        for m in mods:
            key, _, val = m.partition(":")
            try:
                if key == "bypass":
                    params["bypass_threshold"] = int(val)
                elif key == "migrate":
                    params["migration_limit"] = int(val)
                elif key == "nobackfill" and not val:
                    params["backfilling"] = False
                else:
                    raise bad
            except ValueError:
                raise bad from None
            if key in ("bypass", "migrate") and int(val) < 0:
                raise bad
        return Policy(text, "afcfs", "gangs", params)
    if mods:
        raise bad
    if name == "lgfs" and not arg:
        return Policy(text, "lgfs", "gangs", {})
    if name == "edf-gang-ac" and arg in ("restricted", "holistic"):
        return Policy(text, "edf-gang-ac", "gangs", {"mode": arg})
    if name in ("hlf", "ish", "heft", "dsc", "dsh", "lstf", "edf") and not arg:
        return Policy(text, name, "dags", {})
    if name == "edf-ac" and arg in ("ff", "bf", "wf"):
        return Policy(text, "edf-ac", "dags", {"variant": arg.upper() + "_AC"})
    if name == "sa":
        p = _kv(arg, SA_KEYS, SA_DEFAULTS)
        if p["T0"] <= 0 or not 0 < p["cool"] < 1 or p["iters"] < 0 or p["temps"] < 0:
            raise PolicyParseError("sa needs T0 > 0, 0 < cool < 1, iters >= 0, temps >= 0")
        return Policy(text, "sa", "dags", p)
    if name == "ga":
        p = _kv(arg, GA_KEYS, GA_DEFAULTS)
        if p["pop"] < 2 or p["gens"] < 0 or not 0 <= p["cx"] <= 1 or not 0 <= p["mut"] <= 1:
            raise PolicyParseError("ga needs pop >= 2, gens >= 0 and rates in [0, 1]")
        return Policy(text, "ga", "dags", p)
    if name in BOT and not arg:
        return Policy(text, name, "bots", {})
    if name == "mfed" and not arg:
        return Policy(text, "mfed", "periodic", {})
    raise bad
