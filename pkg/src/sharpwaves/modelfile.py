"""TOML model definition files.

Example::

    m = 2.0
    D = 1.0
    r = 1.0
    birth.kind = "nicholson"
    birth.p = 4.0
    birth.a = 0.5
    birth.q = 1.0
    death.kind = "linear"
    death.delta = 0.5

Tabulated laws take ``u = [...]`` and ``values = [...]``.  Unknown keys are
rejected.
"""

from __future__ import annotations

import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ModelError
from .kinetics import (
    AgeStructured,
    KineticsSpec,
    LinearBirth,
    LinearDeath,
    MackeyGlass,
    Nicholson,
    PowerDeath,
    QuadraticDeath,
    Tabulated,
)

_BIRTH = {
    "nicholson": (Nicholson, {"p", "a", "q"}, {"p"}),
    "mackey_glass": (MackeyGlass, {"p", "a", "q"}, {"p"}),
    "age_structured": (AgeStructured, {"p", "gamma", "r"}, {"p", "gamma"}),
    "linear": (LinearBirth, {"p"}, {"p"}),
}
_DEATH = {
    "linear": (LinearDeath, {"delta"}, {"delta"}),
    "quadratic": (QuadraticDeath, {"delta"}, {"delta"}),
    "power": (PowerDeath, {"delta", "k"}, {"delta", "k"}),
}
_TOP = {"m", "D", "r", "birth", "death"}


def _law(table: dict, registry: dict, role: str, default_r: float):
    if not isinstance(table, dict):
        raise ModelError(f"[{role}] must be a table")
    kind = table.get("kind")
    if kind == "tabulated":
        extra = set(table) - {"kind", "u", "values"}
        if extra:
            raise ModelError(f"unknown {role} keys: {sorted(extra)}")
        if "u" not in table or "values" not in table:
            raise ModelError(f"tabulated {role} needs 'u' and 'values'")
        return Tabulated(tuple(table["u"]), tuple(table["values"]))
    if kind not in registry:
        raise ModelError(f"unknown {role}.kind {kind!r}; expected one of {sorted(registry) + ['tabulated']}")
    cls, allowed, required = registry[kind]
    params = {k: v for k, v in table.items() if k != "kind"}
    extra = set(params) - allowed
    if extra:
        raise ModelError(f"unknown {role} keys for kind {kind!r}: {sorted(extra)}")
    missing = required - set(params)
    if missing:
        raise ModelError(f"{role}.{kind} is missing {sorted(missing)}")
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ModelError(f"{role}.{k} must be a number")
    params = {k: float(v) for k, v in params.items()}
    if cls is AgeStructured and "r" not in params:
        params["r"] = default_r
    return cls(**params)


def parse_model(data: dict) -> KineticsSpec:
    """Build a KineticsSpec from an already-decoded mapping."""
    extra = set(data) - _TOP
    if extra:
        raise ModelError(f"unknown model keys: {sorted(extra)}")
    for k in ("m", "birth", "death"):
        if k not in data:
            raise ModelError(f"model file is missing {k!r}")
    m = float(data["m"])
    D = float(data.get("D", 1.0))
    r = float(data.get("r", 0.0))
    birth = _law(data["birth"], _BIRTH, "birth", r)
    death = _law(data["death"], _DEATH, "death", r)
    return KineticsSpec(m, D, r, birth, death)


def loads_model(text: str) -> KineticsSpec:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ModelError(f"cannot parse model file: {exc}") from exc
    return parse_model(data)


def load_model(path: str | Path) -> KineticsSpec:
    return loads_model(Path(path).read_text())


def dumps_model(spec: KineticsSpec) -> str:
    """Inverse of :func:`loads_model` for the built-in laws."""
    lines = [f"m = {spec.m!r}", f"D = {spec.diffusivity!r}", f"r = {spec.delay!r}"]
    for role, law in (("birth", spec.birth), ("death", spec.death)):
        lines.append(f'{role}.kind = "{law.kind}"')
        if isinstance(law, Tabulated):
            lines.append(f"{role}.u = {list(law.u)!r}")
            lines.append(f"{role}.values = {list(law.v)!r}")
            continue
        for name in law.__dataclass_fields__:
            lines.append(f"{role}.{name} = {float(getattr(law, name))!r}")
    return "\n".join(lines) + "\n"
