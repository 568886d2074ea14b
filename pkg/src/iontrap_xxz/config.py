"""Run configuration: a strict, unit-tagged key-value text format.

    # comment
    [trap]
    ion_count = 10
    axial_frequency = 2pi*1.0e6 rad_s

    [sweep]
    h_grid = linspace(0, 1.5, 151) J0

Every key belongs to a known section and has a fixed physical dimension.
Values are arithmetic expressions (``pi`` and juxtaposed ``2pi`` allowed),
followed by a unit of that dimension. Grids use ``linspace``, ``geomspace``
or an explicit ``[a, b, ...]`` list. Unknown sections, unknown keys,
duplicate keys and wrong units are errors carrying the line number.
"""

from __future__ import annotations

import ast
import hashlib
import math
import operator
import re
from dataclasses import dataclass, field, fields, replace

import numpy as np

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}:{line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.path = path
        self.detail = message


# unit -> (dimension, factor to the canonical unit of that dimension)
UNITS = {
    "1": ("dimensionless", 1.0),
    "rad_s": ("angular_frequency", 1.0),
    "Hz": ("angular_frequency", 2 * math.pi),
    "kHz": ("angular_frequency", 2e3 * math.pi),
    "MHz": ("angular_frequency", 2e6 * math.pi),
    "omega_z": ("trap_frequency", 1.0),
    "kg": ("mass", 1.0),
    "amu": ("mass", 1.66053906660e-27),
    "e": ("charge", 1.0),
    "rad": ("angle", 1.0),
    "deg": ("angle", math.pi / 180),
    "1_m": ("wavenumber", 1.0),
    "1_um": ("wavenumber", 1e6),
    "J0": ("energy", 1.0),
    "J0^2": ("ramp_rate", 1.0),
}

CANONICAL = {"dimensionless": "1", "angular_frequency": "rad_s", "trap_frequency": "omega_z",
             "mass": "kg", "charge": "e", "angle": "rad", "wavenumber": "1_m", "energy": "J0",
             "ramp_rate": "J0^2"}


@dataclass(frozen=True)
class Grid:
    """Sample points: ``linspace``/``geomspace`` (start, stop, num) or an explicit list."""

    kind: str
    args: tuple

    def values(self) -> np.ndarray:
        if self.kind == "list":
            return np.asarray(self.args, dtype=float)
        start, stop, num = self.args
        fn = np.linspace if self.kind == "linspace" else np.geomspace
        return fn(start, stop, int(num))

    def scaled(self, factor: float) -> Grid:
        if factor == 1.0:
            return self
        if self.kind == "list":
            return Grid("list", tuple(a * factor for a in self.args))
        return Grid(self.kind, (self.args[0] * factor, self.args[1] * factor, self.args[2]))

    def text(self) -> str:
        if self.kind == "list":
            return "[" + ", ".join(repr(float(a)) for a in self.args) + "]"
        return f"{self.kind}({self.args[0]!r}, {self.args[1]!r}, {int(self.args[2])})"


@dataclass(frozen=True)
class Key:
    name: str
    kind: str  # float | int | str | bool | grid | optional_float
    dimension: str = "dimensionless"
    default: object = None
    doc: str = ""
    choices: tuple = ()
    units: tuple = ()  # accepted units; empty means any unit of the dimension


SCHEMA = {
    "trap": (
        Key("ion_count", "int", default=10, doc="number of ions"),
        Key("length_scale_mode", "str", default="dimensionless", choices=("dimensionless", "physical"),
            doc="dimensionless: frequencies in omega_z; physical: SI"),
        Key("axial_frequency", "float", "trap_frequency", 1.0, "axial trap frequency",
            units=("omega_z", "rad_s", "Hz", "kHz", "MHz")),
        Key("radial_frequency", "optional_float", "trap_frequency", None, "radial trap frequency",
            units=("omega_z", "rad_s", "Hz", "kHz", "MHz")),
        Key("ion_mass", "optional_float", "mass", None, "ion mass (physical mode)"),
        Key("ion_charge", "float", "charge", 1.0, "ion charge"),
    ),
    "beam": (
        Key("rabi_frequency", "float", "trap_frequency", 1.0, "Raman Rabi frequency",
            units=("omega_z", "rad_s", "Hz", "kHz", "MHz")),
        Key("detuning", "float", "trap_frequency", 0.9, "beatnote detuning below the COM mode",
            units=("omega_z", "rad_s", "Hz", "kHz", "MHz")),
        Key("wavevector", "float", "wavenumber", 1.0, "Raman wavevector difference",
            units=("1", "1_m", "1_um")),
        Key("coulomb_ratio", "float", default=0.02, doc="omega_c^2 / omega_z^2 for detuning sweeps"),
        Key("theta", "float", "angle", 0.0, "dressing angle"),
    ),
    "model": (
        Key("sigma", "float", default=2.3, doc="power-law decay exponent"),
        Key("d", "int", default=1, doc="lattice dimension"),
        Key("lam", "float", default=0.5, doc="XXZ anisotropy lambda"),
        Key("h", "float", "energy", 0.0, "longitudinal field"),
        Key("S", "float", default=0.5, doc="spin length"),
        Key("J0", "float", "energy", 1.0, "nearest-neighbour coupling"),
        Key("n_sites", "int", default=10, doc="sites for finite-chain calculations"),
        Key("boundary", "str", default="open", choices=("open", "periodic")),
        Key("p", "float", default=1.0, doc="ramp power"),
    ),
    "sweep": (
        Key("delta_tilde_min", "float", default=1e-3, doc="smallest dimensionless detuning"),
        Key("delta_tilde_max", "float", default=49.0, doc="largest dimensionless detuning"),
        Key("detuning_points", "int", default=200),
        Key("chain_mode", "str", default="both", choices=("real", "equidistant", "both")),
        Key("with_prefactor", "bool", default=True, doc="evaluate D along the sweep (slow)"),
        Key("sigma_grid", "grid", default=Grid("linspace", (1.05, 4.0, 60)), doc="sigma axis for exponent curves"),
        Key("h_grid", "grid", "energy", Grid("linspace", (0.0, 1.5, 151)), "field grid for ED scans"),
        Key("ed_sizes", "grid", default=Grid("list", (4.0, 6.0, 8.0, 10.0, 12.0)), doc="chain lengths for finite-size h_c"),
        Key("rates", "grid", "ramp_rate", Grid("geomspace", (0.02, 2.0, 9)), "ramp rates"),
        Key("h0", "optional_float", "energy", None, "quench start field (default 1.5 h_c)"),
        Key("h_final", "float", "energy", 0.0, "quench end field"),
        Key("seed_field", "float", "energy", 0.2, "transverse symmetry-breaking seed"),
        Key("theta_points", "int", default=101),
        Key("rg_g_max", "float", default=2.0),
        Key("rg_mu_max", "float", default=0.2),
        Key("rg_resolution", "int", default=15),
        Key("rg_b_min", "float", default=-8.0),
    ),
    "output": (
        Key("directory", "str", default="out"),
        Key("plots", "bool", default=True),
    ),
}

SEMANTIC_SECTIONS = ("trap", "beam", "model", "sweep")


def _section_type(name):
    keys = SCHEMA[name]
    return dataclass(frozen=True)(type(f"{name.title()}Section", (), {
        "__annotations__": {k.name: object for k in keys},
        **{k.name: k.default for k in keys},
    }))


TrapSection = _section_type("trap")
BeamSection = _section_type("beam")
ModelSection = _section_type("model")
SweepSection = _section_type("sweep")
OutputSection = _section_type("output")
_SECTION_TYPES = {"trap": TrapSection, "beam": BeamSection, "model": ModelSection,
                  "sweep": SweepSection, "output": OutputSection}


@dataclass(frozen=True)
class RunConfig:
    trap: object = field(default_factory=TrapSection)
    beam: object = field(default_factory=BeamSection)
    model: object = field(default_factory=ModelSection)
    sweep: object = field(default_factory=SweepSection)
    output: object = field(default_factory=OutputSection)
    # unit each key was given in, for serialization; not semantic
    units: tuple = field(default=(), compare=False)

    def with_(self, section: str, **changes) -> RunConfig:
        return replace(self, **{section: replace(getattr(self, section), **changes)})

    def config_hash(self) -> str:
        text = serialize(self, sections=SEMANTIC_SECTIONS, canonical=True)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- expression evaluation ---------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi}


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    raise ValueError("unsupported expression")


def evaluate(expr: str) -> float:
    """Numeric value of an arithmetic expression such as ``2pi*1.0e6``."""
    src = re.sub(r"(\d|\))\s*pi\b", r"\1*pi", expr.strip())
    try:
        return float(_eval(ast.parse(src, mode="eval")))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot evaluate {expr!r}: {exc}") from None


def _split_unit(text: str):
    """Split ``"<expr> <unit>"``; the unit is the last token when it is a known unit."""
    parts = text.rsplit(None, 1)
    if len(parts) == 2 and parts[1] in UNITS:
        return parts[0], parts[1]
    return text, None


def _parse_grid(text: str) -> Grid:
    text = text.strip()
    m = re.fullmatch(r"(linspace|geomspace)\((.*)\)", text)
    if m:
        args = [evaluate(a) for a in m.group(2).split(",")]
        if len(args) != 3 or args[2] != int(args[2]) or args[2] < 0:
            raise ValueError(f"{m.group(1)} needs (start, stop, integer count)")
        if m.group(1) == "geomspace" and args[2] > 0 and (args[0] <= 0 or args[1] <= 0):
            raise ValueError("geomspace endpoints must be positive")
        return Grid(m.group(1), (args[0], args[1], int(args[2])))
    if text.startswith("[") and text.endswith("]"):
        inner = text[1:-1].strip()
        return Grid("list", tuple(evaluate(a) for a in inner.split(",")) if inner else ())
    raise ValueError(f"expected linspace(...), geomspace(...) or [..], got {text!r}")


def _parse_value(key: Key, raw: str):
    """Return (value in canonical units, unit used)."""
    if key.kind == "str":
        if key.choices and raw not in key.choices:
            raise ValueError(f"must be one of {', '.join(key.choices)}; got {raw!r}")
        return raw, None
    if key.kind == "bool":
        low = raw.lower()
        if low not in ("true", "false", "yes", "no", "1", "0"):
            raise ValueError(f"expected a boolean, got {raw!r}")
        return low in ("true", "yes", "1"), None
    expr, unit = _split_unit(raw)
    if key.kind == "optional_float" and expr.strip().lower() == "none":
        return None, unit
    if unit is None:
        if key.dimension != "dimensionless" and "1" not in key.units:
            raise ValueError(f"missing unit; expected a {key.dimension} unit such as {CANONICAL[key.dimension]}")
        unit = "1"
    dim, factor = UNITS[unit]
    allowed = key.units or tuple(u for u, (d, _) in UNITS.items() if d == key.dimension)
    if unit not in allowed:
        raise ValueError(f"unit {unit!r} is not valid here; use one of {', '.join(allowed)}")
    if key.kind == "grid":
        return _parse_grid(expr).scaled(factor), unit
    value = evaluate(expr) * factor
    if key.kind == "int":
        if value != int(value):
            raise ValueError(f"expected an integer, got {expr!r}")
        return int(value), unit
    return value, unit


def parse_config(text: str, path: str | None = None) -> RunConfig:
    values = {name: {} for name in SCHEMA}
    units = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        m = re.fullmatch(r"\[([A-Za-z_]+)\]", s)
        if m:
            section = m.group(1)
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]; known: {', '.join(SCHEMA)}", lineno, path)
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", lineno, path)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno, path)
        name, raw = (p.strip() for p in s.split("=", 1))
        keys = {k.name: k for k in SCHEMA[section]}
        if name not in keys:
            raise ConfigError(f"unknown key {name!r} in [{section}]", lineno, path)
        if name in values[section]:
            raise ConfigError(f"duplicate key {name!r} in [{section}]", lineno, path)
        try:
            value, unit = _parse_value(keys[name], raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{name}: {exc}", lineno, path) from None
        values[section][name] = value
        if unit is not None:
            units[f"{section}.{name}"] = unit
    sections = {name: _SECTION_TYPES[name](**vals) for name, vals in values.items()}
    return RunConfig(**sections, units=tuple(sorted(units.items())))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


def _format(key: Key, value, unit: str | None) -> str:
    if key.kind in ("str",):
        return value
    if key.kind == "bool":
        return "true" if value else "false"
    if value is None:
        return "none"
    unit = unit or CANONICAL[key.dimension]
    factor = UNITS[unit][1]
    if key.kind == "grid":
        body = value.scaled(1 / factor).text() if factor != 1.0 else value.text()
    elif key.kind == "int":
        body = str(value)
    else:
        body = repr(value / factor) if factor != 1.0 else repr(float(value))
    return body if unit == "1" else f"{body} {unit}"


def serialize(cfg: RunConfig, sections=tuple(SCHEMA), canonical: bool = False) -> str:
    """Text form of ``cfg``; ``parse_config(serialize(cfg)) == cfg``.

    ``canonical=True`` writes every value in its canonical unit (used for hashing).
    """
    units = {} if canonical else dict(cfg.units)
    out = [f"# iontrap-xxz run configuration, schema {SCHEMA_VERSION}"]
    for name in sections:
        out.append(f"\n[{name}]")
        sec = getattr(cfg, name)
        for key in SCHEMA[name]:
            unit = units.get(f"{name}.{key.name}")
            if key.units and unit is None and key.dimension != "dimensionless":
                unit = key.units[0]
            out.append(f"{key.name} = {_format(key, getattr(sec, key.name), unit)}")
    return "\n".join(out) + "\n"


def describe_defaults() -> str:
    """Human-readable list of every key with its default, dimension and meaning."""
    lines = []
    for name, keys in SCHEMA.items():
        lines.append(f"[{name}]")
        for k in keys:
            unit = k.units[0] if k.units else CANONICAL[k.dimension]
            lines.append(f"  {k.name:<20} {_format(k, k.default, unit):<32} {k.doc}")
    return "\n".join(lines)


def section_dict(section) -> dict:
    return {f.name: getattr(section, f.name) for f in fields(section)}
