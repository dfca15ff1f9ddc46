"""INI-style run configuration with unit-tagged keys.

Sections are ``[circuit]``, ``[grid]``, ``[output]`` and any number of
``[sweep.NAME]`` blocks.  Circuit keys carry their unit in the name
(``L_r_nH``, ``C_r_fF``, ...) and are converted to SI through
:class:`decimal.Decimal`, so serializing and re-parsing is lossless.
"""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field, fields
from decimal import Decimal
from importlib import resources
from pathlib import Path

from .circuit import CircuitParameters
from .errors import ConfigError, InvalidParametersError

# key -> (CircuitParameters field, SI scale)
CIRCUIT_KEYS = {
    "L_r_nH": ("L_r", "1e-9"),
    "C_r_fF": ("C_r", "1e-15"),
    "L_a_nH": ("L_a", "1e-9"),
    "C_a_total_fF": ("C_a_total", "1e-15"),
    "I0_a_uA": ("I0_a", "1e-6"),
    "I0_c_nA": ("I0_c", "1e-9"),
    "C_c_total_fF": ("C_c_total", "1e-15"),
    "flux_ext_Phi0": ("flux_ext", "1"),
    "flux_cpl_Phi0": ("flux_cpl", "1"),
}
AXES = ("flux_cpl", "flux_ext")
SWEEP_KINDS = ("rates", "resonance")
POTENTIALS = ("rf_squid", "harmonic")
FORMATS = ("csv", "record")


@dataclass(frozen=True)
class GridConfig:
    n_points: int = 4096
    margin_rad: float = 4.0
    phi_min_rad: float | None = None
    phi_max_rad: float | None = None
    potential: str = "rf_squid"
    coupled: bool = True
    n_levels: int = 12


@dataclass(frozen=True)
class SweepConfig:
    name: str
    axis: str
    start_Phi0: float
    stop_Phi0: float
    n_points: int
    freeze_zpf: bool = False
    numeric_every: int = 0
    kind: str = "rates"
    perturbations: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "record")


@dataclass(frozen=True)
class RunConfig:
    circuit: CircuitParameters
    grid: GridConfig = GridConfig()
    sweeps: tuple[SweepConfig, ...] = ()
    output: OutputConfig = OutputConfig()
    defaults_applied: tuple[str, ...] = field(default=(), compare=False)

    def sweep(self, name: str) -> SweepConfig:
        for s in self.sweeps:
            if s.name == name:
                return s
        raise ConfigError(f"no sweep named {name!r}", f"[sweep.{name}]")

    def digest(self) -> str:
        return config_hash(self)


# --------------------------------------------------------------------------
# value conversion

def _to_si(text: str, scale: str) -> float:
    return float(Decimal(text) * Decimal(scale))


def _from_si(value: float, scale: str) -> str:
    d = Decimal(repr(value)) / Decimal(scale)
    s = format(d.normalize(), "f") if d != 0 else "0"
    return s


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _float_tuple(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _str_tuple(text: str) -> tuple[str, ...]:
    return tuple(x for x in text.replace(",", " ").split())


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


GRID_KEYS = {
    "n_points": int, "margin_rad": float, "phi_min_rad": _optional_float,
    "phi_max_rad": _optional_float, "potential": str, "coupled": _bool, "n_levels": int,
}
SWEEP_KEYS = {
    "axis": str, "start_Phi0": float, "stop_Phi0": float, "n_points": int,
    "freeze_zpf": _bool, "numeric_every": int, "kind": str, "perturbations": _float_tuple,
}
SWEEP_REQUIRED = ("axis", "start_Phi0", "stop_Phi0", "n_points")
OUTPUT_KEYS = {"directory": str, "formats": _str_tuple}


# --------------------------------------------------------------------------
# parsing

class _Locator:
    """Line numbers of sections and keys in the raw text."""

    def __init__(self, text: str, source: str):
        self.source = source
        self.lines: dict[tuple[str, str | None], int] = {}
        section = None
        for no, line in enumerate(text.splitlines(), 1):
            stripped = line.strip()
            m = re.match(r"\[([^\]]+)\]", stripped)
            if m:
                section = m.group(1).strip()
                self.lines[(section, None)] = no
            elif section and stripped and stripped[0] not in "#;":
                key = re.split(r"[=:]", stripped, maxsplit=1)[0].strip()
                self.lines.setdefault((section, key), no)

    def __call__(self, section: str, key: str | None = None) -> str:
        no = self.lines.get((section, key)) or self.lines.get((section, None))
        where = f"[{section}]" + (f" {key}" if key else "")
        return f"{self.source}:{no}: {where}" if no else f"{self.source}: {where}"


def _new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive
    return cp


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    cp = _new_parser()
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"key outside any section: {exc.line.strip()!r}",
                          f"{source}:{exc.lineno}:1") from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", f"{source}:{exc.lineno}:1") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", f"{source}:{exc.lineno}:1") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse line {line.strip()!r}", f"{source}:{lineno}:1") from None
    loc = _Locator(text, source)

    if "circuit" not in cp:
        raise ConfigError("missing [circuit] section; required keys: "
                          + ", ".join(f"circuit.{k}" for k in CIRCUIT_KEYS), source)
    for section in cp.sections():
        if section not in ("circuit", "grid", "output") and not section.startswith("sweep."):
            raise ConfigError(f"unknown section [{section}]", loc(section))

    defaults: list[str] = []
    circuit = _parse_circuit(cp["circuit"], loc)
    grid = _parse_block(cp, "grid", GRID_KEYS, GridConfig, loc, defaults)
    output = _parse_block(cp, "output", OUTPUT_KEYS, OutputConfig, loc, defaults)
    sweeps = tuple(_parse_sweep(cp, s, loc, defaults) for s in cp.sections() if s.startswith("sweep."))
    _check_grid(grid, loc)
    for fmt in output.formats:
        if fmt not in FORMATS:
            raise ConfigError(f"unknown output format {fmt!r}; use one of {FORMATS}",
                              loc("output", "formats"))
    return RunConfig(circuit, grid, sweeps, output, tuple(defaults))


def _parse_circuit(sec, loc) -> CircuitParameters:
    for key in sec:
        if key not in CIRCUIT_KEYS:
            raise ConfigError(f"unknown key {key!r}; known: {', '.join(CIRCUIT_KEYS)}",
                              loc("circuit", key))
    missing = [k for k in CIRCUIT_KEYS if k not in sec]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(f"circuit.{k}" for k in missing),
                          loc("circuit"))
    values = {}
    for key, (name, scale) in CIRCUIT_KEYS.items():
        try:
            values[name] = _to_si(sec[key], scale)
        except Exception:
            raise ConfigError(f"{key} must be a number, got {sec[key]!r}", loc("circuit", key)) from None
    try:
        return CircuitParameters(**values)
    except InvalidParametersError as exc:
        raise ConfigError(str(exc), loc("circuit")) from None


def _convert(section, key, conv, raw, loc):
    try:
        return conv(raw)
    except (ValueError, TypeError):
        raise ConfigError(f"invalid value {raw!r} for {key}", loc(section, key)) from None


def _parse_block(cp, section, keys, cls, loc, defaults):
    if section not in cp:
        defaults.extend(f"{section}.{f.name}" for f in fields(cls))
        return cls()
    sec = cp[section]
    kwargs = {}
    for key in sec:
        if key not in keys:
            raise ConfigError(f"unknown key {key!r}; known: {', '.join(keys)}", loc(section, key))
        kwargs[key] = _convert(section, key, keys[key], sec[key], loc)
    defaults.extend(f"{section}.{k}" for k in keys if k not in kwargs)
    return cls(**kwargs)


def _parse_sweep(cp, section, loc, defaults) -> SweepConfig:
    name = section.split(".", 1)[1]
    if not re.fullmatch(r"[A-Za-z0-9_-]+", name):
        raise ConfigError(f"invalid sweep name {name!r}", loc(section))
    sec = cp[section]
    kwargs = {}
    for key in sec:
        if key not in SWEEP_KEYS:
            raise ConfigError(f"unknown key {key!r}; known: {', '.join(SWEEP_KEYS)}", loc(section, key))
        kwargs[key] = _convert(section, key, SWEEP_KEYS[key], sec[key], loc)
    missing = [k for k in SWEEP_REQUIRED if k not in kwargs]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(f"{section}.{k}" for k in missing),
                          loc(section))
    defaults.extend(f"{section}.{k}" for k in SWEEP_KEYS if k not in kwargs)
    s = SweepConfig(name=name, **kwargs)
    if s.axis not in AXES:
        raise ConfigError(f"axis must be one of {AXES}", loc(section, "axis"))
    if s.kind not in SWEEP_KINDS:
        raise ConfigError(f"kind must be one of {SWEEP_KINDS}", loc(section, "kind"))
    if not s.start_Phi0 < s.stop_Phi0:
        raise ConfigError("start_Phi0 must be below stop_Phi0", loc(section, "start_Phi0"))
    if s.n_points < 2:
        raise ConfigError("n_points must be at least 2", loc(section, "n_points"))
    if s.numeric_every < 0:
        raise ConfigError("numeric_every must be non-negative", loc(section, "numeric_every"))
    if not s.perturbations or any(abs(p) >= 0.05 for p in s.perturbations):
        raise ConfigError("perturbations must be non-empty with |p| < 0.05", loc(section, "perturbations"))
    return s


def _check_grid(g: GridConfig, loc):
    if g.n_points < 512:
        raise ConfigError("grid n_points must be at least 512", loc("grid", "n_points"))
    if g.potential not in POTENTIALS:
        raise ConfigError(f"potential must be one of {POTENTIALS}", loc("grid", "potential"))
    if (g.phi_min_rad is None) != (g.phi_max_rad is None):
        raise ConfigError("set both phi_min_rad and phi_max_rad or neither", loc("grid"))
    if g.phi_min_rad is not None and not g.phi_min_rad < g.phi_max_rad:
        raise ConfigError("phi_min_rad must be below phi_max_rad", loc("grid", "phi_min_rad"))
    if g.n_levels < 2:
        raise ConfigError("n_levels must be at least 2", loc("grid", "n_levels"))


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config_text(text, str(path))


def shipped_config_path(name: str = "reference_circuit.cfg") -> Path:
    return Path(str(resources.files("squidcoupler") / "data" / name))


def load_reference_config() -> RunConfig:
    return parse_config(shipped_config_path())


# --------------------------------------------------------------------------
# serialization

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; every key is written, defaults included."""
    out = ["[circuit]"]
    for key, (name, scale) in CIRCUIT_KEYS.items():
        out.append(f"{key} = {_from_si(getattr(cfg.circuit, name), scale)}")
    out += ["", "[grid]"]
    out += [f"{f.name} = {_fmt(getattr(cfg.grid, f.name))}" for f in fields(GridConfig)]
    for s in cfg.sweeps:
        out += ["", f"[sweep.{s.name}]"]
        out += [f"{f.name} = {_fmt(getattr(s, f.name))}" for f in fields(SweepConfig) if f.name != "name"]
    out += ["", "[output]"]
    out += [f"{f.name} = {_fmt(getattr(cfg.output, f.name))}" for f in fields(OutputConfig)]
    return "\n".join(out) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()
