"""Run configuration.

Two equivalent encodings are accepted.  The flat form has one
``section.key = value`` per line, ``#`` comments and blank lines::

    grid.n = 32
    grid.box_length = 2*pi
    solver.dt = 1e-3
    initial.kind = taylor_green

The JSON form is either nested (``{"grid": {"n": 32}}``) or flat
(``{"grid.n": 32}``).  Numbers may be written as ``pi`` multiples.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

from .ns_solver import INITIAL_KINDS, SCHEMES
from .spectral import Grid


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class GridSection:
    n: int = 32
    box_length: float = 2 * math.pi
    dealias: float = 2.0 / 3.0


@dataclass(frozen=True)
class SolverSection:
    dt: float = 1e-3
    horizon: float = 0.5
    save_every: int = 10
    scheme: str = "etd_rk2"


@dataclass(frozen=True)
class PhysicsSection:
    p: float = 4.0
    a: float = 0.0
    c_p: float = 2.0
    d_p: float = 10.0
    b: float = 1.0


@dataclass(frozen=True)
class InitialSection:
    kind: str = "taylor_green"
    M: float = 4.0
    seed: int = 0
    amplitude: float = 1.0


@dataclass(frozen=True)
class CascadeSection:
    dt: float = 0.0  # 0 selects the stability limit
    layers: int = 0  # 0 selects floor(p) + 3


@dataclass(frozen=True)
class MonitorSection:
    n_dirs: int = 0
    scan_events: bool = False


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    solver: SolverSection = field(default_factory=SolverSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    initial: InitialSection = field(default_factory=InitialSection)
    cascade: CascadeSection = field(default_factory=CascadeSection)
    monitor: MonitorSection = field(default_factory=MonitorSection)
    outputs: OutputSection = field(default_factory=OutputSection)

    def make_grid(self) -> Grid:
        return Grid(self.grid.n, self.grid.box_length, self.grid.dealias)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, initial=replace(self.initial, seed=int(seed)))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outputs"]["formats"] = list(d["outputs"]["formats"])
        return d

    def validate(self) -> "RunConfig":
        try:
            g = self.make_grid()
        except ValueError as e:
            raise ConfigError(f"grid: {e}") from None
        s, ph = self.solver, self.physics
        if not s.dt > 0 or not s.horizon > 0:
            raise ConfigError("solver.dt and solver.horizon must be positive")
        if s.save_every < 1:
            raise ConfigError("solver.save_every must be >= 1")
        if s.scheme not in SCHEMES:
            raise ConfigError(f"solver.scheme must be one of {SCHEMES}")
        if s.dt * g.max_retained_kmag ** 2 > 10:
            raise ConfigError(f"solver.dt violates dt * k_max^2 <= 10 (k_max^2 = {g.max_retained_kmag ** 2:.4g})")
        if not ph.p > 3:
            raise ConfigError("physics.p must exceed 3")
        if not 0 <= ph.a <= 1:
            raise ConfigError("physics.a must lie in [0, 1]")
        if not ph.c_p >= 1 or not ph.d_p > 1 or not ph.b > 0:
            raise ConfigError("physics.c_p >= 1, physics.d_p > 1 and physics.b > 0 are required")
        if self.initial.kind not in INITIAL_KINDS:
            raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}")
        if self.initial.seed < 0:
            raise ConfigError("initial.seed must be nonnegative")
        if self.cascade.dt < 0 or self.cascade.dt * g.k_cutoff ** 2 > 1 + 1e-12:
            raise ConfigError(f"cascade.dt must lie in [0, 1/k_cutoff^2 = {1 / g.k_cutoff ** 2:.4g}]")
        if self.cascade.layers < 0:
            raise ConfigError("cascade.layers must be nonnegative")
        if self.monitor.n_dirs and self.monitor.n_dirs < 6:
            raise ConfigError("monitor.n_dirs must be 0 or at least 6")
        bad = set(self.outputs.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        return self


_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?\s*\*?\s*pi\s*$")


def _coerce(text: Any, kind: type, key: str):
    try:
        if kind is bool:
            if isinstance(text, bool):
                return text
            s = str(text).strip().lower()
            if s in ("true", "1", "yes"):
                return True
            if s in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if kind is int:
            if isinstance(text, float) and not text.is_integer():
                raise ValueError(text)
            return int(str(text).strip()) if not isinstance(text, (int, float)) else int(text)
        if kind is float:
            if isinstance(text, (int, float)) and not isinstance(text, bool):
                return float(text)
            s = str(text).strip()
            m = _NUMBER.match(s)
            if m:
                return (float(m.group(1)) if m.group(1) else 1.0) * math.pi
            return float(s)
        if kind is str:
            return str(text).strip()
        if kind == tuple[str, ...]:
            if isinstance(text, (list, tuple)):
                return tuple(str(x) for x in text)
            return tuple(x.strip() for x in str(text).split(",") if x.strip())
    except (TypeError, ValueError):
        pass
    raise ConfigError(f"{key}: cannot read {text!r} as {getattr(kind, '__name__', kind)}")


def _section_types(section_cls) -> dict[str, type]:
    hints = {"int": int, "float": float, "str": str, "bool": bool, "tuple[str, ...]": tuple[str, ...]}
    return {f.name: hints[f.type] if isinstance(f.type, str) else f.type for f in fields(section_cls)}


_SECTION_CLASSES = {"grid": GridSection, "solver": SolverSection, "physics": PhysicsSection,
                    "initial": InitialSection, "cascade": CascadeSection, "monitor": MonitorSection,
                    "outputs": OutputSection}


def from_flat(items: Mapping[str, Any]) -> RunConfig:
    grouped: dict[str, dict[str, Any]] = {s: {} for s in _SECTION_CLASSES}
    for key, raw in items.items():
        if "." not in key:
            raise ConfigError(f"key {key!r} needs a section prefix such as grid.")
        sec, name = key.split(".", 1)
        if sec not in _SECTION_CLASSES:
            raise ConfigError(f"unknown section {sec!r}")
        types = _section_types(_SECTION_CLASSES[sec])
        if name not in types:
            raise ConfigError(f"unknown key {key!r}")
        grouped[sec][name] = _coerce(raw, types[name], key)
    return RunConfig(**{s: cls(**grouped[s]) for s, cls in _SECTION_CLASSES.items()}).validate()


def _flatten(obj: Mapping, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` text or JSON."""
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(stripped)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from None
        return from_flat(_flatten(obj))
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k in items:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        items[k] = v
    return from_flat(items)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text)


def dump_flat(cfg: RunConfig) -> str:
    lines = []
    for key, v in _flatten(cfg.to_dict()).items():
        if isinstance(v, list):
            v = ",".join(v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
