"""Run configuration: nested dataclasses, JSON round trip, dotted overrides.

A config file is plain JSON with sections mirroring RunConfig. Unknown
keys are rejected loudly so a typo cannot silently fall back to a
default. The config hash names output files, so serialization is
canonical (sorted keys, no timestamps).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

__all__ = [
    "GridConfig",
    "OperatorConfig",
    "NonlinearityConfig",
    "EvolutionSettings",
    "VirialConfig",
    "ExperimentConfig",
    "RunConfig",
    "load_config",
    "apply_overrides",
    "config_hash",
]


@dataclass
class GridConfig:
    L: float = 80.0
    N: int = 4001


@dataclass
class OperatorConfig:
    q: float = 1.0


@dataclass
class NonlinearityConfig:
    kind: str = "power"  # "power" or "saturating"
    p: float = 1.0
    lam: float = -1.0


@dataclass
class EvolutionSettings:
    dt: float = 0.0  # 0 means "pick h/4"
    T: float = 20.0
    sponge: bool = False
    cadence: int = 50


@dataclass
class VirialConfig:
    A: float = 16.0


@dataclass
class ExperimentConfig:
    eps_ladder: list = field(default_factory=lambda: [0.0125, 0.025, 0.05, 0.1])
    amplitudes: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    T: float = 200.0
    shape: str = "soliton_bump"


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    op: OperatorConfig = field(default_factory=OperatorConfig)
    nl: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    evo: EvolutionSettings = field(default_factory=EvolutionSettings)
    virial: VirialConfig = field(default_factory=VirialConfig)
    exp: ExperimentConfig = field(default_factory=ExperimentConfig)
    gamma: float = 0.2
    seed: int = 0
    out: str = ""

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    f.name for f in dataclasses.fields(RunConfig)
    if f.default_factory is not dataclasses.MISSING
    and dataclasses.is_dataclass(f.default_factory)
}

# accepted spellings for awkward attribute names
_ALIASES = {("nl", "lambda"): "lam"}


def _coerce(value, target_type):
    if target_type is float and isinstance(value, (int, float)):
        return float(value)
    if target_type is int:
        if isinstance(value, bool) or (isinstance(value, float) and value != int(value)):
            raise TypeError
        if isinstance(value, (int, float)):
            return int(value)
    if target_type is bool and isinstance(value, bool):
        return value
    if target_type is str and isinstance(value, str):
        return value
    if target_type is list and isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    if isinstance(value, target_type):
        return value
    raise TypeError


def _set_field(obj, section: str, key: str, value):
    key = _ALIASES.get((section, key), key)
    names = {f.name: f for f in dataclasses.fields(obj)}
    if key not in names:
        where = section or "top level"
        raise ValueError(f"unknown config key {key!r} in {where}")
    ftype = names[key].type
    target = {"float": float, "int": int, "bool": bool, "str": str, "list": list}.get(ftype, None)
    if target is None:
        target = ftype if isinstance(ftype, type) else float
    try:
        setattr(obj, key, _coerce(value, target))
    except TypeError:
        raise ValueError(
            f"config key {section + '.' if section else ''}{key} expects {target.__name__}, "
            f"got {value!r}"
        ) from None


def from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a nested dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ValueError(f"config root must be an object, got {type(data).__name__}")
    cfg = RunConfig()
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ValueError(f"config section {key!r} must be an object")
            section_obj = getattr(cfg, key)
            for k2, v2 in value.items():
                _set_field(section_obj, key, k2, v2)
        else:
            _set_field(cfg, "", key, value)
    return cfg


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config file {path} is not valid JSON: {exc}") from None
    return from_dict(data)


def apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    """Apply dotted key overrides like ('grid.L', '20') in order."""
    for dotted, raw in pairs:
        parts = dotted.split(".")
        if len(parts) == 1:
            target, section, key = cfg, "", parts[0]
        elif len(parts) == 2 and parts[0] in _SECTIONS:
            target, section, key = getattr(cfg, parts[0]), parts[0], parts[1]
        else:
            raise ValueError(f"unknown config key {dotted!r}")
        _set_field(target, section, key, _parse_literal(raw))
    return cfg


def _parse_literal(raw):
    if isinstance(raw, (int, float, bool, list)):
        return raw
    text = str(raw).strip()
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if "," in text or text.startswith("["):
        inner = text.strip("[]")
        return [float(tok) for tok in inner.split(",") if tok.strip()]
    try:
        as_float = float(text)
    except ValueError:
        return text
    if as_float == int(as_float) and "." not in text and "e" not in text.lower():
        return int(as_float)
    return as_float


def config_hash(cfg: RunConfig, n: int = 10) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:n]


def write_json(path: str, payload: dict):
    """Atomic JSON write (temp file then rename)."""
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
