"""Flat ``key=value`` experiment configs and the named presets.

One or more ``key=value`` tokens per line, ``#`` starts a comment. A
``preset`` key loads a bundle of defaults; keys given later override it.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError, ParseError, ValidationError
from .lattice import Geometry, Kind

PRESETS = {
    # double-comb emission trace, one disorder realization
    "fig1": {"task": "trace", "geometry": "double_comb", "cells": "20", "W": "1",
             "g": "1e-3", "x0": "a0"},
    # diamond participation ratio and profiles against W (reduced R)
    "fig2": {"task": "ensemble", "geometry": "diamond", "cells": "31", "sweep": "W",
             "values": "0,0.25,0.5,0.75,1,1.5,2,3,4", "x0s": "a0", "realizations": "500",
             "allow_sign_change": "true"},
    # stub participation ratio against eta, clean and disordered
    "fig3a": {"task": "ensemble", "geometry": "stub", "cells": "31", "sweep": "eta",
              "values": "0.1,0.2,0.5,1,1.5,2,3,5,10", "x0s": "a0,c0", "W": "0,2",
              "realizations": "200"},
    # clean stub lifted-mode profiles at representative eta
    "fig3c": {"task": "ensemble", "geometry": "stub", "cells": "31", "sweep": "eta",
              "values": "0.1,1,10", "x0s": "a0,c0", "W": "0", "realizations": "1"},
}

_X0 = re.compile(r"^([abc])(-?\d+)$")


def parse_x0(text: str, cells: int | None = None) -> tuple[int, str]:
    """``"a0"`` -> ``(0, "a")``; negative cells wrap when ``cells`` is known."""
    m = _X0.match(text.strip())
    if not m:
        raise ValueError(f"bad site {text!r}, expected e.g. a0 or c-1")
    cell = int(m.group(2))
    if cells is not None:
        cell %= cells
    return cell, m.group(1)


def format_x0(x0: tuple[int, str]) -> str:
    return f"{x0[1]}{x0[0]}"


@dataclass(frozen=True)
class ExperimentConfig:
    task: str = "trace"
    preset: str = ""
    geometry: str = "diamond"
    cells: int = 31
    J: float = 1.0
    v1: float = 1.0
    v2: float = 1.0
    v: float = 1.0
    boundary: str = "periodic"
    g: float = 1e-3
    omega_e: float = 0.0
    x0: tuple[int, str] = (0, "a")
    W: tuple[float, ...] = (0.0,)
    onsite_W: float = 0.0
    allow_sign_change: bool = False
    seed: int = 0
    realizations: int = 1
    sweep: str = "W"
    values: tuple[float, ...] = ()
    x0s: tuple[tuple[int, str], ...] = ((0, "a"),)
    use_dynamics: bool = False
    samples: int = 401
    periods: float = 2.0
    out: str = "out"
    threads: int = 1
    dump_lattice: bool = False
    dump_spectrum: bool = False

    @property
    def kind(self) -> Kind:
        return Kind.parse(self.geometry)

    @property
    def width(self) -> float:
        return self.W[0]

    def geometry_obj(self) -> Geometry:
        return Geometry(self.kind, self.cells, J=self.J, v1=self.v1, v2=self.v2, v=self.v,
                        periodic=self.boundary == "periodic")


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_ALIASES = {"n": "cells", "N": "cells", "R": "realizations", "w": "W"}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _float(text: str) -> float:
    val = float(text)
    if not math.isfinite(val):
        raise ValueError(f"non-finite value {text!r}")
    return val


def _convert(key: str, raw: str, cells: int | None):
    typ = _FIELD_TYPES[key]
    if typ == "int":
        return int(raw, 0)
    if typ == "float":
        return _float(raw)
    if typ == "bool":
        return _bool(raw)
    if key == "x0":
        return parse_x0(raw, cells)
    if key == "x0s":
        return tuple(parse_x0(tok, cells) for tok in raw.split(",") if tok.strip())
    if key in ("W", "values"):
        return tuple(_float(tok) for tok in raw.split(",") if tok.strip())
    return raw.strip()


def tokenize(text: str) -> list[tuple[int, str, str]]:
    """``[(line_number, key, raw_value), ...]`` in file order."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = re.sub(r"\s*=\s*", "=", line.split("#", 1)[0].strip())
        if not line:
            continue
        for tok in line.split():
            if "=" not in tok:
                raise ParseError(lineno, f"expected key=value, got {tok!r}")
            key, raw = tok.split("=", 1)
            key = _ALIASES.get(key.strip(), key.strip())
            if key == "eta":
                key = "__eta"
            elif key not in _FIELD_TYPES:
                raise ParseError(lineno, f"unknown key {key!r}")
            if not raw:
                raise ParseError(lineno, f"empty value for {key!r}")
            out.append((lineno, key, raw))
    return out


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate config text; ``overrides`` (raw strings) apply last.

    Raises
    ------
    ParseError
        Malformed line or unparseable value (carries the line number).
    ValidationError
        A value that parses but breaks an invariant (names the field).
    """
    tokens = tokenize(text)
    if overrides:
        tokens += [(0, _ALIASES.get(k, k) if k != "eta" else "__eta", str(v))
                   for k, v in overrides.items() if v is not None]
    raw: dict[str, tuple[int, str]] = {}
    for lineno, key, val in tokens:
        if key == "preset":
            if val not in PRESETS:
                raise ValidationError("preset", f"unknown preset {val!r}; have {sorted(PRESETS)}")
            for pk, pv in PRESETS[val].items():
                raw[pk] = (lineno, pv)
        raw[key] = (lineno, val)

    cells = None
    if "cells" in raw:
        try:
            cells = int(raw["cells"][1], 0)
        except ValueError:
            raise ParseError(raw["cells"][0], f"cells: bad integer {raw['cells'][1]!r}") from None

    values = {}
    eta = None
    for key, (lineno, val) in raw.items():
        try:
            if key == "__eta":
                eta = _float(val)
            else:
                values[key] = _convert(key, val, cells)
        except ValueError as exc:
            raise ParseError(lineno, f"{key}: {exc}") from None
    cfg = ExperimentConfig(**values)
    if eta is not None:
        cfg = replace(cfg, v=eta * cfg.J)
    if "x0" in values and "x0s" not in values:
        cfg = replace(cfg, x0s=(cfg.x0,))
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.task not in ("trace", "ensemble"):
        raise ValidationError("task", f"expected trace or ensemble, got {cfg.task!r}")
    if cfg.preset and cfg.preset not in PRESETS:
        raise ValidationError("preset", f"unknown preset {cfg.preset!r}")
    try:
        kind = cfg.kind
    except ConfigError as exc:
        raise ValidationError("geometry", str(exc)) from None
    if cfg.boundary not in ("periodic", "open"):
        raise ValidationError("boundary", f"expected periodic or open, got {cfg.boundary!r}")
    try:
        cfg.geometry_obj().check()
    except ConfigError as exc:
        field = "cells" if "cell" in str(exc) else "geometry"
        raise ValidationError(field, str(exc)) from None
    if not cfg.g > 0:
        raise ValidationError("g", f"coupling must be positive, got {cfg.g}")
    for name in ("x0",):
        cell, _ = getattr(cfg, name)
        if not 0 <= cell < cfg.cells:
            raise ValidationError(name, f"cell {cell} outside 0..{cfg.cells - 1}")
    if not cfg.x0s:
        raise ValidationError("x0s", "need at least one emitter site")
    for cell, _ in cfg.x0s:
        if not 0 <= cell < cfg.cells:
            raise ValidationError("x0s", f"cell {cell} outside 0..{cfg.cells - 1}")
    if not cfg.W:
        raise ValidationError("W", "need a disorder width")
    for w in cfg.W:
        if w < 0 or (w > 2 and not cfg.allow_sign_change):
            raise ValidationError("W", f"width {w} must lie in [0, 2] unless allow_sign_change=true")
    if len(cfg.W) > 1 and not (cfg.task == "ensemble" and cfg.sweep == "eta"):
        raise ValidationError("W", "a list of widths is only allowed for eta sweeps")
    if cfg.onsite_W < 0:
        raise ValidationError("onsite_W", "must be >= 0")
    if not 0 <= cfg.seed < 2**64:
        raise ValidationError("seed", "must be an unsigned 64-bit integer")
    if cfg.realizations < 1:
        raise ValidationError("realizations", "must be >= 1")
    if cfg.threads < 0:
        raise ValidationError("threads", "must be >= 0")
    if cfg.samples < 2:
        raise ValidationError("samples", "need at least 2 time samples")
    if cfg.periods <= 0:
        raise ValidationError("periods", "must be positive")
    if cfg.task == "ensemble":
        if cfg.sweep not in ("W", "eta"):
            raise ValidationError("sweep", f"expected W or eta, got {cfg.sweep!r}")
        if not cfg.values:
            raise ValidationError("values", "ensemble needs a non-empty parameter grid")
        if cfg.sweep == "eta":
            if kind is not Kind.STUB:
                raise ValidationError("sweep", "eta sweeps need geometry=stub")
            if any(val <= 0 for val in cfg.values):
                raise ValidationError("values", "eta values must be positive")
        else:
            for w in cfg.values:
                if w < 0 or (w > 2 and not cfg.allow_sign_change):
                    raise ValidationError("values", f"width {w} needs allow_sign_change=true")


def _render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ",".join(format_x0(x) for x in value)
        if len(value) == 2 and isinstance(value[1], str):
            return format_x0(value)
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def render(cfg: ExperimentConfig) -> str:
    """Config text that parses back to ``cfg``."""
    lines = [f"preset={cfg.preset}"] if cfg.preset else []
    for key, value in asdict(cfg).items():
        if key == "preset" or (key == "values" and not value):
            continue
        lines.append(f"{key}={_render_value(getattr(cfg, key))}")
    return "\n".join(lines) + "\n"
