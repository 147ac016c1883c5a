"""Run configuration files: ``key = value`` lines grouped in sections.

Grid runs need a ``[grid]`` section and background runs a ``[background]``
section; an optional ``[run]`` section holds the seed and quadrature rule. Unknown sections and keys are rejected, and
every error names the offending line and key.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

__all__ = ["ConfigError", "GridConfig", "BackgroundConfig", "RunConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``line`` and ``key`` locate the problem when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line, self.key = line, key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass
class GridConfig:
    u0: float = -800.0
    u_max: float | None = None
    ub0: float = 0.0
    ub_max: float = 8.75
    n_u: int = 64
    n_ub: int = 64
    L: int = 8
    background: str = "minkowski"
    M: float = 0.0
    s: float = 5.0
    data_profile: str = "peeling"

    @property
    def u1(self) -> float:
        """Last outgoing cone; defaults to u0 / 4 so |u| spans a factor of four."""
        return self.u_max if self.u_max is not None else self.u0 / 4.0


@dataclass
class BackgroundConfig:
    M: float = 1.0
    a: float = 0.0
    r_min: float = 10.0
    r_max: float = 1000.0
    n_samples: int = 200


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    background: BackgroundConfig = field(default_factory=BackgroundConfig)
    seed: int = 0
    quadrature: str = "simpson"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["grid"]["u_max"] = self.grid.u1
        return d


_GRID_TYPES = {
    "u0": float, "u_max": float, "ub0": float, "ub_max": float, "n_u": int, "n_ub": int,
    "L": int, "background": str, "M": float, "s": float, "data_profile": str,
}
_BACKGROUND_TYPES = {"M": float, "a": float, "r_min": float, "r_max": float, "n_samples": int}
_RUN_TYPES = {"seed": int, "quadrature": str}
_SECTIONS = {"grid": _GRID_TYPES, "background": _BACKGROUND_TYPES, "run": _RUN_TYPES}
_CHOICES = {
    "background": ("minkowski", "schwarzschild"),
    "data_profile": ("peeling", "pointwise", "l2"),
    "quadrature": ("simpson", "trapezoid"),
}


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every (section, key) in the raw text."""
    out, section = {}, None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out[(section, "")] = n
            continue
        key = line.split("=", 1)[0].strip()
        out.setdefault((section, key), n)
    return out


def _convert(section: str, key: str, value: str, line: int | None):
    typ = _SECTIONS[section][key]
    try:
        if typ is int:
            v = int(value)
        elif typ is float:
            v = float(value)
            if not math.isfinite(v):
                raise ValueError
        else:
            v = value.strip().lower()
    except ValueError:
        raise ConfigError(f"expected {typ.__name__}, got {value!r}", line, key) from None
    if key in _CHOICES and v not in _CHOICES[key]:
        raise ConfigError(f"must be one of {', '.join(_CHOICES[key])}", line, key)
    return v


def parse_config(text: str, require: str = "grid") -> RunConfig:
    """Parse and validate configuration text; raises :class:`ConfigError`.

    ``require`` names the section the caller needs (``grid`` or ``background``).
    """
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if getattr(exc, "errors", None) else None
        raise ConfigError("malformed line", line) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError("duplicate key", exc.lineno, exc.option) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of a section", exc.lineno) from None
    lines = _key_lines(text)
    if not parser.sections():
        raise ConfigError(f"empty configuration: a [{require}] section is required")
    values: dict[str, dict] = {sec: {} for sec in _SECTIONS}
    for sec in parser.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec, "")))
        for key, raw in parser.items(sec):
            line = lines.get((sec, key))
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key in [{sec}]", line, key)
            values[sec][key] = _convert(sec, key, raw, line)
    if require not in parser.sections():
        raise ConfigError(f"a [{require}] section is required")
    grid = GridConfig(**values["grid"])
    if "grid" in parser.sections():
        _validate(grid, lines)
    bg = BackgroundConfig(**values["background"])
    if "background" in parser.sections():
        _validate_background(bg, lines)
    return RunConfig(grid=grid, background=bg, **values["run"])


def _validate(g: GridConfig, lines: dict) -> None:
    def fail(msg, key):
        raise ConfigError(msg, lines.get(("grid", key)), key)

    if g.n_u < 3:
        fail("need at least 3 outgoing cones", "n_u")
    if g.n_ub < 3:
        fail("need at least 3 ingoing cones", "n_ub")
    if g.L < 2:
        fail("band limit must be at least 2", "L")
    if g.ub_max <= g.ub0:
        fail("ub_max must exceed ub0", "ub_max")
    if g.u1 <= g.u0:
        fail("u_max must exceed u0", "u_max" if g.u_max is not None else "u0")
    if g.ub0 - g.u1 <= 0:
        fail("the grid must satisfy ub - u > 0 everywhere", "ub0")
    if g.s <= 3:
        fail("decay rate s must exceed 3", "s")
    if g.background == "minkowski" and g.M != 0:
        fail("minkowski background needs M = 0", "M")
    if g.background == "schwarzschild" and g.M <= 0:
        fail("schwarzschild background needs M > 0", "M")


def _validate_background(b: BackgroundConfig, lines: dict) -> None:
    def fail(msg, key):
        raise ConfigError(msg, lines.get(("background", key)), key)

    if b.M <= 0:
        fail("mass must be positive", "M")
    if abs(b.a) > b.M:
        fail("need |a| <= M", "a")
    if b.r_min <= 0:
        fail("r_min must be positive", "r_min")
    if b.r_max <= b.r_min:
        fail("r_max must exceed r_min", "r_max")
    if b.n_samples < 2:
        fail("need at least 2 samples", "n_samples")


def load_config(path, require: str = "grid") -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, require)
