"""INI run configuration with strict keys and line-numbered errors."""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from ..errors import ConfigError, ParameterError
from ..model import InitialDatumSpec, ModelParameters, RadialGrid
from ..usolver import LIMITERS, StepControl

SCHEMA = {
    "model": {"n", "R", "kappa", "lam", "mu", "m0", "m1"},
    "datum": {"r1", "smoothness", "delta"},
    "grid": {"cells", "kind", "core", "cluster"},
    "solver": {"which"},
    "control": {"cfl_diffusion", "cfl_advection", "dt_min", "blowup_threshold", "T_end",
                "record_every", "limiter", "chunk_steps"},
    "diagnostics": {"gamma", "s0"},
    "certificate": {"enabled", "gamma"},
    "output": {"directory"},
}
REQUIRED = {"model": {"n", "R", "kappa", "lam", "mu", "m0", "m1"}, "datum": {"r1"}}
GRID_KINDS = ("cored", "uniform", "geometric")
SOLVERS = ("u", "w", "both")


@dataclass(frozen=True)
class GridSpec:
    cells: int = 2048
    kind: str = "cored"
    core: float = 2.0
    cluster: float = 1e-3

    def build(self, R: float, n: int) -> RadialGrid:
        if self.kind == "uniform":
            return RadialGrid.uniform(self.cells, R, n)
        if self.kind == "geometric":
            return RadialGrid.geometric(self.cells, R, n, self.cluster)
        return RadialGrid.cored(self.cells, R, n, self.core)


@dataclass(frozen=True)
class DiagnosticsPlan:
    """``gamma``/``s0`` of ``None`` mean: derive from the certificate or defaults."""

    gammas: Optional[Tuple[float, ...]] = None
    s0s: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class RunConfig:
    params: ModelParameters
    r1: Union[float, str]
    smoothness: int = 2
    delta: Optional[float] = None
    grid: GridSpec = field(default_factory=GridSpec)
    solver: str = "u"
    control: StepControl = field(default_factory=StepControl)
    diagnostics: DiagnosticsPlan = field(default_factory=DiagnosticsPlan)
    certificate: bool = False
    cert_gamma: Optional[float] = None
    output: str = "runs/default"
    source: str = ""

    def datum_spec(self, r1: float) -> InitialDatumSpec:
        return InitialDatumSpec(r1=r1, smoothness=self.smoothness, delta=self.delta)

    def with_overrides(self, **kv) -> "RunConfig":
        """Copy with sweep-axis overrides (kappa, mu, n, gamma, cells)."""
        cfg = self
        for key, val in kv.items():
            if key in ("kappa", "mu", "n", "lam", "m0", "m1", "R"):
                cfg = replace(cfg, params=cfg.params.replace(**{key: val}))
            elif key == "gamma":
                cfg = replace(cfg, diagnostics=replace(cfg.diagnostics, gammas=(float(val),)),
                              cert_gamma=float(val))
            elif key == "cells":
                cfg = replace(cfg, grid=replace(cfg.grid, cells=int(val)))
            elif key == "r1":
                cfg = replace(cfg, r1=val)
            else:
                raise ConfigError(f"unknown sweep axis {key!r}", field=key)
        return cfg


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines[(section, "")] = i
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = i
    return lines


class _Reader:
    def __init__(self, parser, lines):
        self.parser = parser
        self.lines = lines

    def err(self, section, key, msg):
        return ConfigError(msg, field=f"{section}.{key}", line=self.lines.get((section, key.lower())))

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key):
        return self.parser.get(section, key).strip()

    def number(self, section, key, default=None, kind=float):
        if not self.has(section, key):
            if default is None and key in REQUIRED.get(section, ()):
                raise self.err(section, key, "missing required key")
            return default
        text = self.raw(section, key)
        try:
            val = kind(text)
        except ValueError:
            raise self.err(section, key, f"expected {kind.__name__}, got {text!r}") from None
        if kind is float and not math.isfinite(val):
            raise self.err(section, key, f"value must be finite, got {text!r}")
        return val

    def floats(self, section, key):
        if not self.has(section, key):
            return None
        text = self.raw(section, key)
        if text.lower() == "auto":
            return None
        try:
            return tuple(float(x) for x in text.split(",") if x.strip())
        except ValueError:
            raise self.err(section, key, f"expected a comma-separated list, got {text!r}") from None

    def choice(self, section, key, options, default):
        if not self.has(section, key):
            return default
        val = self.raw(section, key).lower()
        if val not in options:
            raise self.err(section, key, f"expected one of {', '.join(options)}, got {val!r}")
        return val

    def boolean(self, section, key, default=False):
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            raise self.err(section, key, "expected yes/no") from None


def parse_config(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    """Parse and validate; every error names the offending field and line."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"malformed config: {exc.message if hasattr(exc, 'message') else exc}",
                          line=line) from None
    lines = _key_lines(text)
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", field=section,
                              line=lines.get((section, "")))
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r}", field=f"{section}.{key}",
                                  line=lines.get((section, key.lower())))
    for section, keys in REQUIRED.items():
        for key in keys:
            if not parser.has_option(section, key):
                raise ConfigError("missing required key", field=f"{section}.{key}",
                                  line=lines.get((section, "")))
    rd = _Reader(parser, lines)

    vals = {k: rd.number("model", k) for k in ("R", "kappa", "lam", "mu", "m0", "m1")}
    vals["n"] = rd.number("model", "n", kind=int)
    try:
        params = ModelParameters(**vals)
    except ParameterError as exc:
        raise rd.err("model", exc.field, str(exc)) from None

    r1_text = rd.raw("datum", "r1")
    if r1_text.lower() == "certificate":
        r1 = "certificate"
    else:
        r1 = rd.number("datum", "r1")
    smoothness = rd.number("datum", "smoothness", 2, int)
    delta = rd.number("datum", "delta", None)
    if r1 != "certificate" or delta is not None or smoothness != 2:
        try:
            InitialDatumSpec(r1=1.0 if r1 == "certificate" else r1, smoothness=smoothness, delta=delta)
        except ParameterError as exc:
            raise rd.err("datum", exc.field, str(exc)) from None

    grid = GridSpec(
        cells=rd.number("grid", "cells", 2048, int),
        kind=rd.choice("grid", "kind", GRID_KINDS, "cored"),
        core=rd.number("grid", "core", 2.0),
        cluster=rd.number("grid", "cluster", 1e-3),
    )
    try:
        grid.build(params.R, params.n)
    except ParameterError as exc:
        raise rd.err("grid", "cells" if exc.field == "grid" else exc.field, str(exc)) from None

    ctrl_kw = {}
    for key in ("cfl_diffusion", "cfl_advection", "dt_min", "blowup_threshold", "T_end", "record_every"):
        v = rd.number("control", key, None)
        if v is not None:
            ctrl_kw[key] = v
    chunk = rd.number("control", "chunk_steps", None, int)
    if chunk is not None:
        ctrl_kw["chunk_steps"] = chunk
    ctrl_kw["limiter"] = rd.choice("control", "limiter", tuple(LIMITERS), "minmod")
    try:
        control = StepControl(**ctrl_kw)
    except ParameterError as exc:
        raise rd.err("control", exc.field, str(exc)) from None

    gammas = rd.floats("diagnostics", "gamma")
    s0s = rd.floats("diagnostics", "s0")
    if gammas is not None:
        for g in gammas:
            if not 0.0 < g < 2.0 - 2.0 / params.n:
                raise rd.err("diagnostics", "gamma", f"gamma {g} outside (0, {2 - 2 / params.n})")
    if s0s is not None:
        for s0 in s0s:
            if not 0.0 < s0 < params.R ** params.n:
                raise rd.err("diagnostics", "s0", f"s0 {s0} outside (0, R^n)")

    out = rd.raw("output", "directory") if rd.has("output", "directory") else "runs/default"
    if base_dir is not None and not Path(out).is_absolute():
        out = str(base_dir / out)

    return RunConfig(
        params=params, r1=r1, smoothness=smoothness, delta=delta, grid=grid,
        solver=rd.choice("solver", "which", SOLVERS, "u"), control=control,
        diagnostics=DiagnosticsPlan(gammas, s0s),
        certificate=rd.boolean("certificate", "enabled", False),
        cert_gamma=rd.number("certificate", "gamma", None),
        output=out, source=text)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)


def check_config(cfg: RunConfig) -> None:
    """Cross-field checks that need more than one section."""
    if cfg.r1 != "certificate" and cfg.r1 > cfg.params.R:
        raise ConfigError(f"r1={cfg.r1} exceeds R={cfg.params.R}", field="datum.r1")
    if cfg.r1 == "certificate" and not cfg.params.regime.certifiable:
        raise ConfigError("r1 = certificate needs certifiable parameters", field="datum.r1")


