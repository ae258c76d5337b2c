#
# See the LICENSE file
#

#
# Run configuration: one flat TOML table plus command-line overrides. Keys
# use the flag names with '-' replaced by '_'.
#

import math
import re
import sys
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ParameterError, SchemaError
from .solver import LINEAR_SOLVERS, SolverConfig
from .surface import FAMILIES

COMMANDS = ("exact", "scherk", "scherkenoid", "helicoid", "pitchfork", "diagnose", "mesh")
SURFACES = ("grim-reaper", "tilted-reaper")
CHECKS = ("residual-refinement", "morse", "gauss-image", "curvature", "asymptote")
MESH_FORMATS = ("obj", "ply")
RIGHT_EDGES = ("reaper", "zero")

DEFAULT_GRID = {
    "scherk": (129, 65),
    "scherkenoid": (161, 41),
    "helicoid": (121, 21),
    "pitchfork": (161, 41),
}

@dataclass
class RunConfig:
    command: str
    alpha: Optional[float] = None
    w: Optional[float] = None
    L: Optional[float] = None
    h: float = 8.0
    h_list: List[float] = field(default_factory=lambda: [4.0, 6.0, 8.0])
    w_list: Optional[List[float]] = None
    grid: Optional[Tuple[int, int]] = None
    trunc: Optional[float] = None
    H: float = 8.0
    tol: float = 1e-10
    max_iter: int = 50
    linear_solver: str = "direct"
    out: Optional[str] = None
    format: Optional[str] = None
    jobs: int = 1
    surface: str = "grim-reaper"
    sign: int = -1
    n: int = 64
    check: List[str] = field(default_factory=lambda: ["residual-refinement"])
    level: float = math.inf
    family: Optional[str] = None
    copies: Tuple[int, int] = (1, 1)
    x_hat: Optional[float] = None
    right_edge: str = "reaper"
    input: Optional[str] = None

    def solver_config(self):
        return SolverConfig(tol=self.tol, max_iter=self.max_iter, linear_solver=self.linear_solver)

    @property
    def grid_dims(self):
        return self.grid if self.grid is not None else DEFAULT_GRID.get(self.command, (65, 33))

#
# Parsers shared by argparse and the TOML loader
#
_PI_TERM = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*?\s*)?pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")

def parse_number(text):
    if isinstance(text, bool):
        raise ParameterError("expected a number, got %r" % (text,))
    if isinstance(text, (int, float)):
        return float(text)
    m = _PI_TERM.match(str(text))
    try:
        if m:
            factor = float(m.group(1)) if m.group(1) else 1.0
            divisor = float(m.group(2)) if m.group(2) else 1.0
            return factor * math.pi / divisor
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise ParameterError("cannot read <" + str(text) + "> as a number")

parse_angle = parse_number

def parse_list(text):
    if isinstance(text, (list, tuple)):
        return [parse_number(x) for x in text]
    items = [x for x in re.split(r"[,\s]+", str(text).strip()) if x]
    if not items:
        raise ParameterError("empty list")
    return [parse_number(x) for x in items]

def parse_grid(text):
    if isinstance(text, (list, tuple)):
        dims = tuple(int(x) for x in text)
    else:
        m = re.match(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$", str(text))
        if not m:
            raise ParameterError("grid must look like NxM, got <" + str(text) + ">")
        dims = (int(m.group(1)), int(m.group(2)))
    if len(dims) != 2 or min(dims) < 3:
        raise ParameterError("grid needs at least 3 nodes in each direction, got %r" % (dims,))
    return dims

def parse_copies(text):
    if isinstance(text, (list, tuple)):
        copies = tuple(int(x) for x in text)
    else:
        m = re.match(r"^\s*(\d+)\s*[xX,]\s*(\d+)\s*$", str(text))
        if not m:
            raise ParameterError("copies must look like N1xN2, got <" + str(text) + ">")
        copies = (int(m.group(1)), int(m.group(2)))
    if min(copies) < 1:
        raise ParameterError("copy counts must be at least 1")
    return copies

_CONVERTERS = {
    "alpha": parse_angle, "w": parse_number, "L": parse_number, "h": parse_number,
    "h_list": parse_list, "w_list": parse_list, "grid": parse_grid, "trunc": parse_number,
    "H": parse_number, "tol": parse_number, "max_iter": int, "jobs": int, "sign": int, "n": int,
    "level": parse_number, "copies": parse_copies, "x_hat": parse_number,
    "check": lambda v: [str(x) for x in v] if isinstance(v, (list, tuple)) else [str(v)],
}

def _convert(key, value):
    converter = _CONVERTERS.get(key)
    if converter is None:
        return value
    try:
        return converter(value)
    except ParameterError:
        raise
    except (TypeError, ValueError):
        raise ParameterError("bad value for %s: %r" % (key, value))

def load_toml(path):
    try:
        with open(path, "rb") as f:
            table = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise SchemaError("%s: %s" % (path, e))
    known = {f.name for f in fields(RunConfig)} - {"command"}
    values = {}
    for key, value in table.items():
        key = key.replace("-", "_")
        if isinstance(value, dict):
            raise SchemaError("%s: config must be a single flat table, found [%s]" % (path, key))
        if key not in known:
            raise SchemaError("%s: unknown key <%s>" % (path, key))
        values[key] = _convert(key, value)
    return values

#
# Defaults < config file < explicit flags
#
def build_run_config(command, overrides, config_path=None):
    values = load_toml(config_path) if config_path else {}
    values.update({k: _convert(k, v) for k, v in overrides.items() if v is not None})
    cfg = replace(RunConfig(command), **values)
    validate(cfg)
    return cfg

def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            raise ParameterError("%s needs --%s" % (cfg.command, name.replace("_", "-")))

def _check_alpha(alpha):
    if not 0.0 < alpha < math.pi:
        raise ParameterError("alpha must lie in (0, pi), got %r" % (alpha,))

def _check_width(w, lo=0.0, hi=math.inf):
    if not (lo <= w < hi and w > 0.0):
        raise ParameterError("w must lie in [%g, %g), got %r" % (lo, hi, w))

def validate(cfg):
    if cfg.command not in COMMANDS:
        raise ParameterError("unknown command <" + str(cfg.command) + ">")
    if not cfg.tol > 0:
        raise ParameterError("--tol must be positive, got %r" % (cfg.tol,))
    if cfg.max_iter < 1:
        raise ParameterError("--max-iter must be at least 1")
    if cfg.linear_solver not in LINEAR_SOLVERS:
        raise ParameterError("--linear-solver must be one of " + ", ".join(LINEAR_SOLVERS))
    if cfg.jobs < 1:
        raise ParameterError("--jobs must be at least 1")
    if cfg.format is not None and cfg.format not in MESH_FORMATS:
        raise ParameterError("--format must be one of " + ", ".join(MESH_FORMATS))
    if cfg.grid is not None:
        parse_grid(cfg.grid)
    _VALIDATORS[cfg.command](cfg)
    return cfg

def _validate_exact(cfg):
    if cfg.surface not in SURFACES:
        raise ParameterError("--surface must be one of " + ", ".join(SURFACES))
    if cfg.n < 3:
        raise ParameterError("--n must be at least 3")
    if cfg.surface == "tilted-reaper":
        _require(cfg, "w")
        if not cfg.w >= math.pi - 1e-12:
            raise ParameterError("tilted-reaper needs w >= pi, got w=%r" % (cfg.w,))
        if cfg.sign not in (1, -1):
            raise ParameterError("--sign must be +1 or -1")
    if cfg.w is not None and not cfg.w > 0:
        raise ParameterError("w must be positive, got %r" % (cfg.w,))
    if cfg.L is not None and not cfg.L > 0:
        raise ParameterError("L must be positive, got %r" % (cfg.L,))

def _validate_scherk(cfg):
    _require(cfg, "alpha")
    _check_alpha(cfg.alpha)
    if cfg.w_list is None:
        _require(cfg, "w")
    for w in cfg.w_list or [cfg.w]:
        _check_width(w)
    h = cfg.h_list
    if len(h) < 3 or any(not x > 0 for x in h) or any(b <= a for a, b in zip(h, h[1:])):
        raise ParameterError("--h-list needs at least 3 positive, strictly increasing values, got %r" % (h,))

def _validate_scherkenoid(cfg):
    _require(cfg, "alpha", "w", "trunc")
    _check_alpha(cfg.alpha)
    _check_width(cfg.w, math.pi - 1e-12)
    if not cfg.trunc > abs(cfg.w / math.tan(cfg.alpha)) + cfg.w:
        raise ParameterError("--trunc must exceed |w cot alpha| + w = %g" % (abs(cfg.w / math.tan(cfg.alpha)) + cfg.w))
    if not cfg.h > 0:
        raise ParameterError("--h must be positive")
    if cfg.right_edge not in RIGHT_EDGES:
        raise ParameterError("--right-edge must be one of " + ", ".join(RIGHT_EDGES))

def _validate_helicoid(cfg):
    _require(cfg, "w", "trunc")
    _check_width(cfg.w, 0.0, math.pi)
    if not cfg.trunc > cfg.w:
        raise ParameterError("--trunc must exceed w for helicoid-like pieces")
    if not cfg.H > 0:
        raise ParameterError("--H must be positive")

def _validate_pitchfork(cfg):
    _require(cfg, "w", "trunc")
    _check_width(cfg.w, math.pi - 1e-12)
    if not cfg.trunc > 2.0 * cfg.w:
        raise ParameterError("--trunc must exceed 2w for pitchforks")
    if not cfg.H > 0:
        raise ParameterError("--H must be positive")

def _validate_diagnose(cfg):
    _require(cfg, "input")
    for check in cfg.check:
        if check not in CHECKS:
            raise ParameterError("unknown check <%s>; known: %s" % (check, ", ".join(CHECKS)))
    if "gauss-image" in cfg.check or "asymptote" in cfg.check:
        _require(cfg, "w")

def _validate_mesh(cfg):
    _require(cfg, "input")
    if cfg.family is not None:
        if cfg.family not in FAMILIES:
            raise ParameterError("--family must be one of " + ", ".join(FAMILIES))

_VALIDATORS = {
    "exact": _validate_exact,
    "scherk": _validate_scherk,
    "scherkenoid": _validate_scherkenoid,
    "helicoid": _validate_helicoid,
    "pitchfork": _validate_pitchfork,
    "diagnose": _validate_diagnose,
    "mesh": _validate_mesh,
}
