"""Experiment configuration: an INI file with ``[grid]``, ``[cost]``,
``[density]``, ``[task]`` and ``[output]`` sections.

Example::

    [grid]
    dim = 1
    spacing = 0.05
    half_width = 2.5

    [cost]
    kind = power
    p = 1

    [density]
    shape = ball
    radius = 1

    [task]
    name = solve

    [output]
    dir = out/ball1d

Relative paths are resolved against the directory of the config file. The
only environment override is ``EXTERIOR_OT_OUT`` for the output directory.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import Annulus, Ball, CostSpec, Cube, DensityField, GridSpec, ShapeUnion, rasterize

TASKS = ("solve", "dual", "rearr", "optimize", "curve", "verify", "oracle")
OUT_ENV = "EXTERIOR_OT_OUT"

_SECTIONS = {
    "grid": {"dim", "spacing", "shape", "half_width"},
    "cost": {"kind", "p", "cap", "radii", "values", "directions", "weights"},
    "density": {"shape", "center", "radius", "r_in", "r_out", "corner", "side", "level", "balls", "file"},
    "task": {"name", "seed", "radius", "mass", "masses", "init", "max_iter", "tol", "trials", "level",
             "erosion", "threads", "tie_break"},
    "output": {"dir"},
}


class ConfigError(ValueError):
    """Malformed configuration; ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path, self.line, self.message = path, line, message
        where = f"{path}:{line}: " if line else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass
class ExperimentConfig:
    task: str
    grid: GridSpec | None
    cost: CostSpec
    density: DensityField | None
    params: dict = field(default_factory=dict)
    out_dir: Path = Path("out")
    seed: int = 0
    threads: int = 1
    source: str | None = None

    def describe(self) -> dict:
        """Plain description of the inputs, for the summary file."""
        return {
            "task": self.task,
            "seed": self.seed,
            "grid": None if self.grid is None else {
                "shape": list(self.grid.shape), "spacing": self.grid.spacing, "origin": list(self.grid.origin)},
            "cost": {"kind": self.cost.kind, "p": self.cost.p, "cap": self.cost.cap},
            "params": {k: v for k, v in sorted(self.params.items())},
        }


class _Lines:
    """Maps ``(section, key)`` to the line where it was written."""

    def __init__(self, text: str):
        self.where: dict[tuple[str, str], int] = {}
        section = None
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            m = re.match(r"\[([^\]]+)\]", line)
            if m:
                section = m.group(1).strip().lower()
                self.where.setdefault((section, ""), n)
                continue
            m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", line)
            if m and section is not None:
                self.where.setdefault((section, m.group(1).strip().lower()), n)

    def __call__(self, section: str, key: str = "") -> int | None:
        return self.where.get((section, key))


def _floats(text: str) -> list[float]:
    return [float(x) for x in re.split(r"[,\s]+", text.strip()) if x]


def load_config(path: str | os.PathLike, overrides: dict | None = None) -> ExperimentConfig:
    """Parse a config file; ``overrides`` may set ``task``, ``out``, ``seed`` and ``threads``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path), base=path.resolve().parent, overrides=overrides)


def parse_config(text: str, source: str = "<string>", base: Path | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    overrides = overrides or {}
    base = base or Path.cwd()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("expected a [section] header before the first key", source, exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", source, exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", source, exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"cannot parse line {line.strip()!r}", source, lineno) from None
    lines = _Lines(text)

    def fail(msg, section, key=""):
        raise ConfigError(msg, source, lines(section, key) or lines(section))

    for section in parser.sections():
        if section not in _SECTIONS:
            fail(f"unknown section [{section}]", section)
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                fail(f"unknown key {key!r} in [{section}]", section, key)

    def get(section, key, conv=str, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            fail(f"bad value {raw!r} for {key}: {exc}", section, key)

    task = overrides.get("task") or get("task", "name")
    if task not in TASKS:
        fail(f"task must be one of {', '.join(TASKS)}, got {task!r}", "task", "name")

    grid = None
    if parser.has_section("grid"):
        dim = get("grid", "dim", int)
        spacing = get("grid", "spacing", float)
        if spacing is None:
            fail("[grid] needs spacing", "grid")
        shape = get("grid", "shape", lambda s: tuple(int(x) for x in _floats(s)))
        half = get("grid", "half_width", float)
        try:
            if shape is not None:
                if dim is not None and dim != len(shape):
                    fail("dim does not match shape", "grid", "dim")
                grid = GridSpec.centered(shape, spacing)
            elif half is not None:
                if dim is None:
                    fail("[grid] with half_width needs dim", "grid")
                grid = GridSpec.covering(half, spacing, dim)
            elif task not in ("optimize", "curve"):
                fail("[grid] needs shape or half_width", "grid")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            fail(str(exc), "grid")
    params = {}
    if parser.has_section("grid"):
        params["spacing"] = get("grid", "spacing", float)
        params["dim"] = get("grid", "dim", int, grid.dim if grid else None)

    cost = _cost(parser, get, fail)
    density = _density(parser, get, fail, grid, base) if parser.has_section("density") else None

    conv = {"mass": float, "masses": _floats, "max_iter": int, "tol": float, "trials": int, "erosion": float}
    for key in ("radius", "mass", "masses", "init", "max_iter", "tol", "trials", "level", "erosion", "tie_break"):
        value = get("task", key, conv.get(key, str))
        if value is not None:
            params[key] = value
    if "radius" in params and params["radius"] not in ("auto", "proof", "full"):
        params["radius"] = get("task", "radius", float)

    seed = overrides.get("seed")
    seed = get("task", "seed", int, 0) if seed is None else int(seed)
    threads = overrides.get("threads")
    threads = get("task", "threads", int, 1) if threads is None else int(threads)
    if threads < 1:
        fail("threads must be at least 1", "task", "threads")

    out = overrides.get("out") or os.environ.get(OUT_ENV)
    if out:
        out_dir = Path(out).resolve()
    else:
        out_dir = (base / get("output", "dir", str, "out")).resolve()

    if task in ("solve", "dual", "rearr", "oracle") and density is None:
        fail(f"task {task} needs a [density] section", "task", "name")
    if task == "optimize" and "mass" not in params:
        fail("task optimize needs mass", "task")
    if task == "curve" and "masses" not in params:
        fail("task curve needs masses", "task")
    if task in ("optimize", "curve") and grid is None and params.get("spacing") is None:
        fail(f"task {task} needs [grid] spacing and dim", "task")
    return ExperimentConfig(task, grid, cost, density, params, out_dir, seed, threads, source)


def _cost(parser, get, fail):
    if not parser.has_section("cost"):
        return CostSpec.power(1.0)
    kind = get("cost", "kind", str, "power")
    cap = get("cost", "cap", float)
    try:
        if kind == "power":
            return CostSpec.power(get("cost", "p", float, 1.0), cap)
        if kind == "table":
            return CostSpec.table(get("cost", "radii", _floats, []), get("cost", "values", _floats, []), cap)
        if kind == "anisotropic":
            dirs = get("cost", "directions", lambda s: [_floats(part) for part in s.split(";")], [])
            return CostSpec.anisotropic(get("cost", "p", float, 1.0), dirs, get("cost", "weights", _floats, []), cap)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        fail(str(exc), "cost")
    fail(f"unknown cost kind {kind!r}", "cost", "kind")


def _density(parser, get, fail, grid, base):
    kind = get("density", "shape", str, "ball")
    if kind == "file":
        name = get("density", "file", str)
        if name is None:
            fail("density shape 'file' needs file", "density")
        try:
            return read_density_csv(base / name, grid)
        except (OSError, ValueError) as exc:
            fail(f"cannot load density file: {exc}", "density", "file")
    if grid is None:
        fail("[density] needs a [grid] with shape or half_width", "density")
    d = grid.dim

    def point(key, default=0.0):
        v = get("density", key, _floats)
        if v is None:
            return (default,) * d
        if len(v) == 1:
            v = v * d
        if len(v) != d:
            fail(f"{key} needs {d} coordinates", "density", key)
        return tuple(v)

    level = get("density", "level", float, 1.0)
    if not 0 <= level <= 1:
        fail("level must lie in [0, 1]", "density", "level")
    try:
        if kind == "ball":
            shape = Ball(point("center"), get("density", "radius", float, 1.0))
        elif kind == "annulus":
            shape = Annulus(point("center"), get("density", "r_in", float), get("density", "r_out", float))
        elif kind == "cube":
            side = get("density", "side", float, 1.0)
            shape = Cube(point("corner", -side / 2), side)
        elif kind == "balls":
            spec = get("density", "balls", str)
            if not spec:
                fail("shape 'balls' needs balls = x, .., r; x, .., r", "density")
            parts = []
            for chunk in spec.split(";"):
                nums = _floats(chunk)
                if len(nums) != d + 1:
                    fail(f"each ball needs {d} coordinates and a radius", "density", "balls")
                parts.append(Ball(tuple(nums[:d]), nums[d]))
            shape = ShapeUnion(tuple(parts))
        elif kind == "zero":
            return DensityField.zeros(grid)
        else:
            fail(f"unknown density shape {kind!r}", "density", "shape")
        f = rasterize(shape, grid)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        fail(str(exc), "density")
    return f.with_values(f.values * level)


def read_density_csv(path: Path, grid: GridSpec | None = None) -> DensityField:
    """Read a density written by :func:`exterior_ot.artifacts.write_density_csv`.

    The grid is rebuilt from the index and coordinate columns when ``grid``
    is not given.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = sum(1 for h in header if h.startswith("i"))
    if header[-1] != "value" or d == 0:
        raise ValueError("expected columns i0.., x0.., value")
    idx = np.array([[int(r[a]) for a in range(d)] for r in body], dtype=np.int64)
    xs = np.array([[float(r[d + a]) for a in range(d)] for r in body])
    vals = np.array([float(r[-1]) for r in body])
    if grid is None:
        shape = tuple(int(n) for n in idx.max(axis=0) + 1)
        spacing = float(np.max(np.abs(np.diff(np.unique(xs[:, 0]))))) if shape[0] > 1 else 1.0
        origin = tuple(float(x) for x in xs[np.argmin(idx.sum(axis=1))])
        if not math.isfinite(spacing) or spacing <= 0:
            raise ValueError("cannot infer grid spacing")
        grid = GridSpec(shape, spacing, origin)
    out = np.zeros(grid.shape)
    out[tuple(idx.T)] = vals
    return DensityField(grid, out)
