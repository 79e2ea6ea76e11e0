"""Grids, density fields, translation-invariant costs and simple shapes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.special import gamma as _gamma

__all__ = [
    "GridSpec",
    "DensityField",
    "CostSpec",
    "HypothesisReport",
    "Ball",
    "Annulus",
    "Cube",
    "ShapeUnion",
    "ShapeSpec",
    "rasterize",
    "mass",
    "l1_distance",
    "eval_cost",
    "validate_hypotheses",
    "support_radius",
    "unit_ball_volume",
    "sphere_directions",
]


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in R^d."""
    return math.pi ** (d / 2) / _gamma(d / 2 + 1)


# --------------------------------------------------------------------------- grid


@dataclass(frozen=True)
class GridSpec:
    """Regular grid of cell centers ``origin + spacing * index``.

    Parameters
    ----------
    shape : tuple of int
        Cell count per axis.
    spacing : float
        Cell side length h.
    origin : tuple of float, optional
        Center of cell ``(0, ..., 0)``. Defaults to the origin of R^d.
    """

    shape: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...] = ()

    def __post_init__(self):
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        if not shape or min(shape) < 1:
            raise ValueError(f"grid needs at least one cell per axis, got {shape}")
        h = float(self.spacing)
        if not (h > 0 and math.isfinite(h)):
            raise ValueError(f"spacing must be positive and finite, got {self.spacing}")
        origin = tuple(float(o) for o in np.atleast_1d(self.origin)) if len(self.origin) else (0.0,) * len(shape)
        if len(origin) != len(shape):
            raise ValueError("origin and shape have different dimensions")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", h)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def centered(cls, shape, spacing: float) -> "GridSpec":
        """Grid whose cell centers are symmetric about 0."""
        shape = tuple(int(n) for n in np.atleast_1d(shape))
        origin = tuple(-(n - 1) * spacing / 2 for n in shape)
        return cls(shape, spacing, origin)

    @classmethod
    def covering(cls, half_width: float, spacing: float, dim: int) -> "GridSpec":
        """Smallest centered grid whose cells cover ``[-half_width, half_width]^dim``."""
        n = int(math.ceil(2 * half_width / spacing - 1e-9))
        return cls.centered((n,) * dim, spacing)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def total_volume(self) -> float:
        return self.size * self.cell_volume

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.shape[axis])

    def centers(self) -> np.ndarray:
        """Cell centers as an ``(size, dim)`` array in C order."""
        axes = [self.axis_coords(a) for a in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def multi_indices(self) -> np.ndarray:
        return np.stack(np.unravel_index(np.arange(self.size), self.shape), axis=1)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper cell-edge coordinates per axis."""
        lo = np.asarray(self.origin) - self.spacing / 2
        hi = lo + self.spacing * np.asarray(self.shape)
        return lo, hi

    def norms(self, center=None) -> np.ndarray:
        """Distance of each cell center to ``center`` (default 0), shaped like the grid."""
        c = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float)
        return np.linalg.norm(self.centers() - c, axis=1).reshape(self.shape)


# ------------------------------------------------------------------------ density


@dataclass(frozen=True, eq=False)
class DensityField:
    """Per-cell values in [0, 1] on a grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("density values must be finite")
        if v.size and (v.min() < 0 or v.max() > 1):
            raise ValueError(f"density values must lie in [0, 1], got range [{v.min()}, {v.max()}]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "DensityField":
        return cls(grid, np.zeros(grid.shape))

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @property
    def mass(self) -> float:
        return mass(self)

    def with_values(self, values) -> "DensityField":
        return DensityField(self.grid, values)

    def quantized(self, bits: int = 20) -> "DensityField":
        """Round values to multiples of ``2**-bits`` (the solver's mass quantum)."""
        scale = float(2 ** bits)
        return DensityField(self.grid, np.round(self.values * scale) / scale)


def mass(f: DensityField) -> float:
    """Total mass ``sum(values) * h^d``, summed exactly."""
    return math.fsum(f.flat) * f.grid.cell_volume


def l1_distance(f1: DensityField, f2: DensityField) -> float:
    """L1 distance ``sum |v1 - v2| * h^d`` between fields on the same grid."""
    if f1.grid != f2.grid:
        raise ValueError("l1_distance needs fields on the same grid")
    return math.fsum(np.abs(f1.flat - f2.flat)) * f1.grid.cell_volume


# --------------------------------------------------------------------------- cost


def sphere_directions(d: int, count: int = 720) -> np.ndarray:
    """Deterministic sample of unit vectors in R^d."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        t = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((count, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return np.vstack([np.eye(d), -np.eye(d), v])


@dataclass(frozen=True, eq=False)
class CostSpec:
    """Translation-invariant cost ``c(x, y) = k(y - x)``.

    Three kinds are supported:

    ``power``
        ``k(z) = |z|^p``.
    ``table``
        Radial piecewise-linear profile through ``(radii, values)``, starting at
        radius 0 and extended linearly with the last slope.
    ``anisotropic``
        ``k(z) = |z|^p w(z/|z|)`` with the direction weight ``w`` sampled at unit
        vectors ``directions``. In 2-D the weight is interpolated linearly in the
        angle, otherwise the nearest sampled direction is used.

    ``cap`` is the coercivity cap: displacements longer than ``cap`` cost +inf.
    """

    kind: str = "power"
    p: float = 1.0
    radii: tuple = ()
    values: tuple = ()
    directions: tuple = ()
    weights: tuple = ()
    cap: float | None = None

    def __post_init__(self):
        if self.kind not in ("power", "table", "anisotropic"):
            raise ValueError(f"unknown cost kind {self.kind!r}")
        if self.kind in ("power", "anisotropic") and not self.p > 0:
            raise ValueError("power exponent must be positive")
        if self.kind == "table":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise ValueError("table cost needs matching radii/values with at least two knots")
            if r[0] != 0 or np.any(np.diff(r) <= 0):
                raise ValueError("table radii must start at 0 and increase strictly")
            object.__setattr__(self, "radii", tuple(r))
            object.__setattr__(self, "values", tuple(v))
        if self.kind == "anisotropic":
            dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
            w = np.asarray(self.weights, dtype=float).ravel()
            if dirs.shape[0] != w.size or w.size == 0:
                raise ValueError("anisotropic cost needs one weight per direction")
            dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
            object.__setattr__(self, "directions", tuple(map(tuple, dirs)))
            object.__setattr__(self, "weights", tuple(w))
        if self.cap is not None and not self.cap > 0:
            raise ValueError("cap must be positive")

    # constructors
    @classmethod
    def power(cls, p: float = 1.0, cap: float | None = None) -> "CostSpec":
        return cls("power", p=p, cap=cap)

    @classmethod
    def table(cls, radii, values, cap: float | None = None) -> "CostSpec":
        return cls("table", radii=tuple(radii), values=tuple(values), cap=cap)

    @classmethod
    def anisotropic(cls, p, directions, weights, cap: float | None = None) -> "CostSpec":
        return cls("anisotropic", p=p, directions=tuple(map(tuple, np.atleast_2d(directions))),
                   weights=tuple(np.ravel(weights)), cap=cap)

    @property
    def radial(self) -> bool:
        return self.kind != "anisotropic"

    @property
    def homogeneous_degree(self) -> float | None:
        return None if self.kind == "table" else self.p

    def profile(self, r) -> np.ndarray:
        """Radial profile ``k(r e)`` for radial kinds."""
        if not self.radial:
            raise ValueError("profile is only defined for radial costs")
        r = np.abs(np.asarray(r, dtype=float))
        if self.kind == "power":
            return r ** self.p
        radii = np.asarray(self.radii)
        vals = np.asarray(self.values)
        out = np.interp(r, radii, vals)
        slope = (vals[-1] - vals[-2]) / (radii[-1] - radii[-2])
        beyond = r > radii[-1]
        return np.where(beyond, vals[-1] + slope * (r - radii[-1]), out)

    def direction_weight(self, unit: np.ndarray) -> np.ndarray:
        unit = np.atleast_2d(unit)
        dirs = np.asarray(self.directions)
        w = np.asarray(self.weights)
        if unit.shape[1] == 2 and dirs.shape[1] == 2 and len(w) > 1:
            ang = np.arctan2(dirs[:, 1], dirs[:, 0])
            order = np.argsort(ang)
            ang, w = ang[order], w[order]
            ang_ext = np.concatenate([ang[-1:] - 2 * np.pi, ang, ang[:1] + 2 * np.pi])
            w_ext = np.concatenate([w[-1:], w, w[:1]])
            q = np.arctan2(unit[:, 1], unit[:, 0])
            return np.interp(q, ang_ext, w_ext)
        return w[np.argmax(unit @ dirs.T, axis=1)]

    def evaluate(self, z) -> np.ndarray:
        """Cost of displacements ``z`` with shape ``(..., d)``; ignores the cap."""
        z = np.asarray(z, dtype=float)
        if z.ndim == 0:
            z = z.reshape(1)
        r = np.linalg.norm(z, axis=-1)
        if self.radial:
            return self.profile(r)
        flat = z.reshape(-1, z.shape[-1])
        rf = r.reshape(-1)
        safe = np.where(rf > 0, rf, 1.0)
        w = self.direction_weight(flat / safe[:, None])
        return np.where(rf > 0, rf ** self.p * w, 0.0).reshape(r.shape)

    def evaluate_capped(self, z) -> np.ndarray:
        k = self.evaluate(z)
        if self.cap is None:
            return k
        r = np.linalg.norm(np.asarray(z, dtype=float), axis=-1)
        return np.where(r <= self.cap * (1 + 1e-12), k, np.inf)

    def max_within(self, radius: float, d: int) -> float:
        """Largest cost over the closed ball of the given radius (sampled)."""
        radii = np.linspace(0.0, radius, 257)
        if self.radial:
            return float(self.profile(radii).max())
        dirs = sphere_directions(d)
        return float(self.evaluate(radii[:, None, None] * dirs[None]).max())

    def min_on_sphere(self, radius: float, d: int) -> float:
        if self.radial:
            return float(self.profile(radius))
        return float(self.evaluate(radius * sphere_directions(d)).min())

    def lipschitz(self, radius: float, d: int = 2) -> float:
        """Sampled Lipschitz constant of k on the ball of the given radius."""
        if self.kind == "power":
            if self.p < 1:
                return math.inf
            return self.p * radius ** (self.p - 1) if self.p > 1 else 1.0
        if self.kind == "table":
            r = np.asarray(self.radii)
            v = np.asarray(self.values)
            slopes = np.abs(np.diff(v) / np.diff(r))
            inside = np.concatenate([[True], r[1:-1] < radius])
            return float(slopes[inside[: slopes.size]].max())
        pts = np.linspace(-radius, radius, 41)
        mesh = np.stack(np.meshgrid(*([pts] * d), indexing="ij"), axis=-1).reshape(-1, d)
        eps = radius * 1e-4
        best = 0.0
        for a in range(d):
            e = np.zeros(d)
            e[a] = eps
            best = max(best, float(np.max(np.abs(self.evaluate(mesh + e) - self.evaluate(mesh))) / eps))
        return best * math.sqrt(d)

    def is_convex(self) -> bool:
        if self.kind == "power":
            return self.p >= 1
        if self.kind == "table":
            slopes = np.diff(self.values) / np.diff(self.radii)
            return bool(np.all(np.diff(slopes) >= -1e-12))
        return False


def eval_cost(c: CostSpec, z) -> float | np.ndarray:
    """Evaluate ``k(z)``; scalar in, scalar out."""
    z = np.asarray(z, dtype=float)
    out = c.evaluate(z if z.ndim else z.reshape(1))
    return float(out) if np.ndim(out) == 0 else out


# ------------------------------------------------------------------- hypotheses


@dataclass
class HypothesisReport:
    k_zero: bool
    positive: bool
    radial_increasing: bool
    coercive: bool
    density_condition_sampled: bool
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "H1_k_zero": self.k_zero,
            "H1_positive": self.positive,
            "H1_coercive": self.coercive,
            "H2_sampled": self.density_condition_sampled,
            "H3_radial_increasing": self.radial_increasing,
            "violations": list(self.violations),
            "passed": self.passed,
        }


def validate_hypotheses(c: CostSpec, d: int = 2, r_max: float = 10.0, samples: int = 513) -> HypothesisReport:
    """Check k(0)=0, positivity, strict radial increase and coercivity on sampled rays.

    The density condition of H2 is not finitely checkable; strict radial increase
    is used as the sampled sufficient condition.
    """
    violations = []
    k0 = float(c.evaluate(np.zeros(d)))
    k_zero = k0 == 0.0
    if not k_zero:
        violations.append(f"H1: k(0) = {k0} != 0")
    dirs = sphere_directions(d, 90)
    r = np.linspace(0.0, r_max, samples)[1:]
    if c.kind == "table":
        r = np.union1d(r, np.asarray(c.radii)[1:])
    vals = c.evaluate(r[None, :, None] * dirs[:, None, :])
    positive = bool(np.all(vals > 0))
    if not positive:
        violations.append("H1: k vanishes or is negative away from 0")
    increasing = bool(np.all(np.diff(vals, axis=1) > 0)) and bool(np.all(vals[:, 0] > k0))
    if c.kind == "table":
        increasing = increasing and bool(np.all(np.diff(c.values) > 0))
    if not increasing:
        violations.append("H3: r -> k(r sigma) is not strictly increasing on some sampled ray")
    if c.kind == "table":
        coercive = c.values[-1] > c.values[-2]
    elif c.kind == "anisotropic":
        coercive = min(c.weights) > 0
    else:
        coercive = True
    if not coercive:
        violations.append("H1: k does not tend to infinity")
    if c.kind == "anisotropic" and min(c.weights) <= 0:
        violations.append("H1: direction weight must be positive")
    return HypothesisReport(k_zero, positive, increasing, coercive, increasing and k_zero, violations)


def support_radius(c: CostSpec, m: float, d: int, step: float | None = None) -> float:
    """Support radius from the existence construction.

    With ``rho = (3m)^(1/d)`` and ``M`` the largest cost over the cube
    ``[0, rho]^d``, returns the smallest sampled ``R > sqrt(d) rho`` such that
    ``k(z) > M`` for every ``|z| >= R``. If the cost cap is reached first the cap
    is returned with a warning.
    """
    if not m > 0:
        raise ValueError("m must be positive")
    rho = (3.0 * m) ** (1.0 / d)
    big_m = c.max_within(math.sqrt(d) * rho, d) if c.radial else _max_on_cube(c, rho, d)
    start = math.sqrt(d) * rho
    step = step if step is not None else 1e-3 * start
    r = start
    for _ in range(10 ** 6):
        r += step
        if c.cap is not None and r > c.cap:
            warnings.warn(f"support radius exceeds the cost cap; using cap {c.cap}", stacklevel=2)
            return float(c.cap)
        if c.min_on_sphere(r, d) > big_m:
            return float(r)
    raise RuntimeError("support radius search did not terminate; is the cost coercive?")


def _max_on_cube(c: CostSpec, rho: float, d: int) -> float:
    n = 33 if d <= 2 else 9
    pts = np.linspace(0.0, rho, n)
    mesh = np.stack(np.meshgrid(*([pts] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return float(c.evaluate(mesh).max())


# ------------------------------------------------------------------------- shapes


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pts - np.asarray(self.center, float), axis=1) < self.radius

    def box(self):
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius


@dataclass(frozen=True)
class Annulus:
    center: tuple
    r_in: float
    r_out: float

    def __post_init__(self):
        if not (0 < self.r_in < self.r_out):
            raise ValueError("annulus needs 0 < r_in < r_out")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(pts - np.asarray(self.center, float), axis=1)
        return (r >= self.r_in) & (r < self.r_out)

    def box(self):
        c = np.asarray(self.center, float)
        return c - self.r_out, c + self.r_out


@dataclass(frozen=True)
class Cube:
    corner: tuple
    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("cube side must be positive")

    def contains(self, pts: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.corner, float)
        return np.all((pts >= lo) & (pts < lo + self.side), axis=1)

    def box(self):
        lo = np.asarray(self.corner, float)
        return lo, lo + self.side


@dataclass(frozen=True)
class ShapeUnion:
    parts: tuple

    def contains(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(len(pts), dtype=bool)
        for s in self.parts:
            out |= s.contains(pts)
        return out

    def box(self):
        boxes = [s.box() for s in self.parts]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)


ShapeSpec = Union[Ball, Annulus, Cube, ShapeUnion]


def rasterize(shape: ShapeSpec, grid: GridSpec) -> DensityField:
    """Indicator of the cells whose centers lie inside ``shape``."""
    lo, hi = shape.box()
    glo, ghi = grid.bounds()
    if len(np.atleast_1d(lo)) != grid.dim:
        raise ValueError("shape and grid dimensions differ")
    tol = 1e-9 * grid.spacing
    if np.any(np.atleast_1d(lo) < glo - tol) or np.any(np.atleast_1d(hi) > ghi + tol):
        raise ValueError(
            f"shape with bounding box {np.atleast_1d(lo)}..{np.atleast_1d(hi)} exceeds grid extent {glo}..{ghi}"
        )
    inside = shape.contains(grid.centers())
    return DensityField(grid, inside.astype(float).reshape(grid.shape))


def as_points(x: Sequence[float] | float, d: int) -> tuple:
    return tuple(np.broadcast_to(np.asarray(x, dtype=float), (d,)).tolist())
