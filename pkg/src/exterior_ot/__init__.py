"""Discrete exterior optimal transport on regular grids.

A density ``0 <= f <= 1`` is transported into its own free space ``1 - f`` at
minimal cost ``Upsilon(f)``. The package solves this exactly, extracts dual
potentials, checks the rearrangement inequalities and searches for the
mass-constrained maximiser of ``Upsilon``.
"""

from .domain import (
    Annulus,
    Ball,
    CostSpec,
    Cube,
    DensityField,
    GridSpec,
    HypothesisReport,
    ShapeUnion,
    eval_cost,
    l1_distance,
    mass,
    rasterize,
    support_radius,
    unit_ball_volume,
    validate_hypotheses,
)
from .dual import (
    PotentialPair,
    c_transform,
    dual_from_plan,
    duality_gap,
    kantorovich_objective,
    maximal_potential,
    project_P,
    slackness_report,
)
from .optimize import (
    ball_density,
    bathtub,
    concentration_cube,
    energy_curve,
    maximize_shape,
    radial_ball_value,
    tightness_report,
)
from .primal import (
    InfeasibleError,
    SolverError,
    TransportPlan,
    classical_cost,
    plan_marginals,
    saturation_report,
    second_marginal_uniqueness_check,
    solve_exterior,
)
from .rearrange import (
    brunn_minkowski_check,
    ctransform_rearrangement_check,
    decreasing_rearrangement,
    erode,
    hardy_littlewood_check,
    increasing_rearrangement,
)

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "Ball",
    "CostSpec",
    "Cube",
    "DensityField",
    "GridSpec",
    "HypothesisReport",
    "InfeasibleError",
    "PotentialPair",
    "ShapeUnion",
    "SolverError",
    "TransportPlan",
    "ball_density",
    "bathtub",
    "brunn_minkowski_check",
    "c_transform",
    "classical_cost",
    "concentration_cube",
    "ctransform_rearrangement_check",
    "decreasing_rearrangement",
    "dual_from_plan",
    "duality_gap",
    "energy_curve",
    "erode",
    "eval_cost",
    "hardy_littlewood_check",
    "increasing_rearrangement",
    "kantorovich_objective",
    "l1_distance",
    "mass",
    "maximal_potential",
    "maximize_shape",
    "plan_marginals",
    "project_P",
    "radial_ball_value",
    "rasterize",
    "saturation_report",
    "second_marginal_uniqueness_check",
    "slackness_report",
    "solve_exterior",
    "support_radius",
    "tightness_report",
    "unit_ball_volume",
    "validate_hypotheses",
]
