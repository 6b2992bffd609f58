"""Minimal-energy configurations of unit vectors under the p-frame potential
``sum_{i<j} |<v_i, v_j>|^p`` in R^n and C^n."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    Configuration,
    FieldTag,
    GramSummary,
    S2Point,
    cp1_to_s2,
    gram,
    inner_product,
    normalize,
    potential,
    potential_delta,
    s2_to_cp1,
)
from .solver import SolverParams, SolveReport, StabilityReport, minimize, multi_start  # noqa: E402

__all__ = [
    "Configuration",
    "FieldTag",
    "GramSummary",
    "S2Point",
    "SolverParams",
    "SolveReport",
    "StabilityReport",
    "cp1_to_s2",
    "gram",
    "inner_product",
    "minimize",
    "multi_start",
    "normalize",
    "potential",
    "potential_delta",
    "s2_to_cp1",
]
