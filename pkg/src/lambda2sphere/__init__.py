"""Numerical companion for the sharp upper bound on lambda_2 Vol^{2/m}
over conformal metrics on the round sphere S^m."""

__version__ = "0.1.0"

from .geometry import Cap, GeometryError, cap_reflect, fold, mobius  # noqa: E402
from .discretize import ConformalMetric, Mesh, assemble, build_mesh  # noqa: E402
from .measures import DiscreteMeasure, center_of_mass, folded_center  # noqa: E402
from .eigensolve import solve_bottom, spectrum  # noqa: E402
from .verify import VectorField, bound_chain, find_zero, sharp_bound  # noqa: E402
from .optimize import maximize, two_bubble  # noqa: E402

__all__ = [
    "Cap", "GeometryError", "cap_reflect", "fold", "mobius",
    "ConformalMetric", "Mesh", "assemble", "build_mesh",
    "DiscreteMeasure", "center_of_mass", "folded_center",
    "solve_bottom", "spectrum",
    "VectorField", "bound_chain", "find_zero", "sharp_bound",
    "maximize", "two_bubble",
]
