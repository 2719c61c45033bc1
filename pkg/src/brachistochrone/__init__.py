"""Least-time curves on orthogonally parameterized surfaces.

A particle released at rest in a conservative field, or a light ray in a
graded medium, follows a curve fixed by one conserved constant when the
surface metric and the field share a coordinate symmetry.  This package
integrates those curves, shoots them through target points and checks them
against independent oracles.
"""

from .analysis import (compare_intersecting, curve_gap, frenet_profile, planarity_check,
                       sector_angle, sector_limit_convergence)
from .errors import BrachistochroneError
from .geometry import (RevolutionProfile, SurfacePatch, make_cone, make_cylinder,
                       make_hyperboloid, make_polar_plane, make_surface_of_revolution,
                       make_vertical_plane)
from .media import (Medium, Potential, Symmetry, central_power_potential, classical_index,
                    custom_medium, height_potential, relativistic_constant, relativistic_index,
                    uniform_potential)
from .solver import (Branch, CurveSolution, SolverConfig, StopRule, central_turning_radius,
                     continue_past_turning, find_turning_point, first_integral, shoot, solve,
                     solve_particle, solve_ray)
from .verification import DiscreteCurve, grid_oracle, minimality_probe, travel_time

__all__ = [
    "Branch", "BrachistochroneError", "CurveSolution", "DiscreteCurve", "Medium", "Potential",
    "RevolutionProfile", "SolverConfig", "StopRule", "SurfacePatch", "Symmetry",
    "central_power_potential", "central_turning_radius", "classical_index",
    "compare_intersecting", "continue_past_turning", "curve_gap", "custom_medium",
    "find_turning_point", "first_integral", "frenet_profile", "grid_oracle", "height_potential",
    "make_cone", "make_cylinder", "make_hyperboloid", "make_polar_plane",
    "make_surface_of_revolution", "make_vertical_plane", "minimality_probe", "planarity_check",
    "relativistic_constant", "relativistic_index", "sector_angle", "sector_limit_convergence",
    "shoot", "solve", "solve_particle", "solve_ray", "travel_time", "uniform_potential",
]
