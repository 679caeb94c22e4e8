"""
lotmorph: transport-based morphometry of 3D densities.

Volumes are embedded through their optimal transport maps from a common
reference, analyzed with linear statistics, and directions found in the
embedding are rendered back as volumes.
"""
__version__ = "0.1.0"

from . import errors, grid  # noqa: E402
from .solver import (SolverConfig, MongeSolution, solve_monge, invert_field,  # noqa: E402
                     pushforward, pullback, geodesic_map, geodesic_density,
                     intrinsic_mean)

__all__ = ["errors", "grid", "SolverConfig", "MongeSolution", "solve_monge",
           "invert_field", "pushforward", "pullback", "geodesic_map",
           "geodesic_density", "intrinsic_mean", "__version__"]
