"""Optimization on the Poincare ball with numerically stable geodesic updates."""

from ._backend import BACKEND
from .geometry import (
    DiskModel, DomainError, EuclGradient, ModelMismatchError, Point, Tangent,
    conformal_factor, distance, egrad_to_rgrad, exp_map, project_into_ball, riemannian_norm,
)
from .optimizers import RunConfig, Trace, euclidean_step, geodesic_step, natural_step, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DiskModel", "DomainError", "EuclGradient", "ModelMismatchError", "Point",
    "Tangent", "conformal_factor", "distance", "egrad_to_rgrad", "exp_map",
    "project_into_ball", "riemannian_norm", "RunConfig", "Trace", "euclidean_step",
    "geodesic_step", "natural_step", "run", "__version__",
]
