"""Poincare ball model: points, tangent vectors and the exponential map.

The ball of radius ``r`` carries the metric ``lambda(p) <.,.>`` with conformal
factor ``lambda(p) = (2 r / (r**2 - |p|**2))**2``.  A ball of radius ``r`` is
isometric to the unit ball through ``x -> x / r``.

All public functions take typed values (:class:`Point`, :class:`Tangent`,
:class:`EuclGradient`) and check that their models agree.  The array-level
helpers ending in ``_coords`` skip those checks and are meant for inner loops.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

log = logging.getLogger(__name__)

DEFAULT_CLIP_EPS = 1e-10


class DomainError(ValueError):
    """Raised when a value lies outside the open ball or is malformed."""


class ModelMismatchError(ValueError):
    """Raised when values from different disk models are combined."""


sinhc = kernels.sinhc
boundary_gap = kernels.boundary_gap


@dataclass(frozen=True)
class DiskModel:
    """Open ball of radius ``radius`` in ``dim`` dimensions."""

    radius: float = 1.0
    dim: int = 2

    def __post_init__(self):
        r = float(self.radius)
        if not (math.isfinite(r) and r > 0):
            raise DomainError(f"radius must be positive and finite, got {self.radius}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "dim", int(self.dim))

    def contains(self, coords):
        """True when ``coords`` lies strictly inside the ball."""
        x = np.asarray(coords, dtype=np.float64)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        return boundary_gap(x, self.radius) > 0.0

    def point(self, coords):
        return Point(coords, self)

    def origin(self):
        return Point(np.zeros(self.dim), self)


def _as_vector(x, dim, what):
    arr = np.array(x, dtype=np.float64).reshape(-1) if np.ndim(x) else None
    if arr is None or arr.shape != (dim,):
        raise DomainError(f"{what} must have shape ({dim},), got {np.shape(x)}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} has non-finite entries")
    arr.setflags(write=False)
    return arr


class Point:
    """A point strictly inside a :class:`DiskModel`."""

    __slots__ = ("coords", "model")

    def __init__(self, coords, model):
        arr = _as_vector(coords, model.dim, "point")
        if not boundary_gap(arr, model.radius) > 0.0:
            raise DomainError(f"point {arr} is not inside the ball of radius {model.radius}")
        self.coords = arr
        self.model = model

    def __repr__(self):
        return f"Point({self.coords.tolist()}, r={self.model.radius})"

    def __eq__(self, other):
        return (isinstance(other, Point) and self.model == other.model
                and np.array_equal(self.coords, other.coords))

    __hash__ = None


class Tangent:
    """A tangent vector at ``base``, in ambient coordinates."""

    __slots__ = ("base", "components")

    def __init__(self, base, components):
        self.base = base
        self.components = _as_vector(components, base.model.dim, "tangent")

    def __repr__(self):
        return f"Tangent({self.components.tolist()} at {self.base.coords.tolist()})"


class EuclGradient:
    """Euclidean partial derivatives of a function at ``base``."""

    __slots__ = ("base", "partials")

    def __init__(self, base, partials):
        self.base = base
        self.partials = _as_vector(partials, base.model.dim, "gradient")

    def __repr__(self):
        return f"EuclGradient({self.partials.tolist()} at {self.base.coords.tolist()})"


@dataclass(frozen=True)
class ExpMapIntermediates:
    """Scalars produced while evaluating the stable exponential map."""

    c: float
    F: float
    T: float
    hSq: float
    zSq: float
    xi: float
    arrivalDistance: float


def _same_model(*values):
    models = {v.model if isinstance(v, Point) else v.base.model for v in values}
    if len(models) != 1:
        raise ModelMismatchError(f"values come from different models: {models}")


def conformal_factor(model, p):
    """Return ``lambda(p) = (2 r / (r**2 - |p|**2))**2``."""
    if p.model != model:
        raise ModelMismatchError("point does not belong to the given model")
    return (2.0 * model.radius / boundary_gap(p.coords, model.radius)) ** 2


def distance(p, q):
    """Geodesic distance between two points of the same model."""
    _same_model(p, q)
    return kernels.dist(p.coords, q.coords, p.model.radius)


def riemannian_norm(v):
    """Length ``sqrt(lambda(p)) |v|`` of a tangent vector."""
    r = v.base.model.radius
    return 2.0 * r / boundary_gap(v.base.coords, r) * float(np.linalg.norm(v.components))


def egrad_to_rgrad(g):
    """Riemannian gradient ``lambda(p)**-1 * grad_E f`` as a tangent vector."""
    r = g.base.model.radius
    inv_lam = (boundary_gap(g.base.coords, r) / (2.0 * r)) ** 2
    return Tangent(g.base, inv_lam * g.partials)


def clip_coords(x, radius=1.0, eps=DEFAULT_CLIP_EPS):
    """Radially pull ``x`` into the ball of radius ``radius (1 - eps)``.

    Returns ``(coords, moved)``.
    """
    return kernels.project(x, radius, eps)


def project_into_ball(model, raw, eps=DEFAULT_CLIP_EPS):
    """Return the point ``raw`` pulled radially inside ``radius (1 - eps)``.

    Points already strictly inside that radius are returned unchanged.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    arr = np.asarray(raw, dtype=np.float64)
    if arr.shape != (model.dim,) or not np.all(np.isfinite(arr)):
        raise DomainError(f"cannot project {raw!r}")
    y, _ = kernels.project(arr, model.radius, eps)
    return Point(y, model)


def exp_map_coords(p, v, radius=1.0):
    """Array-level exponential map without type checks or clipping."""
    return kernels.expmap(p, v, radius)


def distance_coords(p, q, radius=1.0):
    """Array-level distance without type checks."""
    return kernels.dist(p, q, radius)


def exp_map(p, v):
    """Follow the geodesic from ``p`` with initial velocity ``v`` for unit time.

    The arrival point is computed in closed form with an arrangement of terms
    that stays accurate for tiny steps and near the boundary.  If rounding puts
    the result on or beyond the boundary it is projected back and a warning is
    logged.
    """
    if v.base is not p and v.base != p:
        raise ModelMismatchError("tangent vector is not attached to p")
    r = p.model.radius
    q = kernels.expmap(p.coords, v.components, r)
    if not np.all(np.isfinite(q)):
        raise DomainError(f"exponential map produced non-finite output at {p}")
    if not boundary_gap(q, r) > 0.0:
        log.warning("exp_map output left the ball; projecting back")
        q, _ = kernels.project(q, r, DEFAULT_CLIP_EPS)
    return Point(q, p.model)


def exp_map_with_intermediates(p, v):
    """Like :func:`exp_map` but also return the scalar intermediates.

    ``F`` is ``g . p`` for ``g = -lambda(p) v``, ``hSq = r**2 - |p|**2`` and
    ``arrivalDistance`` is the hyperbolic distance from ``p`` to the result.
    """
    q = exp_map(p, v)
    r = p.model.radius
    x = p.coords
    vc = v.components
    h2 = boundary_gap(x, r)
    lam = (2.0 * r / h2) ** 2
    d = math.sqrt(lam) * float(np.linalg.norm(vc))
    if d == 0.0:
        info = ExpMapIntermediates(0.0, 0.0, 0.0, h2, 2.0 * r * r, 0.0, 0.0)
        return q, info
    d = min(d, kernels.MAX_STEP_LENGTH)
    c = 2.0 * math.sinh(0.5 * d) ** 2
    T = h2 / (2.0 * r * math.sqrt(2.0) * math.cosh(0.5 * d)) * sinhc(d)
    F = -lam * float(vc @ x)
    D2 = float(x @ x)
    FT2 = (F * T) ** 2
    z2 = 2.0 * r * r + c * (r * r + D2) - 2.0 * FT2
    cp = c * D2 - FT2
    num = -F * T * (z2 - 2.0 * cp) - z2 * math.sqrt(z2 - cp + FT2)
    xi = num / (4.0 * cp * FT2 + z2 * z2)
    info = ExpMapIntermediates(c, F, T, h2, z2, xi, distance(p, q))
    return q, info
