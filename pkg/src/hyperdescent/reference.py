"""Circle-geometry construction of geodesics and equidistance curves.

A geodesic through ``p`` that is not a diameter is an arc of a Euclidean
circle orthogonal to the ideal boundary, and the set of points at a fixed
hyperbolic distance from ``p`` is another Euclidean circle.  Intersecting the
two gives the exponential map by plain Euclidean geometry.  The construction
is numerically fragile (it divides by the curvature and needs an explicit
orthonormal frame), so it is only used as an independent oracle in tests and
refuses inputs outside its well-conditioned domain.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point, boundary_gap, riemannian_norm

# The oracle abstains below these thresholds.
MIN_ORACLE_ANGLE = 1e-4
MIN_ORACLE_STEP = 1e-8
# north_vertex refuses nearly parallel inputs.
MIN_VERTEX_ANGLE = 1e-8
DEGENERATE_CURVATURE = 1e-10


class DegenerateGeodesic(ValueError):
    """The geodesic is (numerically) a diameter, so it has no finite circle."""


class OracleDomainError(ValueError):
    """Input lies outside the domain where the reference construction is reliable."""


@dataclass(frozen=True)
class GeodesicCircle:
    """Euclidean circle carrying a geodesic; ``degenerate`` means a diameter."""

    center: np.ndarray
    radius_sq: float
    degenerate: bool


@dataclass(frozen=True)
class EquidistanceCircle:
    """Euclidean circle of points at a fixed hyperbolic distance from a point."""

    center: np.ndarray
    radius_sq: float


def _unit(g):
    g = np.asarray(g, dtype=np.float64)
    n = float(np.linalg.norm(g))
    if not n > 0.0 or not math.isfinite(n):
        raise DegenerateGeodesic("direction vector must be finite and non-zero")
    return g / n


def _perp(p, e):
    # component of p orthogonal to the unit vector e
    return p - float(p @ e) * e


def _angle(p, e):
    # unsigned angle between the line through p and the unit vector e, in [0, pi/2]
    pn = float(np.linalg.norm(p))
    if pn == 0.0:
        return 0.0
    s = float(np.linalg.norm(_perp(p, e))) / pn
    c = abs(float(p @ e)) / pn
    return math.atan2(s, c)


def north_vertex(p, g_dir):
    """Second intersection ``N`` of the geodesic circle with the line through p.

    ``N = alpha k + beta p`` with ``k = r g_dir`` is fixed by the two conditions
    ``(p - k).(N + k) = 0`` and ``(p + k).(N - k) = 0``.  The 2x2 system is
    solved by Cramer's rule with its determinant ``-2 (r^2 |p|^2 - (k.p)^2)``
    evaluated as ``-2 r^2 |p_perp|^2`` to avoid cancellation.
    """
    r = p.model.radius
    x = p.coords
    e = _unit(g_dir)
    if float(x @ x) == 0.0 or _angle(x, e) <= MIN_VERTEX_ANGLE:
        raise DegenerateGeodesic("direction is parallel to p or p is the origin")
    k = r * e
    m2 = float(k @ x)
    D2 = float(x @ x)
    perp2 = float(np.sum(_perp(x, e) ** 2))
    den = r * r * perp2  # r^2 D^2 - m^4
    alpha = m2 * (D2 - r * r) / den
    beta = (r ** 4 - m2 * m2) / den
    return alpha * k + beta * x


def geodesic_curvature(p, g):
    """Euclidean curvature ``kappa`` of the geodesic through p tangent to g.

    Equals ``2 |p_perp| / (r^2 - |p|^2)`` where ``p_perp`` is the part of p
    orthogonal to g; zero for diameters.
    """
    e = _unit(g)
    x = p.coords
    return 2.0 * float(np.linalg.norm(_perp(x, e))) / boundary_gap(x, p.model.radius)


def geodesic_circle(p, v):
    """Circle carrying the geodesic through ``p`` with velocity ``v``."""
    x = p.coords
    kappa = geodesic_curvature(p, v.components)
    n = x.shape[0]
    if kappa < DEGENERATE_CURVATURE:
        return GeodesicCircle(np.full(n, np.nan), math.inf, True)
    e = _unit(v.components)
    if _angle(x, e) > MIN_ORACLE_ANGLE:
        N = north_vertex(p, e)
        center = 0.5 * (x + N)
        radius_sq = float(np.sum((N - x) ** 2)) / 4.0
    else:
        # nearly radial: go out from p along the normal by 1/kappa
        ey = _perp(x, e)
        ey = ey / float(np.linalg.norm(ey))
        center = x + ey / kappa
        radius_sq = 1.0 / (kappa * kappa)
    return GeodesicCircle(center, radius_sq, False)


def equidistance_circle(p, d):
    """Euclidean circle of points at hyperbolic distance ``d`` from ``p``."""
    if not d >= 0.0:
        raise ValueError(f"distance must be non-negative, got {d}")
    r = p.model.radius
    x = p.coords
    h2 = boundary_gap(x, r)
    c = 2.0 * math.sinh(0.5 * d) ** 2
    den = 2.0 * r * r + c * h2
    center = 2.0 * r * r * x / den
    radius_sq = c * (c + 2.0) * r * r * h2 * h2 / (den * den)
    return EquidistanceCircle(center, radius_sq)


def reference_exp_map(p, v):
    """Exponential map by intersecting the geodesic and equidistance circles.

    Works in the frame ``e_x = g/|g|`` (``g = -lambda v``), ``e_y`` orthogonal
    to ``e_x`` with ``p.e_y >= 0``.  Raises :class:`OracleDomainError` when p
    and v are within ``MIN_ORACLE_ANGLE`` of parallel or the step is shorter
    than ``MIN_ORACLE_STEP``.
    """
    r = p.model.radius
    x0 = p.coords
    d = riemannian_norm(v)
    if d <= MIN_ORACLE_STEP:
        raise OracleDomainError(f"step length {d} below oracle threshold")
    ex = -_unit(v.components)
    if float(x0 @ x0) == 0.0 or _angle(x0, ex) <= MIN_ORACLE_ANGLE:
        raise OracleDomainError("p and v are too close to parallel")
    pe = _perp(x0, ex)
    ey = pe / float(np.linalg.norm(pe))

    h2 = boundary_gap(x0, r)
    c = 2.0 * math.sinh(0.5 * d) ** 2
    fac = -c * h2 / (2.0 * r * r + c * h2)
    kx = fac * float(x0 @ ex)
    ky = fac * float(x0 @ ey)
    rho = 1.0 / geodesic_curvature(p, ex)
    Re2 = equidistance_circle(p, d).radius_sq
    psi2 = rho * (rho - ky)
    P2 = Re2 - (kx * kx + ky * ky)
    disc = 4.0 * kx * kx * psi2 ** 2 + 4.0 * psi2 ** 3 * P2 / rho ** 2 - psi2 ** 2 * P2 ** 2 / rho ** 2
    xc = (kx * (2.0 * psi2 - P2) - math.sqrt(max(disc, 0.0))) / (2.0 * (kx * kx + psi2 ** 2 / rho ** 2))
    root = math.sqrt(max(rho * rho - xc * xc, 0.0))
    # Squaring merged the near and far halves of the circle; the sign of the
    # unsquared equation tells which one holds the arrival point.
    if -2.0 * kx * xc + 2.0 * psi2 - P2 >= 0.0:
        yc = rho - root
    else:
        yc = rho + root
    return Point(x0 + xc * ex + yc * ey, p.model)
