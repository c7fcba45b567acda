"""Second-order diagnostics on the unit Poincare ball.

Christoffel symbols, finite-difference Riemannian Hessians and the probe used
to check geodesic strong convexity and smoothness.  Everything here assumes
``radius == 1``.

Index arguments are zero-based.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .geometry import DiskModel, DomainError, Point, boundary_gap, exp_map, riemannian_norm


class UnsupportedModelError(ValueError):
    """Raised for models the diagnostics do not cover (radius other than 1)."""


def _require_unit(model):
    if model.radius != 1.0:
        raise UnsupportedModelError("diagnostics are implemented for radius 1 only")


@dataclass(frozen=True)
class HessianReport:
    """Riemannian Hessian at a point.

    ``matrix`` holds the coordinate form ``d2f - Gamma . df``.  Its eigenvalues
    relative to the metric, i.e. the eigenvalues of the self-adjoint operator
    ``H_p^{-1} matrix = matrix / lambda(p)``, are stored sorted ascending in
    ``eigenvalues``.  These are the numbers that bound geodesic convexity and
    smoothness.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray


def _dphi(x):
    # gradient of log sqrt(lambda) for the unit ball
    return 2.0 * x / boundary_gap(x, 1.0)


def christoffel(p, i, j, k):
    """Christoffel symbol ``Gamma^k_ij`` of the unit ball metric at ``p``.

    For the conformal metric ``exp(2 phi) I`` one has
    ``Gamma^k_ij = delta_ik d_j phi + delta_jk d_i phi - delta_ij d_k phi``
    with ``d phi = 2 p / (1 - |p|^2)``.
    """
    _require_unit(p.model)
    n = p.model.dim
    for idx in (i, j, k):
        if not 0 <= idx < n:
            raise IndexError(f"index {idx} out of range for dim {n}")
    g = _dphi(p.coords)
    return float((i == k) * g[j] + (j == k) * g[i] - (i == j) * g[k])


def christoffel_array(x):
    """All symbols as an array ``G[k, i, j]`` at coordinates ``x``."""
    n = x.shape[0]
    g = _dphi(x)
    eye = np.eye(n)
    return (np.einsum("ki,j->kij", eye, g) + np.einsum("kj,i->kij", eye, g)
            - np.einsum("ij,k->kij", eye, g))


def _check_finite(val):
    if not math.isfinite(val):
        raise DomainError("objective returned a non-finite value")
    return val


def euclidean_hessian_fd(func, x, h=1e-5):
    """Central finite-difference Hessian of a scalar function of coordinates."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    H = np.empty((n, n))
    f0 = _check_finite(func(x))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        H[i, i] = (_check_finite(func(x + ei)) - 2.0 * f0 + _check_finite(func(x - ei))) / (h * h)
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h
            val = (func(x + ei + ej) - func(x + ei - ej) - func(x - ei + ej) + func(x - ei - ej))
            H[i, j] = H[j, i] = _check_finite(val) / (4.0 * h * h)
    return H


def riemannian_hessian(f, p, h=1e-5):
    """Riemannian Hessian of objective ``f`` at ``p``.

    Second partials come from central differences of ``f.value`` with step
    ``h``; first partials come from ``f.gradient``.
    """
    _require_unit(p.model)
    if not 1e-6 <= h <= 1e-3:
        raise ValueError(f"step h must lie in [1e-6, 1e-3], got {h}")
    x = p.coords
    H = euclidean_hessian_fd(f.value, x, h)
    grad = np.asarray(f.gradient(x), dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise DomainError("objective returned a non-finite gradient")
    M = H - np.einsum("kij,k->ij", christoffel_array(x), grad)
    M = 0.5 * (M + M.T)
    lam = (2.0 / boundary_gap(x, 1.0)) ** 2
    eig = np.linalg.eigvalsh(M / lam)
    return HessianReport(M, np.sort(eig))


def xcothx(x):
    """``x coth x`` with its limit 1 at zero."""
    x = abs(float(x))
    if x < 1e-4:
        return 1.0 + x * x / 3.0
    return x / math.tanh(x)


def riemannian_hessian_sqdist_eigs(theta):
    """Exact metric eigenvalues of ``Hess d(., y)^2`` at distance ``theta`` from y.

    Returns ``(2, 2 theta coth theta)``: multiplicity one along the geodesic to
    ``y`` and ``n - 1`` across it.
    """
    return 2.0, 2.0 * xcothx(theta)


def euclidean_hessian_sqdist_eigs(p):
    """Eigenvalues of the coordinate Hessian of ``d(0, .)^2`` at ``p``.

    With ``s = |p|`` and ``d = d(0, p) = 2 artanh s`` these are
    ``8 (1 + s d) / (1 - s^2)^2`` in the radial direction (multiplicity 1) and
    ``4 d / (s (1 - s^2))`` in the tangential directions (multiplicity n-1).
    Both tend to 8 as ``s -> 0``.  ``p = 0`` is excluded.
    """
    _require_unit(p.model)
    s = float(np.linalg.norm(p.coords))
    if s == 0.0:
        raise DomainError("closed form is singular at the origin")
    g = boundary_gap(p.coords, 1.0)
    d = 2.0 * math.atanh(s)
    return 8.0 * (1.0 + s * d) / (g * g), 4.0 * d / (s * g)


def convexity_smoothness_probe(f, p, v):
    """Second-order residual of ``f`` along the geodesic ``t -> Exp_p(t v)``.

    Returns ``|f(Exp_p(v)) - f(p) - <v, grad f>_p| / (||v||^2 / 2)``.  For a
    geodesically mu-strongly convex, L-smooth function this lies in [mu, L].
    """
    nv = riemannian_norm(v)
    if not nv > 0.0:
        raise DomainError("probe direction must be non-zero")
    q = exp_map(p, v)
    # <v, grad f>_p = v^T H_p H_p^{-1} df = v . df
    lin = float(v.components @ np.asarray(f.gradient(p.coords), dtype=np.float64))
    return abs(f.value(q.coords) - f.value(p.coords) - lin) / (0.5 * nv * nv)


class SquaredDistance:
    """``x -> d(x, y)^2`` exposing ``value`` and ``gradient`` on coordinates."""

    def __init__(self, y, radius=1.0):
        self.y = np.asarray(y, dtype=np.float64)
        self.radius = float(radius)

    def value(self, x):
        return kernels.dist(x, self.y, self.radius) ** 2

    def gradient(self, x):
        return kernels.sqdist_grad(x, self.y, self.radius)[1]


def point_at_distance(theta, direction, dim=2):
    """Point of the unit ball at distance ``theta`` from 0 along ``direction``."""
    u = np.zeros(dim)
    u[:len(direction)] = direction
    u /= np.linalg.norm(u)
    return Point(math.tanh(0.5 * theta) * u, DiskModel(1.0, dim))


__all__ = [
    "HessianReport", "UnsupportedModelError", "christoffel", "christoffel_array",
    "riemannian_hessian", "euclidean_hessian_fd", "euclidean_hessian_sqdist_eigs",
    "riemannian_hessian_sqdist_eigs", "convexity_smoothness_probe", "xcothx",
    "SquaredDistance", "point_at_distance",
]
