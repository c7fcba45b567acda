"""Randomized checks of the exponential map.

Three suites, each returning a flat dict of counts and worst errors:

* ``identity``: ``d(p, Exp_p(v)) == ||v||_p`` for points up to ``1 - 1e-8``
  from the centre and step lengths spanning ``[1e-12, 10]``, a tenth of them
  exactly parallel or antiparallel to ``p``;
* ``oracle``: agreement with the circle construction in
  :mod:`hyperdescent.reference`, plus membership of the result in the
  geodesic circle and the equidistance circle;
* ``colinear``: directions within a tiny angle of ``+-p``.
"""

import math
import time

import numpy as np

from ._backend import kernels
from .geometry import DiskModel, Tangent, exp_map
from .optimizers import make_rng
from .reference import OracleDomainError, equidistance_circle, geodesic_circle, reference_exp_map

IDENTITY_TOL = 1e-9
ORACLE_TOL = 1e-8
CIRCLE_TOL = 1e-9
MAX_NORM = 1.0 - 1e-8


def _identity_error(P, V, L, r=1.0):
    Q = kernels.expmap_batch(P, V, r)
    D = kernels.dist_batch(P, Q, r)
    finite = np.isfinite(Q).all(axis=1) & np.isfinite(D)
    err = np.abs(D - L) / np.maximum(1.0, L)
    return err, finite


def _tangent_for(P, U, L, r=1.0):
    # Euclidean components of the tangent vector with Riemannian norm L
    gaps = np.array([kernels.boundary_gap(p, r) for p in P])
    return U * (L * gaps / (2.0 * r))[:, None]


def identity_cases(n, seed=0, dim=2):
    """Random ``(P, V, L)`` with ``|p| <= 1 - 1e-8`` and ``L`` log-uniform.

    Points are uniform by area in the disk of radius ``1 - 1e-8``.  A tenth of
    the directions are exactly ``+-p / |p|``.
    """
    rng = make_rng(seed, 0)
    g = rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = MAX_NORM * rng.uniform(0.0, 1.0, n) ** (1.0 / dim)
    P = g * rad[:, None]
    L = 10.0 ** rng.uniform(-12.0, 1.0, n)
    U = rng.normal(size=(n, dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    col = rng.random(n) < 0.1
    sgn = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    nrm = np.linalg.norm(P, axis=1)
    ok = col & (nrm > 0)
    U[ok] = (sgn[:, None] * P / np.where(nrm > 0, nrm, 1.0)[:, None])[ok]
    return P, _tangent_for(P, U, L), L, ok


def identity_suite(n, seed=0):
    t0 = time.perf_counter()
    P, V, L, col = identity_cases(n, seed)
    err, finite = _identity_error(P, V, L)
    bad = ~finite | ~(err <= IDENTITY_TOL)
    return {
        "identity_samples": int(n),
        "identity_colinear": int(col.sum()),
        "identity_max_error": float(np.max(np.where(finite, err, np.inf))) if n else 0.0,
        "identity_nonfinite": int((~finite).sum()),
        "identity_failures": int(bad.sum()),
        "identity_seconds": time.perf_counter() - t0,
    }


def oracle_cases(n, seed=0):
    """Yield ``(p, v, length)`` in dims 2..4 and radii 1 and 2.5."""
    rng = make_rng(seed, 1)
    for _ in range(n):
        dim = int(rng.integers(2, 5))
        r = float(rng.choice([1.0, 2.5]))
        model = DiskModel(r, dim)
        x = rng.normal(size=dim)
        x *= r * rng.uniform(0.01, 0.999) / np.linalg.norm(x)
        p = model.point(x)
        u = rng.normal(size=dim)
        u /= np.linalg.norm(u)
        length = 10.0 ** rng.uniform(-6.0, math.log10(20.0))
        lam = (2.0 * r / kernels.boundary_gap(x, r)) ** 2
        yield p, Tangent(p, u * length / math.sqrt(lam)), length


def oracle_suite(n, seed=0):
    """Stable map against the reference construction on ``n`` inputs.

    Inputs where the reference abstains (tiny steps, near-radial directions)
    are counted as skipped.
    """
    compared = skipped = failures = 0
    worst = worst_geo = worst_eq = 0.0
    for p, v, length in oracle_cases(n, seed):
        q = exp_map(p, v).coords
        ec = equidistance_circle(p, length)
        e_eq = abs(float(np.linalg.norm(q - ec.center)) - math.sqrt(ec.radius_sq))
        worst_eq = max(worst_eq, e_eq)
        bad = not e_eq <= CIRCLE_TOL
        gc = geodesic_circle(p, v)
        if not gc.degenerate:
            e_geo = abs(float(np.linalg.norm(q - gc.center)) - math.sqrt(gc.radius_sq))
            worst_geo = max(worst_geo, e_geo)
            bad |= not e_geo <= CIRCLE_TOL
        try:
            qr = reference_exp_map(p, v).coords
        except OracleDomainError:
            skipped += 1
        else:
            compared += 1
            e = float(np.max(np.abs(q - qr)))
            worst = max(worst, e)
            bad |= not e <= ORACLE_TOL
        failures += bool(bad)
    return {
        "oracle_samples": int(n),
        "oracle_compared": compared,
        "oracle_skipped": skipped,
        "oracle_max_error": worst,
        "oracle_geodesic_circle_max_error": worst_geo,
        "oracle_equidistance_max_error": worst_eq,
        "oracle_failures": failures,
    }


def colinear_suite(n, seed=0):
    """Directions at angles in ``[1e-16, 1e-4]`` from ``+-p``."""
    rng = make_rng(seed, 2)
    ang = rng.uniform(0.0, 2.0 * math.pi, n)
    rad = MAX_NORM * np.sqrt(rng.uniform(0.0, 1.0, n))
    P = np.c_[rad * np.cos(ang), rad * np.sin(ang)]
    delta = 10.0 ** rng.uniform(-16.0, -4.0, n) * np.where(rng.random(n) < 0.5, 1.0, -1.0)
    flip = np.where(rng.random(n) < 0.5, 0.0, math.pi)
    U = np.c_[np.cos(ang + flip + delta), np.sin(ang + flip + delta)]
    L = 10.0 ** rng.uniform(-6.0, 1.0, n)
    err, finite = _identity_error(P, _tangent_for(P, U, L), L)
    bad = ~finite | ~(err <= IDENTITY_TOL)
    return {
        "colinear_samples": int(n),
        "colinear_max_error": float(np.max(np.where(finite, err, np.inf))) if n else 0.0,
        "colinear_nonfinite": int((~finite).sum()),
        "colinear_failures": int(bad.sum()),
    }


def run_selftest(samples, seed=0):
    """All three suites; ``passed`` is true when no suite reports a failure.

    The oracle suite is capped at ``min(samples, 10**4)`` inputs because the
    reference construction runs in pure Python.
    """
    if int(samples) != samples or samples < 1:
        raise ValueError(f"samples must be a positive integer, got {samples}")
    samples = int(samples)
    report = {"samples": samples, "seed": int(seed), "backend": kernels.BACKEND}
    report.update(identity_suite(samples, seed))
    report.update(oracle_suite(min(samples, 10 ** 4), seed))
    report.update(colinear_suite(samples, seed))
    report["passed"] = (report["identity_failures"] == 0 and report["oracle_failures"] == 0
                        and report["colinear_failures"] == 0)
    return report
