"""Barycenter (Karcher mean) problems on the Poincare ball.

The objective is ``f(p) = (1/n) sum_i d(p, q_i)^2``.  This module provides
the objective with an unbiased one-sample stochastic oracle, the step size and
rate constants used by the convergence bound, a deterministic geodesic
solver, the one-dimensional two-anchor problem used to expose the outward
bias of natural-gradient steps, and a runner for the two-anchor experiment in
the plane.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .diagnostics import xcothx
from .geometry import DEFAULT_CLIP_EPS, DiskModel, DomainError, Point
from .optimizers import RULES, Objective, RunConfig, make_rng, run


@dataclass(frozen=True)
class BarycenterProblem:
    """Anchors ``q_1..q_n`` (as an ``(n, dim)`` array) in a disk model."""

    anchors: np.ndarray
    model: DiskModel

    def __post_init__(self):
        q = np.array(self.anchors, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] < 1 or q.shape[1] != self.model.dim:
            raise DomainError(f"anchors must have shape (n >= 1, {self.model.dim})")
        for row in q:
            Point(row, self.model)  # interior check
        q.setflags(write=False)
        object.__setattr__(self, "anchors", q)

    @classmethod
    def from_points(cls, points):
        model = points[0].model
        return cls(np.array([p.coords for p in points]), model)


class BarycenterObjective(Objective):
    """Mean squared distance to the anchors.

    ``stochastic_gradient`` returns the gradient of ``d(p, q_i)^2`` for an
    anchor drawn uniformly, whose expectation is the full gradient.
    """

    def __init__(self, problem):
        self.problem = problem
        self.model = problem.model
        self._q = problem.anchors
        self._r = problem.model.radius

    def value(self, x):
        return float(np.mean(kernels.dist_batch(np.broadcast_to(x, self._q.shape), self._q, self._r) ** 2))

    def gradient(self, x):
        g = np.zeros(self._q.shape[1])
        for q in self._q:
            g += kernels.sqdist_grad(x, q, self._r)[1]
        return g / self._q.shape[0]

    def stochastic_gradient(self, x, rng):
        i = int(rng.integers(self._q.shape[0]))
        return kernels.sqdist_grad(x, self._q[i], self._r)[1]


def objective(problem):
    """The barycenter objective of ``problem``."""
    return BarycenterObjective(problem)


@dataclass(frozen=True)
class BarycenterAnalysis:
    """Constants for the geodesic rate bound.

    ``k2`` is the largest anchor distance from the origin, ``D`` is
    ``max(d(0, p0), k2)``, ``k1 = D`` bounds distances from the origin inside
    the ball ``K_D = {d(0, .) <= D}``, ``smoothness = k1 + k2 + 1``,
    ``step_size = 1/(2D+1)`` and ``eps_rate = min(1/(D coth D), 1/(2D+1))``.
    """

    D: float
    k1: float
    k2: float
    smoothness: float
    step_size: float
    eps_rate: float

    def bound(self, t):
        """``(1 - eps_rate)**(t - 2) * D**3``."""
        return (1.0 - self.eps_rate) ** (t - 2) * self.D ** 3


def analysis(problem, p0):
    """Compute the constants of :class:`BarycenterAnalysis` for ``p0``."""
    r = problem.model.radius
    zero = np.zeros(problem.model.dim)
    k2 = max(kernels.dist(zero, q, r) for q in problem.anchors)
    D = max(kernels.dist(zero, p0.coords, r), k2)
    k1 = D
    step = 1.0 / (2.0 * D + 1.0)
    eps_rate = min(1.0 / xcothx(D), step)
    return BarycenterAnalysis(D, k1, k2, k1 + k2 + 1.0, step, eps_rate)


@dataclass
class SolveResult:
    """Trace of a deterministic geodesic solve plus the ball-membership check."""

    trace: object
    analysis: BarycenterAnalysis
    max_origin_distance: float
    stays_in_ball: bool


def solve_deterministic(problem, p0, steps=500, tol=1e-12):
    """Full-gradient geodesic descent with the step size from :func:`analysis`.

    ``stays_in_ball`` reports whether every iterate satisfies
    ``d(0, p_t) <= D (1 + tol)``.
    """
    info = analysis(problem, p0)
    cfg = RunConfig(rule="geodesic", learning_rate=info.step_size, steps=steps, stuck_window=0)
    trace = run(objective(problem), p0, cfg)
    zeros = np.zeros_like(trace.iterates)
    dmax = float(np.max(kernels.dist_batch(trace.iterates, zeros, problem.model.radius)))
    return SolveResult(trace, info, dmax, dmax <= info.D * (1.0 + tol) + tol)


def one_dim_optimum(eps):
    """Minimizer of ``d(p, 0)^2 + d(p, 1 - eps)^2`` on the line.

    ``(1 - sqrt((2 - eps) eps)) / (1 - eps)``, the hyperbolic midpoint of 0 and
    ``1 - eps``.  ``eps`` is first replaced by ``1 - fl(1 - eps)`` so the
    result is the midpoint of the anchor that is actually representable.
    """
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    e = 1.0 - (1.0 - eps)
    return (1.0 - math.sqrt((2.0 - e) * e)) / (1.0 - e)


@dataclass(frozen=True)
class BiasProbe:
    """One step from the two-anchor optimum towards each anchor.

    ``geo_*`` are distances moved by geodesic steps and ``nat_*`` by natural
    steps, for ``f0 = d(., 0)^2 / 2`` (left) and ``f1 = d(., 1 - eps)^2 / 2``
    (right).  ``nat_*_coord`` are the natural-step coordinates and
    ``closed_*`` their closed forms ``p -+ eta (1 - p^2) d / 2``.
    """

    p_opt: float
    geo_left: float
    geo_right: float
    nat_left: float
    nat_right: float
    nat_left_coord: float
    nat_right_coord: float
    closed_left: float
    closed_right: float


def bias_probe(eps, eta, clip_eps=DEFAULT_CLIP_EPS):
    """Compare geodesic and natural steps at the two-anchor optimum.

    Distances are measured to the points an optimizer would actually reach,
    so a natural step that overshoots the boundary is clipped first.  The
    ``nat_*_coord`` fields keep the raw, unclipped coordinates.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    p = one_dim_optimum(eps)
    a = 1.0 - float(eps)
    P = np.array([p])
    gap = kernels.boundary_gap(P)
    inv_lam = (0.5 * gap) ** 2
    out = {}
    for side, q in (("left", 0.0), ("right", a)):
        # Euclidean gradient of d(., q)^2 / 2
        g = 0.5 * kernels.sqdist_grad(P, np.array([q]))[1]
        x_geo, _ = kernels.step(P, g, 2, eta, 1.0, clip_eps)
        raw = P - eta * inv_lam * g
        x_nat, _ = kernels.project(raw, 1.0, clip_eps)
        out["geo_" + side] = kernels.dist(P, x_geo)
        out["nat_" + side] = kernels.dist(P, x_nat)
        out["nat_" + side + "_coord"] = float(raw[0])
    d0 = kernels.dist(P, np.zeros(1))
    d1 = kernels.dist(P, np.array([a]))
    out["closed_left"] = p - eta * 0.5 * gap * d0
    out["closed_right"] = p + eta * 0.5 * gap * d1
    return BiasProbe(p_opt=p, **out)


TWO_ANCHOR_EPS = 1e-8
DEFAULT_RATES = (0.0001, 0.01, 0.02, 0.05, 0.1, 0.2)
OFFSET_WINDOW = 200


@dataclass
class CellResult:
    """Outcome of one rule and learning rate in the two-anchor experiment.

    ``offsets`` are ``|p_t| - |p_opt|`` over the last ``OFFSET_WINDOW``
    iterates: positive means farther from the origin than the optimum.
    """

    rule: str
    rate: float
    seed: int
    losses: np.ndarray
    offsets: np.ndarray
    distances_to_opt: np.ndarray
    failed: bool
    reason: str
    clip_events: int
    optimum_loss: float
    extra: dict = field(default_factory=dict)

    @property
    def mean_offset(self):
        return float(np.mean(self.offsets))

    @property
    def mean_abs_offset(self):
        return float(np.mean(np.abs(self.offsets)))

    def histogram(self, bins=20):
        counts, edges = np.histogram(self.offsets, bins=bins)
        return counts, edges


def two_anchor_problem(eps=TWO_ANCHOR_EPS):
    """Anchors ``(0, 0)`` and ``(1 - eps, 0)`` in the unit disk."""
    model = DiskModel(1.0, 2)
    return BarycenterProblem(np.array([[0.0, 0.0], [1.0 - eps, 0.0]]), model)


def experiment_4_1(rates=DEFAULT_RATES, iterations=10000, seed=0, rules=RULES,
                   eps=TWO_ANCHOR_EPS):
    """Stochastic two-anchor barycenter runs for every rule and rate.

    Each run starts at the origin, draws one anchor per step and uses the
    stream ``make_rng(seed, cell)`` where ``cell`` enumerates rules (outer)
    and rates (inner).
    """
    problem = two_anchor_problem(eps)
    f = objective(problem)
    p_opt = np.array([one_dim_optimum(eps), 0.0])
    f_opt = f.value(p_opt)
    p0 = problem.model.origin()
    results = []
    cell = 0
    for rule in rules:
        for rate in rates:
            cell_seed = int(make_rng(seed, cell).integers(2 ** 63))
            cfg = RunConfig(rule=rule, learning_rate=float(rate), steps=int(iterations),
                            seed=cell_seed, stochastic=True)
            tr = run(f, p0, cfg)
            tail = tr.iterates[-OFFSET_WINDOW:]
            offsets = np.linalg.norm(tail, axis=1) - p_opt[0]
            dopt = kernels.dist_batch(tr.iterates, np.broadcast_to(p_opt, tr.iterates.shape))
            results.append(CellResult(rule, float(rate), cell_seed, tr.loss_values, offsets,
                                      dopt, tr.failed, tr.reason, tr.clip_events, f_opt))
            cell += 1
    return results
