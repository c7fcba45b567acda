"""Gradient update rules on the Poincare ball and a driver loop.

Three rules are provided, all taking a Euclidean gradient ``g = df``:

* ``euclidean``: ``p - eta g``, then clipped into the ball;
* ``natural``: ``p - eta g / lambda(p)``, then clipped;
* ``geodesic``: ``Exp_p(-eta g / lambda(p))``.

The geodesic rule never leaves the ball in exact arithmetic, so a clip event
there is logged as an anomaly.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .geometry import DEFAULT_CLIP_EPS, DomainError, EuclGradient, Point

log = logging.getLogger(__name__)

RULES = ("euclidean", "natural", "geodesic")
_RULE_CODE = {name: i for i, name in enumerate(RULES)}


def rule_code(rule):
    """Integer code of an update rule name, as used by the kernels."""
    try:
        return _RULE_CODE[rule]
    except KeyError:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}") from None


def make_rng(seed, *stream):
    """PCG64 generator for ``seed``; extra integers select an independent stream.

    ``make_rng(seed, i)`` seeds from ``SeedSequence(seed, spawn_key=(i,))``,
    which is what ``SeedSequence(seed).spawn`` would hand to child ``i``.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


class Objective:
    """Interface for functions minimized by :func:`run`.

    Subclasses implement :meth:`value` and :meth:`gradient` on coordinate
    arrays.  :meth:`stochastic_gradient` defaults to the exact gradient; an
    override must be unbiased.
    """

    model = None

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def stochastic_gradient(self, x, rng):
        return self.gradient(x)

    def eucl_gradient(self, p):
        return EuclGradient(p, self.gradient(p.coords))


@dataclass
class RunConfig:
    """Settings for :func:`run`."""

    rule: str = "geodesic"
    learning_rate: float = 0.1
    steps: int = 1000
    seed: int = 0
    clip_eps: float = DEFAULT_CLIP_EPS
    stochastic: bool = False
    # consecutive clipped steps at the end of a run that count as stuck
    stuck_window: int = 100

    def __post_init__(self):
        rule_code(self.rule)
        if not self.learning_rate > 0 or not math.isfinite(self.learning_rate):
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps}")
        if not 0.0 < self.clip_eps < 1.0:
            raise ValueError(f"clip_eps must lie in (0, 1), got {self.clip_eps}")


@dataclass
class Trace:
    """Iterates and losses of a run.

    ``iterates[t]`` and ``loss_values[t]`` belong to step ``t``; a failed run
    is truncated after its last finite iterate.
    """

    iterates: np.ndarray
    loss_values: np.ndarray
    radius: float = 1.0
    failed: bool = False
    reason: str = ""
    clip_events: int = 0
    clipped: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.loss_values)

    def points(self, model):
        return [Point(x, model) for x in self.iterates]

    def to_csv(self, path):
        """Write ``step, loss, x1..xn`` rows with 17 significant digits."""
        n = self.iterates.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "loss"] + [f"x{i + 1}" for i in range(n)])
            for t, (loss, x) in enumerate(zip(self.loss_values, self.iterates)):
                w.writerow([t, format_float(loss)] + [format_float(a) for a in x])


def format_float(x):
    """Round-trip exact text form of a float."""
    return format(float(x), ".17g")


def _check_step_args(g, eta):
    if not eta > 0:
        raise ValueError(f"learning rate must be positive, got {eta}")
    if not np.all(np.isfinite(g.partials)):
        raise DomainError("gradient has non-finite entries")


def _apply(rule, p, g, eta, eps):
    _check_step_args(g, eta)
    if g.base is not p and g.base != p:
        raise DomainError("gradient is not attached to p")
    y, moved = kernels.step(p.coords, g.partials, rule_code(rule), float(eta),
                            p.model.radius, float(eps))
    if moved and rule == "geodesic":
        log.warning("geodesic step reached the clipping radius; projected back")
    return Point(y, p.model)


def euclidean_step(p, g, eta, eps=DEFAULT_CLIP_EPS):
    """``clip(p - eta g)``."""
    return _apply("euclidean", p, g, eta, eps)


def natural_step(p, g, eta, eps=DEFAULT_CLIP_EPS):
    """``clip(p - eta g / lambda(p))``."""
    return _apply("natural", p, g, eta, eps)


def geodesic_step(p, g, eta, eps=DEFAULT_CLIP_EPS):
    """``Exp_p(-eta g / lambda(p))``; moves exactly ``eta ||grad f||`` in distance."""
    return _apply("geodesic", p, g, eta, eps)


def run(objective, p0, cfg):
    """Run ``cfg.steps`` updates of ``cfg.rule`` from ``p0``.

    In stochastic mode each step draws one oracle sample from a PCG64 stream
    seeded with ``cfg.seed``.  A non-finite gradient or iterate stops the run
    and marks the trace as failed; so does ending the run after
    ``cfg.stuck_window`` consecutive clipped steps.
    """
    r = p0.model.radius
    code = rule_code(cfg.rule)
    eta = float(cfg.learning_rate)
    eps = float(cfg.clip_eps)
    rng = make_rng(cfg.seed)
    T = int(cfg.steps)
    xs = np.empty((T + 1, p0.model.dim))
    fs = np.empty(T + 1)
    clipped = np.zeros(T + 1, dtype=bool)
    x = p0.coords.copy()
    xs[0] = x
    fs[0] = objective.value(x)
    grad = objective.stochastic_gradient if cfg.stochastic else None
    failed = False
    reason = ""
    last = T
    geo_clips = 0
    for t in range(1, T + 1):
        g = grad(x, rng) if grad is not None else objective.gradient(x)
        if not np.all(np.isfinite(g)):
            failed, reason, last = True, f"non-finite gradient at step {t}", t - 1
            break
        y, moved = kernels.step(x, g, code, eta, r, eps)
        if not np.all(np.isfinite(y)):
            failed, reason, last = True, f"non-finite iterate at step {t}", t - 1
            break
        if moved and code == 2:
            geo_clips += 1
        x = y
        xs[t] = x
        fs[t] = objective.value(x)
        clipped[t] = moved
        if not math.isfinite(fs[t]):
            failed, reason, last = True, f"non-finite loss at step {t}", t - 1
            break
    if geo_clips:
        log.warning("geodesic run clipped %d times", geo_clips)
    if not failed and cfg.stuck_window and last >= cfg.stuck_window:
        if clipped[last - cfg.stuck_window + 1:last + 1].all():
            failed, reason = True, "stuck at the clipping boundary"
    return Trace(xs[:last + 1], fs[:last + 1], r, failed, reason,
                 int(clipped[:last + 1].sum()), clipped[:last + 1])
