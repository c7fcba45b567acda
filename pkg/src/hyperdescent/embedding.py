"""Poincare embeddings of graphs.

For a graph with out-neighbourhoods ``N(u)`` the loss is

    L = sum_u sum_{v in N(u)} [ d(u, v) + log sum_{w in N'(u)} exp(-d(u, w)) ]

with ``N'(u) = V - N(u) - {u}``.  Training samples one positive edge per
term; the denominator runs over all of ``N'(u)`` (full softmax) or over a
uniform sample of it (negative sampling).  Every point touched by a term is
moved with the chosen update rule using gradients taken before the step.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import kendalltau

from ._backend import kernels
from .geometry import DEFAULT_CLIP_EPS, DiskModel, DomainError, Point
from .graphs import graph_distance_matrix
from .optimizers import format_float, make_rng, rule_code

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Training settings; defaults follow the usual tree-embedding setup."""

    dim: int = 2
    lr: float = 0.01
    negatives: int = 0
    steps: int = 100000
    init_range: tuple = (-0.001, 0.001)
    clip_eps: float = DEFAULT_CLIP_EPS
    seed: int = 0
    rule: str = "geodesic"
    batch: int = 1
    eval_every: int = 0
    radius: float = 1.0
    # trailing window used for the reported mean loss and the clip-lock test
    window: int = 100

    def __post_init__(self):
        rule_code(self.rule)
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not self.lr > 0 or not math.isfinite(self.lr):
            raise ValueError(f"lr must be positive, got {self.lr}")
        if int(self.negatives) != self.negatives or self.negatives < 0:
            raise ValueError(f"negatives must be a non-negative integer, got {self.negatives}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a non-negative integer, got {self.steps}")
        if int(self.batch) != self.batch or self.batch < 1:
            raise ValueError(f"batch must be a positive integer, got {self.batch}")
        lo, hi = self.init_range
        if not lo < hi:
            raise ValueError(f"init_range must be increasing, got {self.init_range}")
        if max(abs(lo), abs(hi)) * math.sqrt(self.dim) >= self.radius:
            raise DomainError("init_range does not fit inside the ball")


@dataclass
class EmbeddingState:
    """Positions of all nodes, row ``i`` belonging to node ``i``."""

    model: DiskModel
    positions: np.ndarray
    seed: int = 0

    def point(self, i):
        return Point(self.positions[i], self.model)

    def copy(self):
        return EmbeddingState(self.model, self.positions.copy(), self.seed)


def init_state(graph, cfg):
    """Uniform initial coordinates in ``cfg.init_range`` from stream ``seed``."""
    rng = make_rng(cfg.seed)
    lo, hi = cfg.init_range
    X = rng.uniform(lo, hi, size=(graph.num_nodes, cfg.dim))
    return EmbeddingState(DiskModel(cfg.radius, cfg.dim), X, cfg.seed)


def pairwise_distances(X, radius=1.0):
    """Matrix of hyperbolic distances between the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    gaps = np.array([kernels.boundary_gap(x, radius) for x in X])
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
    arg = 2.0 * radius * radius * sq / np.outer(gaps, gaps)
    return np.log1p(arg + np.sqrt(arg * (arg + 2.0)))


class _Neighbourhoods:
    # Cached N(u), N'(u) and the edge array of a graph.
    def __init__(self, graph):
        self.edges = graph.sorted_edges()
        self.nonnb = graph.non_neighbors()


def _term_negatives(nb, u, negatives, rng):
    cand = nb.nonnb[u]
    if negatives == 0:
        return cand
    if len(cand) < negatives:
        log.warning("node %d has only %d non-neighbours; using all of them", u, len(cand))
        return cand
    return np.sort(rng.choice(cand, size=negatives, replace=False))


def loss_full(state, graph):
    """Full loss with the softmax denominator over every non-neighbour."""
    nb = _Neighbourhoods(graph)
    if len(nb.edges) == 0:
        log.warning("graph has no edges; loss is zero")
        return 0.0
    Dm = pairwise_distances(state.positions, state.model.radius)
    total = 0.0
    for u, v in nb.edges:
        neg = Dm[u, nb.nonnb[u]]
        total += Dm[u, v]
        if len(neg):
            m = neg.min()
            total += -m + math.log(np.sum(np.exp(m - neg)))
    return float(total)


def _terms_grad(state, pairs, negs_list):
    X = state.positions
    r = state.model.radius
    grads = {}
    total = 0.0
    for (u, v), negs in zip(pairs, negs_list):
        loss, gu, gv, gn = kernels.softmax_term_grad(X, int(u), int(v), negs, r)
        total += loss
        for idx, g in [(int(u), gu), (int(v), gv)] + list(zip(negs.tolist(), gn)):
            if idx in grads:
                grads[idx] = grads[idx] + g
            else:
                grads[idx] = g.copy()
    return total, grads


def loss_full_grad(state, graph):
    """Full loss and its dense Euclidean gradient, shape ``(n, dim)``."""
    nb = _Neighbourhoods(graph)
    negs = [nb.nonnb[u] for u, _ in nb.edges]
    total, grads = _terms_grad(state, nb.edges, negs)
    G = np.zeros_like(state.positions)
    for i, g in grads.items():
        G[i] = g
    return total, G


def loss_minibatch_grad(state, graph, batch, rng):
    """Sum of ``batch`` uniformly drawn edge terms and their gradients.

    Returns ``(loss, grads)`` with ``grads`` mapping node index to its
    Euclidean gradient.  Scaling by ``|E| / batch`` gives an unbiased
    estimate of the full loss gradient.
    """
    nb = _Neighbourhoods(graph)
    idx = rng.integers(len(nb.edges), size=int(batch))
    pairs = nb.edges[idx]
    negs = [nb.nonnb[u] for u, _ in pairs]
    return _terms_grad(state, pairs, negs)


def loss_negative_sampling_grad(state, graph, batch, negatives, rng):
    """Like :func:`loss_minibatch_grad` with ``negatives`` sampled non-neighbours.

    Negatives are drawn uniformly without replacement from ``N'(u)``.
    Returns ``(loss, grads, negs)`` where ``negs`` lists the sampled sets.
    """
    if negatives < 1:
        raise ValueError("negatives must be at least 1")
    nb = _Neighbourhoods(graph)
    idx = rng.integers(len(nb.edges), size=int(batch))
    pairs = nb.edges[idx]
    negs = [_term_negatives(nb, int(u), int(negatives), rng) for u, _ in pairs]
    loss, grads = _terms_grad(state, pairs, negs)
    return loss, grads, negs


def kendall_tau(A, B):
    """Kendall tau-b between two distance matrices (upper triangles) or sequences."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    if A.ndim == 2:
        iu = np.triu_indices(A.shape[0], k=1)
        a, b = A[iu], B[iu]
    elif A.ndim == 1:
        a, b = A, B
    else:
        raise ValueError("expected matrices or sequences")
    if a.size < 2 or np.all(a == a[0]) or np.all(b == b[0]):
        raise ValueError("tau is undefined for constant inputs")
    return float(kendalltau(a, b, variant="b").statistic)


@dataclass(frozen=True)
class EvalRecord:
    full_loss: float
    tau: float


def evaluate(state, graph, distance_graph=None):
    """Full loss and tau between hop distances and embedded distances.

    Hop distances come from ``distance_graph`` when given (for instance the
    base tree of a closure graph), else from ``graph`` itself.
    """
    ref = graph if distance_graph is None else distance_graph
    hops = graph_distance_matrix(ref)
    Dm = pairwise_distances(state.positions, state.model.radius)
    return EvalRecord(loss_full(state, graph), kendall_tau(hops, Dm))


@dataclass
class TrainTrace:
    """Per-step surrogate losses plus periodic full-loss and tau evaluations."""

    surrogate_loss: np.ndarray
    eval_steps: list = field(default_factory=list)
    full_loss: list = field(default_factory=list)
    tau: list = field(default_factory=list)
    failed: bool = False
    reason: str = ""
    clip_events: int = 0
    clip_lock: bool = False
    mean_last: float = math.nan

    def to_csv(self, path):
        """Rows ``step, surrogateLoss, fullLoss, tau``; the last two may be blank."""
        evals = dict(zip(self.eval_steps, zip(self.full_loss, self.tau)))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "surrogateLoss", "fullLoss", "tau"])
            for t, s in enumerate(self.surrogate_loss, 1):
                fl, tau = evals.get(t, ("", ""))
                w.writerow([t, format_float(s),
                            format_float(fl) if fl != "" else "",
                            format_float(tau) if tau != "" else ""])


def train(graph, cfg, state=None, distance_graph=None):
    """Train an embedding of ``graph``; returns ``(state, trace)``.

    Each step draws ``cfg.batch`` positive edges uniformly.  Negatives come
    from the stream after the edge draws, so runs are reproducible from
    ``cfg.seed`` alone.  Training stops early and flags the trace when a
    coordinate becomes non-finite.  ``clip_lock`` is set, without stopping
    the run, when every one of the last ``cfg.window`` steps had to clip some
    point.
    """
    if state is None:
        state = init_state(graph, cfg)
    else:
        state = state.copy()
    nb = _Neighbourhoods(graph)
    if len(nb.edges) == 0:
        raise ValueError("graph has no edges")
    X = state.positions
    r = state.model.radius
    code = rule_code(cfg.rule)
    lr = float(cfg.lr)
    eps = float(cfg.clip_eps)
    rng = make_rng(cfg.seed, 1)
    T = int(cfg.steps)
    surrogate = np.full(T, np.nan)
    clipped = np.zeros(T, dtype=bool)
    trace = TrainTrace(surrogate)
    eval_every = int(cfg.eval_every) or max(T // 10, 1)
    n_edges = len(nb.edges)
    block = 4096
    done = 0
    for t0 in range(0, T, block):
        picks = rng.integers(n_edges, size=(min(block, T - t0), cfg.batch))
        for j, row in enumerate(picks):
            t = t0 + j
            if cfg.batch == 1:
                u, v = nb.edges[row[0]]
                negs = _term_negatives(nb, u, cfg.negatives, rng)
                loss, clips = kernels.softmax_term_step(X, u, v, negs, code, lr, r, eps)
            else:
                loss, clips = _batch_step(state, nb, row, cfg, rng, code)
            surrogate[t] = loss
            clipped[t] = clips > 0
            trace.clip_events += int(clips)
            done = t + 1
            if not (math.isfinite(loss) and np.all(np.isfinite(X[nb.edges[row[0]]]))):
                trace.failed = True
                trace.reason = f"non-finite value at step {t + 1}"
                break
            if done % eval_every == 0 or done == T:
                if np.all(np.isfinite(X)):
                    rec = evaluate(state, graph, distance_graph)
                    trace.eval_steps.append(done)
                    trace.full_loss.append(rec.full_loss)
                    trace.tau.append(rec.tau)
        if trace.failed:
            break
    if not trace.failed and not np.all(np.isfinite(X)):
        trace.failed, trace.reason = True, "non-finite coordinates"
    trace.surrogate_loss = surrogate[:done]
    w = min(cfg.window, done)
    if w:
        trace.mean_last = float(np.mean(trace.surrogate_loss[-w:]))
        trace.clip_lock = done >= cfg.window and bool(clipped[done - cfg.window:done].all())
    return state, trace


def _batch_step(state, nb, rows, cfg, rng, code):
    # Several terms: accumulate gradients first, then move every touched row.
    pairs = nb.edges[rows]
    negs = [_term_negatives(nb, int(u), cfg.negatives, rng) for u, _ in pairs]
    loss, grads = _terms_grad(state, pairs, negs)
    X = state.positions
    clips = 0
    for i, g in grads.items():
        X[i], moved = kernels.step(X[i], g, code, cfg.lr, state.model.radius, cfg.clip_eps)
        clips += moved
    return loss, clips


def export_embedding(state, graph, path):
    """Write ``label<TAB>x1<TAB>...`` lines with 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label, x in zip(graph.nodes, state.positions):
            fh.write("\t".join([label] + [format_float(a) for a in x]) + "\n")


def load_embedding(path, graph, radius=1.0):
    """Read an exported embedding and order its rows like ``graph.nodes``."""
    rows = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            try:
                coords = [float(a) for a in parts[1:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad coordinate ({exc})") from None
            if dim is None:
                dim = len(coords)
            if len(coords) != dim or dim == 0:
                raise ValueError(f"{path}:{lineno}: expected {dim} coordinates")
            rows[parts[0]] = coords
    missing = [lab for lab in graph.nodes if lab not in rows]
    if missing:
        raise ValueError(f"{path}: no coordinates for {missing[:5]}")
    X = np.array([rows[lab] for lab in graph.nodes], dtype=np.float64)
    model = DiskModel(radius, dim)
    for x in X:
        Point(x, model)
    return EmbeddingState(model, X)
