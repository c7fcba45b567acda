"""Pure-Python kernels for the Poincare ball.

This module mirrors the compiled ``_ckernels`` extension function by function
and is selected automatically when the extension is unavailable.  Scalar
kernels work on Python floats internally because that is much faster than
numpy for the small dimensions used here.
"""

import math

import numpy as np

BACKEND = "python"

_SQRT2 = math.sqrt(2.0)
_SPLITTER = 134217729.0  # 2**27 + 1
# Beyond this arc length the arrival point is closer to the ideal boundary
# than any double can resolve, so longer steps are shortened to this length.
MAX_STEP_LENGTH = 300.0


def sinhc(x):
    """Return sinh(x)/x with a Taylor branch near zero."""
    x = float(x)
    if abs(x) < 1e-4:
        x2 = x * x
        return 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    return math.sinh(x) / x


def _two_square(a):
    # Dekker product: hi + lo == a * a exactly.
    hi = a * a
    t = _SPLITTER * a
    ah = t - (t - a)
    al = a - ah
    lo = ((ah * ah - hi) + 2.0 * ah * al) + al * al
    return hi, lo


def _gap(p, r):
    # r**2 - |p|**2 with exact products and Neumaier summation.
    s, e = _two_square(r)
    c = e
    for x in p:
        hi, lo = _two_square(x)
        for t in (-hi, -lo):
            u = s + t
            if abs(s) >= abs(t):
                c += (s - u) + t
            else:
                c += (t - u) + s
            s = u
    return s + c


def boundary_gap(p, r=1.0):
    """Return ``r**2 - |p|**2`` computed without cancellation."""
    return _gap(np.asarray(p, dtype=np.float64).tolist(), float(r))


def _dist(p, q, r):
    hp = _gap(p, r)
    hq = _gap(q, r)
    s = 0.0
    for a, b in zip(p, q):
        s += (a - b) * (a - b)
    x = 2.0 * r * r * s / (hp * hq)
    return math.log1p(x + math.sqrt(x * (x + 2.0)))


def dist(p, q, r=1.0):
    """Hyperbolic distance between two points of the ball of radius ``r``."""
    return _dist(np.asarray(p, dtype=np.float64).tolist(),
                 np.asarray(q, dtype=np.float64).tolist(), float(r))


def _expmap(p, v, r):
    n = len(p)
    vn2 = 0.0
    for x in v:
        vn2 += x * x
    if vn2 == 0.0:
        return list(p)
    h2 = _gap(p, r)
    lam = (2.0 * r / h2) ** 2
    vn = math.sqrt(vn2)
    d = math.sqrt(lam) * vn
    if d > MAX_STEP_LENGTH:
        scale = MAX_STEP_LENGTH / d
        v = [x * scale for x in v]
        vn *= scale
        vn2 = vn * vn
        d = MAX_STEP_LENGTH
    D2 = 0.0
    pv = 0.0
    for a, b in zip(p, v):
        D2 += a * a
        pv += a * b
    # squared norm of the component of p orthogonal to v
    t = pv / vn2
    perp2 = 0.0
    for a, b in zip(p, v):
        w = a - t * b
        perp2 += w * w

    half = 0.5 * d
    sh = math.sinh(half)
    c = 2.0 * sh * sh
    T = h2 / (2.0 * r * _SQRT2 * math.cosh(half)) * sinhc(d)
    F = -lam * pv
    FT = F * T
    FT2 = FT * FT
    cp = c * perp2
    z2 = 2.0 * r * r + c * (r * r + D2) - 2.0 * FT2
    num = -FT * (z2 - 2.0 * cp) - z2 * math.sqrt(z2 - cp + FT2)
    den = 4.0 * cp * FT2 + z2 * z2
    xi = num / den
    rad = 1.0 - 4.0 * cp * xi * xi
    if rad < 0.0:
        rad = 0.0
    # Sign of the unsquared circle equation picks the branch of the root.
    sigma = 2.0 * z2 - 4.0 * cp * (1.0 - 2.0 * FT * xi)
    s = 1.0 if sigma >= 0.0 else -1.0
    yc = 2.0 * h2 * xi * xi / (1.0 + s * math.sqrt(rad))
    coef_v = -lam * (h2 * T * xi - FT * T * yc)
    coef_p = 1.0 + c * yc
    return [coef_p * p[i] + coef_v * v[i] for i in range(n)]


def expmap(p, v, r=1.0):
    """Exponential map at ``p`` applied to the tangent vector ``v``."""
    out = _expmap(np.asarray(p, dtype=np.float64).tolist(),
                  np.asarray(v, dtype=np.float64).tolist(), float(r))
    return np.array(out, dtype=np.float64)


def expmap_batch(P, V, r=1.0):
    """Row-wise exponential map for arrays of shape (m, n)."""
    P = np.asarray(P, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    r = float(r)
    out = np.empty_like(P)
    for i, (p, v) in enumerate(zip(P.tolist(), V.tolist())):
        out[i] = _expmap(p, v, r)
    return out


def dist_batch(P, Q, r=1.0):
    """Row-wise hyperbolic distance for arrays of shape (m, n)."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    r = float(r)
    return np.array([_dist(p, q, r) for p, q in zip(P.tolist(), Q.tolist())],
                    dtype=np.float64)


def _dist_grad(p, q, r):
    # Returns d(p, q) and its Euclidean gradient with respect to p.
    hp = _gap(p, r)
    hq = _gap(q, r)
    diff = [a - b for a, b in zip(p, q)]
    s = 0.0
    for w in diff:
        s += w * w
    if s == 0.0:
        return 0.0, [0.0] * len(p)
    x = 2.0 * r * r * s / (hp * hq)
    d = math.log1p(x + math.sqrt(x * (x + 2.0)))
    k = 2.0 * _SQRT2 * r / math.sqrt(hp * hq * s * (x + 2.0))
    m = s / hp
    return d, [k * (w + m * a) for w, a in zip(diff, p)]


def dist_grad(p, q, r=1.0):
    """Distance and its Euclidean gradient in the first argument.

    The gradient is set to zero when the points coincide.
    """
    d, g = _dist_grad(np.asarray(p, dtype=np.float64).tolist(),
                      np.asarray(q, dtype=np.float64).tolist(), float(r))
    return d, np.array(g, dtype=np.float64)


def sqdist_grad(p, q, r=1.0):
    """Squared distance and its Euclidean gradient in the first argument."""
    d, g = _dist_grad(np.asarray(p, dtype=np.float64).tolist(),
                      np.asarray(q, dtype=np.float64).tolist(), float(r))
    return d * d, np.array([2.0 * d * x for x in g], dtype=np.float64)


def _project(x, r, eps):
    # Pull x back inside the ball of radius r * (1 - eps).
    lim = r * (1.0 - eps)
    n2 = 0.0
    for a in x:
        n2 += a * a
    nrm = math.sqrt(n2)
    if nrm >= lim:
        scale = lim / nrm
        return [a * scale for a in x], True
    return x, False


def project(x, r=1.0, eps=1e-10):
    """Radially project ``x`` into the closed ball of radius ``r(1-eps)``.

    Returns the projected array and a flag telling whether it moved.
    """
    y, moved = _project(np.asarray(x, dtype=np.float64).tolist(), float(r), float(eps))
    return np.array(y, dtype=np.float64), moved


def _update(x, g, rule, lr, r, eps):
    # One update of a single row from its Euclidean gradient g.
    if rule == 0:
        y = [a - lr * b for a, b in zip(x, g)]
    else:
        h2 = _gap(x, r)
        inv_lam = (h2 / (2.0 * r)) ** 2
        if rule == 1:
            y = [a - lr * inv_lam * b for a, b in zip(x, g)]
        else:
            y = _expmap(x, [-lr * inv_lam * b for b in g], r)
    return _project(y, r, eps)


def step(x, g, rule, lr, r=1.0, eps=1e-10):
    """Apply one update to ``x`` given its Euclidean gradient ``g``.

    ``rule`` is 0 for Euclidean, 1 for natural and 2 for geodesic updates.
    Returns the new point and whether it had to be projected.
    """
    y, moved = _update(np.asarray(x, dtype=np.float64).tolist(),
                       np.asarray(g, dtype=np.float64).tolist(),
                       int(rule), float(lr), float(r), float(eps))
    return np.array(y, dtype=np.float64), moved


def _softmax_term(X, u, v, negs, r):
    # Loss d(u,v) + log sum_w exp(-d(u,w)) and gradients for each row.
    xu = X[u]
    d_uv, g_u = _dist_grad(xu, X[v], r)
    _, g_v = _dist_grad(X[v], xu, r)
    m = len(negs)
    loss = d_uv
    g_negs = []
    if m:
        dists = []
        grads_u = []
        for w in negs:
            dw, gw_u = _dist_grad(xu, X[w], r)
            _, gw = _dist_grad(X[w], xu, r)
            dists.append(dw)
            grads_u.append(gw_u)
            g_negs.append(gw)
        dmin = min(dists)
        ex = [math.exp(dmin - dw) for dw in dists]
        tot = 0.0
        for e in ex:
            tot += e
        loss += -dmin + math.log(tot)
        for k in range(m):
            wk = ex[k] / tot
            gk = grads_u[k]
            for i in range(len(g_u)):
                g_u[i] -= wk * gk[i]
            g_negs[k] = [-wk * a for a in g_negs[k]]
    return loss, g_u, g_v, g_negs


def softmax_term_grad(X, u, v, negs, r=1.0):
    """Loss of one edge term and Euclidean gradients of the touched rows.

    Returns ``(loss, grad_u, grad_v, grad_negs)`` where ``grad_negs`` has one
    row per entry of ``negs``.
    """
    X = np.asarray(X, dtype=np.float64)
    negs = [int(w) for w in negs]
    rows = {int(u): X[int(u)].tolist(), int(v): X[int(v)].tolist()}
    for w in negs:
        rows[w] = X[w].tolist()
    loss, gu, gv, gn = _softmax_term(rows, int(u), int(v), negs, float(r))
    n = X.shape[1]
    return (loss, np.array(gu, dtype=np.float64), np.array(gv, dtype=np.float64),
            np.array(gn, dtype=np.float64).reshape(len(negs), n))


def softmax_term_step(X, u, v, negs, rule, lr, r=1.0, eps=1e-10):
    """Update ``X`` in place with one edge term; return (loss, clip count)."""
    negs = [int(w) for w in negs]
    u = int(u)
    v = int(v)
    rows = {u: X[u].tolist(), v: X[v].tolist()}
    for w in negs:
        rows[w] = X[w].tolist()
    r = float(r)
    lr = float(lr)
    eps = float(eps)
    rule = int(rule)
    loss, gu, gv, gn = _softmax_term(rows, u, v, negs, r)
    clips = 0
    for idx, g in [(u, gu), (v, gv)] + list(zip(negs, gn)):
        y, moved = _update(rows[idx], g, rule, lr, r, eps)
        X[idx] = y
        clips += moved
    return loss, clips
