# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the Poincare ball.

Same API and arithmetic as ``_pykernels``; see that module for docs.
"""

import numpy as np

from libc.math cimport sqrt, sinh, cosh, log, log1p, exp, fabs

BACKEND = "cython"

cdef double _SQRT2 = sqrt(2.0)
cdef double _SPLITTER = 134217729.0
MAX_STEP_LENGTH = 300.0
cdef double _MAX_D = 300.0


cdef inline double _sinhc(double x) noexcept nogil:
    cdef double x2
    if fabs(x) < 1e-4:
        x2 = x * x
        return 1.0 + x2 / 6.0 + x2 * x2 / 120.0
    return sinh(x) / x


def sinhc(double x):
    return _sinhc(x)


cdef inline void _two_square(double a, double* hi, double* lo) noexcept nogil:
    cdef double t, ah, al
    hi[0] = a * a
    t = _SPLITTER * a
    ah = t - (t - a)
    al = a - ah
    lo[0] = ((ah * ah - hi[0]) + 2.0 * ah * al) + al * al


cdef inline void _neumaier(double* s, double* c, double t) noexcept nogil:
    cdef double u = s[0] + t
    if fabs(s[0]) >= fabs(t):
        c[0] += (s[0] - u) + t
    else:
        c[0] += (t - u) + s[0]
    s[0] = u


cdef double _gap(const double* p, Py_ssize_t n, double r) noexcept nogil:
    cdef double s, c, hi, lo
    cdef Py_ssize_t i
    _two_square(r, &s, &c)
    for i in range(n):
        _two_square(p[i], &hi, &lo)
        _neumaier(&s, &c, -hi)
        _neumaier(&s, &c, -lo)
    return s + c


def boundary_gap(p, double r=1.0):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    return _gap(&pv[0], pv.shape[0], r)


cdef double _dist(const double* p, const double* q, Py_ssize_t n, double r) noexcept nogil:
    cdef double hp = _gap(p, n, r)
    cdef double hq = _gap(q, n, r)
    cdef double s = 0.0, w, x
    cdef Py_ssize_t i
    for i in range(n):
        w = p[i] - q[i]
        s += w * w
    x = 2.0 * r * r * s / (hp * hq)
    return log1p(x + sqrt(x * (x + 2.0)))


def dist(p, q, double r=1.0):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    return _dist(&pv[0], &qv[0], pv.shape[0], r)


cdef void _expmap(const double* p, const double* v0, Py_ssize_t n, double r,
                  double* out) noexcept nogil:
    cdef double vn2 = 0.0, h2, lam, vn, d, scale, D2, pv, t, perp2, w
    cdef double half, sh, c, T, F, FT, FT2, cp, z2, num, den, xi, rad, sigma
    cdef double s, yc, coef_v, coef_p
    cdef double vs = 1.0
    cdef Py_ssize_t i
    for i in range(n):
        vn2 += v0[i] * v0[i]
    if vn2 == 0.0:
        for i in range(n):
            out[i] = p[i]
        return
    h2 = _gap(p, n, r)
    lam = (2.0 * r / h2) ** 2
    vn = sqrt(vn2)
    d = sqrt(lam) * vn
    if d > _MAX_D:
        vs = _MAX_D / d
        vn = vn * vs
        vn2 = vn * vn
        d = _MAX_D
    D2 = 0.0
    pv = 0.0
    for i in range(n):
        D2 += p[i] * p[i]
        pv += p[i] * (v0[i] * vs)
    t = pv / vn2
    perp2 = 0.0
    for i in range(n):
        w = p[i] - t * (v0[i] * vs)
        perp2 += w * w

    half = 0.5 * d
    sh = sinh(half)
    c = 2.0 * sh * sh
    T = h2 / (2.0 * r * _SQRT2 * cosh(half)) * _sinhc(d)
    F = -lam * pv
    FT = F * T
    FT2 = FT * FT
    cp = c * perp2
    z2 = 2.0 * r * r + c * (r * r + D2) - 2.0 * FT2
    num = -FT * (z2 - 2.0 * cp) - z2 * sqrt(z2 - cp + FT2)
    den = 4.0 * cp * FT2 + z2 * z2
    xi = num / den
    rad = 1.0 - 4.0 * cp * xi * xi
    if rad < 0.0:
        rad = 0.0
    sigma = 2.0 * z2 - 4.0 * cp * (1.0 - 2.0 * FT * xi)
    s = 1.0 if sigma >= 0.0 else -1.0
    yc = 2.0 * h2 * xi * xi / (1.0 + s * sqrt(rad))
    coef_v = -lam * (h2 * T * xi - FT * T * yc)
    coef_p = 1.0 + c * yc
    for i in range(n):
        out[i] = coef_p * p[i] + coef_v * (v0[i] * vs)


def expmap(p, v, double r=1.0):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty(pv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    _expmap(&pv[0], &vv[0], pv.shape[0], r, &ov[0])
    return out


def expmap_batch(P, V, double r=1.0):
    cdef const double[:, ::1] pv = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[:, ::1] vv = np.ascontiguousarray(V, dtype=np.float64)
    out = np.empty((pv.shape[0], pv.shape[1]), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i
    if pv.shape[1] == 0:
        return out
    with nogil:
        for i in range(pv.shape[0]):
            _expmap(&pv[i, 0], &vv[i, 0], pv.shape[1], r, &ov[i, 0])
    return out


def dist_batch(P, Q, double r=1.0):
    cdef const double[:, ::1] pv = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[:, ::1] qv = np.ascontiguousarray(Q, dtype=np.float64)
    out = np.empty(pv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    if pv.shape[1] == 0:
        return out
    with nogil:
        for i in range(pv.shape[0]):
            ov[i] = _dist(&pv[i, 0], &qv[i, 0], pv.shape[1], r)
    return out


cdef double _dist_grad(const double* p, const double* q, Py_ssize_t n, double r,
                       double* g) noexcept nogil:
    cdef double hp = _gap(p, n, r)
    cdef double hq = _gap(q, n, r)
    cdef double s = 0.0, w, x, d, k, m
    cdef Py_ssize_t i
    for i in range(n):
        w = p[i] - q[i]
        s += w * w
    if s == 0.0:
        for i in range(n):
            g[i] = 0.0
        return 0.0
    x = 2.0 * r * r * s / (hp * hq)
    d = log1p(x + sqrt(x * (x + 2.0)))
    k = 2.0 * _SQRT2 * r / sqrt(hp * hq * s * (x + 2.0))
    m = s / hp
    for i in range(n):
        g[i] = k * ((p[i] - q[i]) + m * p[i])
    return d


def dist_grad(p, q, double r=1.0):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    g = np.empty(pv.shape[0], dtype=np.float64)
    cdef double[::1] gv = g
    d = _dist_grad(&pv[0], &qv[0], pv.shape[0], r, &gv[0])
    return d, g


def sqdist_grad(p, q, double r=1.0):
    d, g = dist_grad(p, q, r)
    return d * d, 2.0 * d * g


cdef bint _project(double* x, Py_ssize_t n, double r, double eps) noexcept nogil:
    cdef double lim = r * (1.0 - eps)
    cdef double n2 = 0.0, nrm, scale
    cdef Py_ssize_t i
    for i in range(n):
        n2 += x[i] * x[i]
    nrm = sqrt(n2)
    if nrm >= lim:
        scale = lim / nrm
        for i in range(n):
            x[i] = x[i] * scale
        return True
    return False


def project(x, double r=1.0, double eps=1e-10):
    y = np.array(x, dtype=np.float64)
    cdef double[::1] yv = y
    moved = _project(&yv[0], yv.shape[0], r, eps)
    return y, bool(moved)


cdef bint _update(double* x, const double* g, Py_ssize_t n, int rule, double lr,
                  double r, double eps, double* buf) noexcept nogil:
    # buf must hold 2 * n doubles; the result is written back into x.
    cdef double h2, inv_lam
    cdef Py_ssize_t i
    if rule == 0:
        for i in range(n):
            x[i] = x[i] - lr * g[i]
    else:
        h2 = _gap(x, n, r)
        inv_lam = (h2 / (2.0 * r)) ** 2
        if rule == 1:
            for i in range(n):
                x[i] = x[i] - lr * inv_lam * g[i]
        else:
            for i in range(n):
                buf[i] = -lr * inv_lam * g[i]
            _expmap(x, buf, n, r, buf + n)
            for i in range(n):
                x[i] = buf[n + i]
    return _project(x, n, r, eps)


def step(x, g, int rule, double lr, double r=1.0, double eps=1e-10):
    y = np.array(x, dtype=np.float64)
    cdef double[::1] yv = y
    cdef const double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    buf = np.empty(2 * yv.shape[0], dtype=np.float64)
    cdef double[::1] bv = buf
    moved = _update(&yv[0], &gv[0], yv.shape[0], rule, lr, r, eps, &bv[0])
    return y, bool(moved)


cdef double _softmax_term(const double[:, ::1] X, Py_ssize_t u, Py_ssize_t v,
                          const Py_ssize_t[::1] negs, double r,
                          double* gu, double* gv, double* gn, double* dists,
                          double* tmp) noexcept nogil:
    # gn holds one row of length n per negative.
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t m = negs.shape[0]
    cdef Py_ssize_t k, i
    cdef double loss, dmin, tot, wk
    loss = _dist_grad(&X[u, 0], &X[v, 0], n, r, gu)
    _dist_grad(&X[v, 0], &X[u, 0], n, r, gv)
    if m == 0:
        return loss
    dmin = 1e308
    for k in range(m):
        dists[k] = _dist_grad(&X[negs[k], 0], &X[u, 0], n, r, gn + k * n)
        if dists[k] < dmin:
            dmin = dists[k]
    tot = 0.0
    for k in range(m):
        dists[k] = exp(dmin - dists[k])
        tot += dists[k]
    loss += -dmin + log(tot)
    for k in range(m):
        wk = dists[k] / tot
        _dist_grad(&X[u, 0], &X[negs[k], 0], n, r, tmp)
        for i in range(n):
            gu[i] -= wk * tmp[i]
            gn[k * n + i] = -wk * gn[k * n + i]
    return loss


def softmax_term_grad(X, Py_ssize_t u, Py_ssize_t v, negs, double r=1.0):
    cdef const double[:, ::1] xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const Py_ssize_t[::1] nv = np.ascontiguousarray(negs, dtype=np.intp)
    cdef Py_ssize_t n = xv.shape[1]
    cdef Py_ssize_t m = nv.shape[0]
    gu = np.empty(n, dtype=np.float64)
    gv = np.empty(n, dtype=np.float64)
    gn = np.zeros((m, n), dtype=np.float64)
    work = np.empty(m + n + 1, dtype=np.float64)
    cdef double[::1] guv = gu
    cdef double[::1] gvv = gv
    cdef double[:, ::1] gnv = gn
    cdef double[::1] wv = work
    cdef double* gnp = &gnv[0, 0] if m > 0 else NULL
    loss = _softmax_term(xv, u, v, nv, r, &guv[0], &gvv[0], gnp, &wv[0], &wv[m])
    return loss, gu, gv, gn


def softmax_term_step(double[:, ::1] X, Py_ssize_t u, Py_ssize_t v, negs, int rule,
                      double lr, double r=1.0, double eps=1e-10):
    cdef const Py_ssize_t[::1] nv = np.ascontiguousarray(negs, dtype=np.intp)
    cdef Py_ssize_t n = X.shape[1]
    cdef Py_ssize_t m = nv.shape[0]
    work = np.zeros((m + 2) * n + m + 3 * n + 1, dtype=np.float64)
    cdef double[::1] wv = work
    cdef double* gu = &wv[0]
    cdef double* gv = gu + n
    cdef double* gn = gv + n
    cdef double* dists = gn + m * n
    cdef double* tmp = dists + m
    cdef double* buf = tmp + n
    cdef double loss
    cdef int clips = 0
    cdef Py_ssize_t k
    with nogil:
        loss = _softmax_term(X, u, v, nv, r, gu, gv, gn, dists, tmp)
        clips += _update(&X[u, 0], gu, n, rule, lr, r, eps, buf)
        clips += _update(&X[v, 0], gv, n, rule, lr, r, eps, buf)
        for k in range(m):
            clips += _update(&X[nv[k], 0], gn + k * n, n, rule, lr, r, eps, buf)
    return loss, clips
