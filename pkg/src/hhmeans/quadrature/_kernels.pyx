# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled nested Gauss-Kronrod kernel for line functionals.

Same algorithm as ``_engine.py``; the integrand is ``f(T @ P)`` with ``f``
selected by an integer code, so the whole recursion runs without touching
Python objects.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, pow, fabs, isfinite, fmax, fmin
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    NPTS = 15
    GRADED_CUTS = 5

cdef double GRADED_Q = 64.0

cdef enum:
    F_IDENTITY = 0
    F_EXP = 1
    F_SQUARE = 2
    F_NEGLOG = 3
    F_LOG = 4
    F_INV = 5
    F_LSE = 6
    F_QUADFORM = 7

cdef struct Ctx:
    int n
    int m
    int d
    int fcode
    const double* P
    const double* Q
    const double* levels
    const double* xgk
    const double* wgk
    const double* wg
    long evals
    long max_evals
    int exhausted
    int max_intervals
    int bad
    double eps
    double* xbuf      # (n + 1) * d partial line sums, one slot per axis
    double* point     # d
    double* badpoint  # d


cdef inline double _neumaier(const double* v, int count, int stride) noexcept nogil:
    cdef double s = 0.0, c = 0.0, t, x
    cdef int i
    for i in range(count):
        x = v[i * stride]
        t = s + x
        if fabs(s) >= fabs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


cdef double _f(Ctx* c, const double* x) noexcept nogil:
    cdef int i, j
    cdef double mx, acc
    if c.fcode == F_IDENTITY:
        return x[0]
    elif c.fcode == F_EXP:
        return exp(x[0])
    elif c.fcode == F_SQUARE:
        return x[0] * x[0]
    elif c.fcode == F_NEGLOG:
        return -log(x[0])
    elif c.fcode == F_LOG:
        return log(x[0])
    elif c.fcode == F_INV:
        return 1.0 / x[0]
    elif c.fcode == F_LSE:
        mx = x[0]
        for i in range(1, c.d):
            if x[i] > mx:
                mx = x[i]
        acc = 0.0
        for i in range(c.d):
            acc += exp(x[i] - mx)
        return mx + log(acc)
    else:
        acc = 0.0
        for i in range(c.d):
            for j in range(c.d):
                acc += x[i] * c.Q[i * c.d + j] * x[j]
        return acc


cdef int _interval(Ctx* c, int k, int piece, double lo, double hi, double r,
                   double abs_tol, double rel_tol, double* out) noexcept nogil:
    """out = [resk, err_rule, err_inner, resabs] for one GK15 panel."""
    cdef const double* row = c.levels + 9 * k
    cdef double a = row[0], b = row[1], norm = row[2]
    cdef double qa = row[3], ma = row[4], qb = row[6], mb = row[7]
    cdef double hl = 0.5 * (hi - lo), ctr = 0.5 * (lo + hi)
    cdef double g[NPTS]
    cdef double ev[NPTS]
    cdef double u, s, oms, jac, fv, iv, ie
    cdef double resk = 0.0, resg = 0.0, resasc = 0.0, resabs = 0.0, reskh, e
    cdef double inner = 0.0
    cdef int j, i, rc
    cdef int d = c.d
    cdef double* xk = c.xbuf + k * d
    cdef double* xn = c.xbuf + (k + 1) * d
    cdef const double* pk = c.P + k * d
    cdef const double* plast = c.P + (c.m - 1) * d
    for j in range(NPTS):
        u = ctr + hl * c.xgk[j]
        if piece == 0:
            s = pow(u, qa)
            oms = 1.0 - s
            jac = norm * qa * pow(u, ma - 1.0) * pow(oms, b - 1.0)
        else:
            oms = pow(u, qb)
            s = 1.0 - oms
            jac = norm * qb * pow(u, mb - 1.0) * pow(s, a - 1.0)
        if k == c.n - 1:
            for i in range(d):
                c.point[i] = xk[i] + r * s * pk[i] + r * oms * plast[i]
            fv = _f(c, c.point)
            c.evals += 1
            if not isfinite(fv):
                c.bad = 1
                for i in range(d):
                    c.badpoint[i] = c.point[i]
                return -1
            ev[j] = 0.0
        else:
            for i in range(d):
                xn[i] = xk[i] + r * s * pk[i]
            rc = _level(c, k + 1, r * oms, 0.5 * abs_tol, 0.5 * rel_tol, &iv, &ie)
            if rc != 0:
                return rc
            fv = iv
            ev[j] = jac * ie
        g[j] = jac * fv
    for j in range(NPTS):
        resk += c.wgk[j] * g[j]
        resg += c.wg[j] * g[j]
        inner += c.wgk[j] * ev[j]
    reskh = 0.5 * resk
    for j in range(NPTS):
        resasc += c.wgk[j] * fabs(g[j] - reskh)
        resabs += c.wgk[j] * fabs(g[j])
    resasc *= hl
    resabs *= hl
    e = fabs(resk - resg) * hl
    if resasc != 0.0 and e != 0.0:
        e = resasc * fmin(1.0, pow(200.0 * e / resasc, 1.5))
    if resabs > 2.2250738585072014e-308 / (50.0 * c.eps):
        e = fmax(50.0 * c.eps * resabs, e)
    out[0] = resk * hl
    out[1] = e
    out[2] = hl * inner
    out[3] = resabs
    return 0


cdef int _level(Ctx* c, int k, double r, double abs_tol, double rel_tol,
                double* val, double* err) noexcept nogil:
    cdef int cap = c.max_intervals
    cdef int* piece = <int*> malloc(cap * sizeof(int))
    cdef double* lo = <double*> malloc(cap * sizeof(double))
    cdef double* hi = <double*> malloc(cap * sizeof(double))
    cdef double* data = <double*> malloc(4 * cap * sizeof(double))
    cdef const double* row = c.levels + 9 * k
    cdef int count = 0, i, j, p, worst, rc = 0
    cdef double total, erule, einner, rabs, tol, mid, wmax, q, umax, edge, cut
    if piece == NULL or lo == NULL or hi == NULL or data == NULL:
        free(piece); free(lo); free(hi); free(data)
        return -2
    # same initial partition as _engine.initial_cuts
    count = 0
    for p in range(2):
        q = row[3] if p == 0 else row[6]
        umax = row[5] if p == 0 else row[8]
        if q < GRADED_Q:
            piece[count] = p; lo[count] = 0.0; hi[count] = umax
            count += 1
        else:
            edge = 0.0
            for j in range(GRADED_CUTS, 0, -1):
                cut = pow(umax, pow(2.0, j))
                piece[count] = p; lo[count] = edge; hi[count] = cut
                edge = cut
                count += 1
            piece[count] = p; lo[count] = edge; hi[count] = umax
            count += 1
    for i in range(count):
        if rc == 0:
            rc = _interval(c, k, piece[i], lo[i], hi[i], r, abs_tol, rel_tol, data + 4 * i)
    while rc == 0:
        total = _neumaier(data, count, 4)
        erule = _neumaier(data + 1, count, 4)
        einner = _neumaier(data + 2, count, 4)
        rabs = _neumaier(data + 3, count, 4)
        tol = fmax(fmax(abs_tol, rel_tol * fabs(total)), 100.0 * c.eps * rabs)
        if erule + einner <= tol or erule <= 0.5 * tol:
            break
        if c.evals >= c.max_evals:
            c.exhausted = 1
        if c.exhausted or count >= cap:
            break
        worst = 0
        wmax = data[1]
        for i in range(1, count):
            if data[4 * i + 1] > wmax:
                wmax = data[4 * i + 1]
                worst = i
        mid = 0.5 * (lo[worst] + hi[worst])
        piece[count] = piece[worst]
        lo[count] = mid
        hi[count] = hi[worst]
        hi[worst] = mid
        rc = _interval(c, k, piece[worst], lo[worst], hi[worst], r,
                       abs_tol, rel_tol, data + 4 * worst)
        if rc == 0:
            rc = _interval(c, k, piece[count], lo[count], hi[count], r,
                           abs_tol, rel_tol, data + 4 * count)
        count += 1
    if rc == 0:
        val[0] = total
        err[0] = erule + einner
    free(piece); free(lo); free(hi); free(data)
    return rc


def line_integral(levels, nodes, int fcode, qmat, double abs_tol, double rel_tol,
                  long max_evals, int max_intervals, xgk, wgk, wg, double eps):
    """Integrate ``f(T @ nodes)`` against the Dirichlet law encoded by ``levels``.

    Returns ``(value, error, evals, exhausted)``, or ``("nonfinite", x)`` with
    the offending line argument ``x`` when ``f`` is not finite.
    """
    cdef cnp.ndarray[cnp.double_t, ndim=2, mode="c"] lv = np.ascontiguousarray(levels, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=2, mode="c"] pp = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1, mode="c"] gx = np.ascontiguousarray(xgk, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1, mode="c"] gk = np.ascontiguousarray(wgk, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1, mode="c"] gg = np.ascontiguousarray(wg, dtype=np.float64)
    cdef int n = lv.shape[0]
    cdef int d = pp.shape[1]
    cdef cnp.ndarray[cnp.double_t, ndim=2, mode="c"] qq
    if qmat is None:
        qq = np.zeros((d, d))
    else:
        qq = np.ascontiguousarray(qmat, dtype=np.float64)
    cdef cnp.ndarray[cnp.double_t, ndim=1, mode="c"] xbuf = np.zeros((n + 1) * d)
    cdef cnp.ndarray[cnp.double_t, ndim=1, mode="c"] point = np.zeros(d)
    cdef cnp.ndarray[cnp.double_t, ndim=1, mode="c"] badpoint = np.zeros(d)
    cdef Ctx c
    cdef double val = 0.0, err = 0.0
    cdef int rc
    if pp.shape[0] != n + 1:
        raise ValueError("nodes must have one row per barycentric coordinate")
    c.n = n
    c.m = n + 1
    c.d = d
    c.fcode = fcode
    c.P = &pp[0, 0]
    c.Q = &qq[0, 0]
    c.levels = &lv[0, 0]
    c.xgk = &gx[0]
    c.wgk = &gk[0]
    c.wg = &gg[0]
    c.evals = 0
    c.max_evals = max_evals
    c.exhausted = 0
    c.max_intervals = max_intervals
    c.bad = 0
    c.eps = eps
    c.xbuf = &xbuf[0]
    c.point = &point[0]
    c.badpoint = &badpoint[0]
    with nogil:
        rc = _level(&c, 0, 1.0, abs_tol, rel_tol, &val, &err)
    if rc == -1:
        return ("nonfinite", badpoint.copy())
    if rc == -2:
        raise MemoryError("quadrature workspace allocation failed")
    return (val, err, c.evals, bool(c.exhausted))
