"""Pure-Python nested adaptive quadrature against a Dirichlet law.

The simplex integral is written in stick-breaking coordinates: for a
Dirichlet(c_1..c_m) law, ``s_k ~ Beta(c_k, c_{k+1} + ... + c_m)``
independently, ``t_k = r_k s_k`` and ``r_{k+1} = r_k (1 - s_k)`` with
``r_0 = 1``.  Each of the ``n = m - 1`` axes is a one-dimensional integral
over [0, 1] against a Beta weight, which is split at 1/2.  On each half the
power substitution ``s = u ** (m / a)`` with integer ``m`` (mirrored for
``1 - s``) turns the endpoint factor ``s ** (a - 1)`` into the polynomial
``u ** (m - 1)``; for ``a < 1`` this removes the integrable singularity
entirely.

Every axis runs a globally adaptive Gauss-Kronrod 7/15 scheme with the
QUADPACK error heuristic.  Inner axes receive half the tolerance of their
parent and their error bounds are integrated into the parent's bound.

The compiled kernel in ``_kernels.pyx`` implements the same algorithm for
line functionals ``f(T @ P)``; :func:`line_integral` here is its fallback.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NonFiniteIntegrand
from ..specfun import log_gamma
from ._rules import EPS, GAUSS, KRONROD, NODES

MAX_INTERVALS = 400

# A piece whose substitution power q = m / a is large packs all of the
# structure in s into a thin layer below u_max, where GK15 has no nodes and the
# Kronrod-Gauss difference misses it.  Such pieces start from a partition
# graded at s = 2**-(2**j), j = 1..GRADED_CUTS, i.e. u = u_max**(2**j).
GRADED_Q = 64.0
GRADED_CUTS = 5

# line functionals shared with the compiled kernel
F_IDENTITY, F_EXP, F_SQUARE, F_NEGLOG, F_LOG, F_INV, F_LSE, F_QUADFORM = range(8)
F_CODES = {
    "identity": F_IDENTITY,
    "exp": F_EXP,
    "square": F_SQUARE,
    "neglog": F_NEGLOG,
    "log": F_LOG,
    "inverse": F_INV,
    "lse": F_LSE,
    "quadform": F_QUADFORM,
}


def _snap(a: float) -> float:
    r = round(a)
    return float(r) if r >= 1 and abs(a - r) <= 1e-12 * r else a


def _weight_power(a: float) -> float:
    # s = u**(m/a) turns s**(a-1) ds into a polynomial weight in u; taking
    # m = ceil(2a) rather than ceil(a) keeps the integrand smooth enough near
    # u = 0 that GK15 needs few subdivisions (measured ~4x fewer per axis)
    if a == round(a):
        return a
    return float(math.ceil(2.0 * a))


def initial_cuts(q: float, u_max: float) -> list[tuple[float, float]]:
    if q < GRADED_Q:
        return [(0.0, u_max)]
    pts = [0.0] + [u_max ** (2.0 ** j) for j in range(GRADED_CUTS, 0, -1)] + [u_max]
    return list(zip(pts[:-1], pts[1:]))


def level_table(conc) -> np.ndarray:
    """Per-axis constants, one row per axis.

    Columns: a, b, norm, q_a, m_a, u_max_left, q_b, m_b, u_max_right.
    """
    conc = [float(c) for c in conc]
    n = len(conc) - 1
    rows = np.empty((n, 9))
    for k in range(n):
        a = _snap(conc[k])
        b = _snap(math.fsum(conc[k + 1:]))
        norm = math.exp(log_gamma(a + b) - log_gamma(a) - log_gamma(b))
        ma = _weight_power(a)
        mb = _weight_power(b)
        qa = ma / a
        qb = mb / b
        rows[k] = (a, b, norm, qa, ma, 0.5 ** (1.0 / qa), qb, mb, 0.5 ** (1.0 / qb))
    return rows


def _line_eval(x: np.ndarray, fcode: int, qmat) -> np.ndarray:
    """Apply the line functional to points ``x`` of shape (k, d)."""
    if fcode == F_IDENTITY:
        return x[:, 0]
    if fcode == F_EXP:
        return np.exp(x[:, 0])
    if fcode == F_SQUARE:
        return x[:, 0] * x[:, 0]
    if fcode == F_NEGLOG:
        with np.errstate(divide="ignore", invalid="ignore"):
            return -np.log(x[:, 0])
    if fcode == F_LOG:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(x[:, 0])
    if fcode == F_INV:
        with np.errstate(divide="ignore"):
            return 1.0 / x[:, 0]
    if fcode == F_LSE:
        mx = x.max(axis=1)
        return mx + np.log(np.exp(x - mx[:, None]).sum(axis=1))
    if fcode == F_QUADFORM:
        return np.einsum("ki,ij,kj->k", x, qmat, x)
    raise ValueError(f"unknown line functional code {fcode}")


class _Run:
    def __init__(self, levels, integrand, max_evals):
        self.levels = levels
        self.n = levels.shape[0]
        self.m = self.n + 1
        self.integrand = integrand
        self.max_evals = max_evals
        self.evals = 0
        self.exhausted = False

    def _nodes(self, k, piece, lo, hi):
        a, b, norm, qa, ma, _, qb, mb, _ = self.levels[k]
        hl = 0.5 * (hi - lo)
        u = 0.5 * (lo + hi) + hl * NODES
        if piece == 0:
            s = u ** qa
            oms = 1.0 - s
            jac = norm * qa * u ** (ma - 1.0) * oms ** (b - 1.0)
        else:
            oms = u ** qb
            s = 1.0 - oms
            jac = norm * qb * u ** (mb - 1.0) * s ** (a - 1.0)
        return s, oms, jac, hl

    def interval(self, k, piece, lo, hi, prefix, r, abs_tol, rel_tol):
        s, oms, jac, hl = self._nodes(k, piece, lo, hi)
        if k == self.n - 1:
            pts = np.empty((15, self.m))
            pts[:, :k] = prefix
            pts[:, k] = r * s
            pts[:, self.m - 1] = r * oms
            fv = np.asarray(self.integrand(pts), dtype=float)
            self.evals += 15
            if not np.all(np.isfinite(fv)):
                bad = int(np.flatnonzero(~np.isfinite(fv))[0])
                raise NonFiniteIntegrand(
                    f"integrand is not finite at {pts[bad].tolist()}", pts[bad].copy()
                )
            inner = 0.0
        else:
            fv = np.empty(15)
            ev = np.empty(15)
            for j in range(15):
                sub = np.empty(k + 1)
                sub[:k] = prefix
                sub[k] = r * s[j]
                fv[j], ev[j] = self.level(
                    k + 1, sub, r * oms[j], 0.5 * abs_tol, 0.5 * rel_tol
                )
            inner = hl * float(np.dot(KRONROD, jac * ev))
        g = jac * fv
        resk = float(np.dot(KRONROD, g))
        resg = float(np.dot(GAUSS, g))
        reskh = 0.5 * resk
        resasc = float(np.dot(KRONROD, np.abs(g - reskh))) * hl
        resabs = float(np.dot(KRONROD, np.abs(g))) * hl
        err = abs(resk - resg) * hl
        if resasc != 0.0 and err != 0.0:
            err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
        if resabs > 2.2250738585072014e-308 / (50.0 * EPS):
            err = max(50.0 * EPS * resabs, err)
        return [piece, lo, hi, resk * hl, err, inner, resabs]

    def level(self, k, prefix, r, abs_tol, rel_tol):
        row = self.levels[k]
        ivs = [
            self.interval(k, piece, lo, hi, prefix, r, abs_tol, rel_tol)
            for piece, q, u_max in ((0, row[3], row[5]), (1, row[6], row[8]))
            for lo, hi in initial_cuts(q, u_max)
        ]
        while True:
            total = math.fsum(iv[3] for iv in ivs)
            erule = math.fsum(iv[4] for iv in ivs)
            einner = math.fsum(iv[5] for iv in ivs)
            rabs = math.fsum(iv[6] for iv in ivs)
            tol = max(abs_tol, rel_tol * abs(total), 100.0 * EPS * rabs)
            if erule + einner <= tol or erule <= 0.5 * tol:
                break
            if self.evals >= self.max_evals:
                self.exhausted = True
            if self.exhausted or len(ivs) >= MAX_INTERVALS:
                break
            worst = max(range(len(ivs)), key=lambda i: ivs[i][4])
            piece, lo, hi = ivs[worst][0], ivs[worst][1], ivs[worst][2]
            mid = 0.5 * (lo + hi)
            ivs[worst] = self.interval(k, piece, lo, mid, prefix, r, abs_tol, rel_tol)
            ivs.append(self.interval(k, piece, mid, hi, prefix, r, abs_tol, rel_tol))
        return total, erule + einner


def axis_order(conc) -> list[int]:
    """Coordinates by decreasing shape, ties in index order.

    A large shape taken first leaves every later axis a Beta law with small
    parameters, so only one axis of the nest has a narrow peak to resolve.
    """
    return sorted(range(len(conc)), key=lambda i: -float(conc[i]))


def dirichlet_integral(conc, integrand, abs_tol, rel_tol, max_evals):
    """Integrate ``integrand(T)`` against Dirichlet(conc).

    ``integrand`` maps a batch of full barycentric points of shape
    ``(k, m)`` to ``k`` values.  Returns ``(value, error, evals, exhausted)``.
    """
    order = axis_order(conc)
    inv = np.argsort(order)
    run = _Run(level_table([conc[i] for i in order]), lambda pts: integrand(pts[:, inv]), max_evals)
    try:
        val, err = run.level(0, np.empty(0), 1.0, abs_tol, rel_tol)
    except NonFiniteIntegrand as exc:
        point = np.asarray(exc.point)[inv]
        raise NonFiniteIntegrand(f"integrand is not finite at {point.tolist()}", point) from None
    return val, err, run.evals, run.exhausted


def line_integral(conc, nodes, fcode, qmat, abs_tol, rel_tol, max_evals):
    """Integrate ``f(T @ nodes)`` against Dirichlet(conc)."""
    nodes = np.asarray(nodes, dtype=float)

    def integrand(pts):
        return _line_eval(pts @ nodes, fcode, qmat)

    return dirichlet_integral(conc, integrand, abs_tol, rel_tol, max_evals)
