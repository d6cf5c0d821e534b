"""Hermite-Hadamard chains against the Nu and Mu simplex measures.

For convex ``f`` and nodes ``a_1..a_{n+1}`` (scalars or points of R^d)::

    f(sum w_i a_i) <= integral f(sum t_i a_i) dM(t) <= sum w_i f(a_i)

with ``(M, w) = (Nu(lam), tilde_weights(lam))`` or ``(Mu(lam), lam)``.
Concave ``f`` reverses both inequalities.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, HHMeansError
from .measures import MeasureSpec, WeightVector, tilde_weights
from .quadrature import IntegralEstimate, QuadratureConfig, integrate, integrate_line

__all__ = [
    "TestFunction",
    "HHReport",
    "AuditSummary",
    "BUILTIN_FUNCTIONS",
    "AUDIT_POOL",
    "builtin",
    "hh_nu",
    "hh_mu",
    "randomized_audit",
]


@dataclass(frozen=True)
class TestFunction:
    """A convex or concave function applied at the nodes' convex combinations.

    ``evaluator`` maps points of shape ``(k, d)`` to ``k`` values.  When
    ``line`` names a built-in line functional, the middle integral runs in
    the compiled kernel.
    """

    __test__ = False

    name: str
    convexity: str
    evaluator: Callable
    line: str | None = None
    vector: bool = False
    positive_domain: bool = False
    qmat: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.convexity not in ("convex", "concave"):
            raise DomainError(f"convexity must be 'convex' or 'concave', got {self.convexity!r}")

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim <= 1 and not self.vector:
            x = x.reshape(-1, 1)
        elif x.ndim == 1:
            x = x[None, :]
        return np.asarray(self.evaluator(x), dtype=float)

    def spot_check(self, nodes: np.ndarray, rng: np.random.Generator, trials: int = 64) -> bool:
        """Random midpoint tests inside the hull of ``nodes``."""
        m = nodes.shape[0]
        wx = rng.dirichlet(np.ones(m), size=trials)
        wy = rng.dirichlet(np.ones(m), size=trials)
        x = wx @ nodes
        y = wy @ nodes
        mid = self(0.5 * (x + y))
        avg = 0.5 * (self(x) + self(y))
        scale = 1e-10 * (1.0 + np.abs(avg))
        if self.convexity == "convex":
            return bool(np.all(mid <= avg + scale))
        return bool(np.all(mid >= avg - scale))


def _quadform_fn(q):
    return lambda x: np.einsum("ki,ij,kj->k", x, q, x)


def _lse(x):
    mx = x.max(axis=1)
    return mx + np.log(np.exp(x - mx[:, None]).sum(axis=1))


BUILTIN_FUNCTIONS = {
    "identity": TestFunction("identity", "convex", lambda x: x[:, 0], line="identity"),
    "exp": TestFunction("exp", "convex", lambda x: np.exp(x[:, 0]), line="exp"),
    "square": TestFunction("square", "convex", lambda x: x[:, 0] ** 2, line="square"),
    "neglog": TestFunction(
        "neglog", "convex", lambda x: -np.log(x[:, 0]), line="neglog", positive_domain=True
    ),
    "inverse": TestFunction(
        "inverse", "convex", lambda x: 1.0 / x[:, 0], line="inverse", positive_domain=True
    ),
    "log": TestFunction(
        "log", "concave", lambda x: np.log(x[:, 0]), line="log", positive_domain=True
    ),
    "lse": TestFunction("lse", "convex", _lse, line="lse", vector=True),
}

AUDIT_POOL = ("exp", "square", "neglog", "inverse", "lse", "quadform")


def builtin(name: str, qmat=None) -> TestFunction:
    """Look up a built-in test function; ``quadform`` takes a PSD ``qmat``."""
    if name == "quadform":
        if qmat is None:
            raise DomainError("quadform needs a positive semidefinite matrix")
        q = np.asarray(qmat, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or np.min(np.linalg.eigvalsh(0.5 * (q + q.T))) < -1e-12:
            raise DomainError("quadform matrix must be square positive semidefinite")
        return TestFunction("quadform", "convex", _quadform_fn(q), line="quadform", vector=True, qmat=q)
    try:
        return BUILTIN_FUNCTIONS[name]
    except KeyError:
        raise DomainError(
            f"unknown test function {name!r}; choose from {sorted(BUILTIN_FUNCTIONS) + ['quadform']}"
        ) from None


@dataclass(frozen=True)
class HHReport:
    measure: str
    function: str
    convexity: str
    left: float
    middle: IntegralEstimate
    right: float
    chain_ok: bool
    slack: tuple[float, float]
    convexity_spot_check: bool = True

    def as_dict(self) -> dict:
        return {
            "measure": self.measure,
            "function": self.function,
            "convexity": self.convexity,
            "left": self.left,
            "middle": self.middle.value,
            "middle_error_bound": self.middle.error_bound,
            "middle_evals": self.middle.evals,
            "right": self.right,
            "slack_left": self.slack[0],
            "slack_right": self.slack[1],
            "chain_ok": self.chain_ok,
            "convexity_spot_check": self.convexity_spot_check,
        }


def _prepare_nodes(f: TestFunction, w: WeightVector, nodes) -> np.ndarray:
    arr = np.asarray(nodes, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != w.n + 1:
        raise DomainError(f"{w.n} weights need {w.n + 1} nodes, got {arr.shape[0]}")
    if not f.vector and arr.shape[1] != 1:
        raise DomainError(f"{f.name} acts on scalar nodes")
    if f.positive_domain and np.any(arr <= 0.0):
        raise DomainError(f"{f.name} needs positive nodes")
    return arr


def _chain(measure, f, spec, weights, nodes, cfg) -> HHReport:
    wts = np.asarray(weights)
    left = float(f(wts @ nodes)[0])
    right = math.fsum(wts * f(nodes))
    if f.line is not None:
        middle = integrate_line(spec, nodes, f.line, cfg, qmat=f.qmat)
    else:
        middle = integrate(lambda pts: f(pts @ nodes), spec, cfg)
    mid = middle.value
    if f.convexity == "convex":
        slack = (mid - left, right - mid)
    else:
        slack = (left - mid, mid - right)
    ok = slack[0] >= -middle.error_bound and slack[1] >= -middle.error_bound
    spot = f.spot_check(nodes, np.random.default_rng(0))
    return HHReport(measure, f.name, f.convexity, left, middle, right, bool(ok), slack, spot)


def hh_nu(f: TestFunction, w: WeightVector, nodes, cfg: QuadratureConfig | None = None) -> HHReport:
    """Chain with Nu(lam) and the tilde weights."""
    nodes = _prepare_nodes(f, w, nodes)
    spec = MeasureSpec.nu(w)
    return _chain("nu", f, spec, tilde_weights(w, spec.exponents), nodes, cfg)


def hh_mu(f: TestFunction, w: WeightVector, nodes, cfg: QuadratureConfig | None = None) -> HHReport:
    """Chain with Mu(lam) and the weights themselves."""
    nodes = _prepare_nodes(f, w, nodes)
    return _chain("mu", f, MeasureSpec.mu(w), w.full, nodes, cfg)


@dataclass
class AuditSummary:
    trials: int = 0
    passes: int = 0
    failures: list = field(default_factory=list)
    worst_slack: float = math.inf
    by_function: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passes == self.trials

    def line(self) -> str:
        return f"{self.passes}/{self.trials} pass"


# weights are kept at least this far from the simplex boundary
_AUDIT_WEIGHT_FLOOR = 0.01


def _draw_trial(seed: int, index: int):
    rng = np.random.default_rng([seed, index])
    n = int(rng.integers(1, 4))
    raw = rng.dirichlet(np.ones(n + 1))
    lam = _AUDIT_WEIGHT_FLOOR + (1.0 - _AUDIT_WEIGHT_FLOOR * (n + 1)) * raw
    w = WeightVector(tuple(float(v) for v in lam[:n]))
    name = AUDIT_POOL[int(rng.integers(len(AUDIT_POOL)))]
    if name in ("lse", "quadform"):
        d = int(rng.integers(2, 5))
        nodes = rng.normal(size=(n + 1, d))
        if name == "quadform":
            a = rng.normal(size=(d, d))
            f = builtin("quadform", a @ a.T / d)
        else:
            f = builtin(name)
    else:
        f = builtin(name)
        if f.positive_domain:
            nodes = rng.uniform(0.1, 5.0, size=n + 1)
        else:
            nodes = rng.uniform(-2.0, 2.0, size=n + 1)
    return n, w, f, nodes


def _run_trial(seed, index, cfg):
    n, w, f, nodes = _draw_trial(seed, index)
    try:
        reports = (hh_nu(f, w, nodes, cfg), hh_mu(f, w, nodes, cfg))
    except HHMeansError as exc:
        return {"index": index, "n": n, "function": f.name, "ok": False, "error": str(exc),
                "worst": -math.inf}
    worst = min(min(r.slack) for r in reports)
    return {
        "index": index,
        "n": n,
        "function": f.name,
        "weights": w.lam,
        "ok": all(r.chain_ok for r in reports),
        "worst": worst,
        "nu": reports[0].as_dict(),
        "mu": reports[1].as_dict(),
    }


def randomized_audit(
    seed: int,
    trials: int,
    cfg: QuadratureConfig | None = None,
    *,
    workers: int = 1,
) -> AuditSummary:
    """Check both chains on ``trials`` random instances.

    Each trial draws ``n`` in {1, 2, 3}, weights at least 0.01 from the
    boundary, a function from :data:`AUDIT_POOL` and matching nodes from a
    generator seeded by ``(seed, trial)``, so the summary does not depend on
    ``workers``.
    """
    summary = AuditSummary()
    if trials <= 0:
        return summary
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda i: _run_trial(seed, i, cfg), range(trials)))
    else:
        rows = [_run_trial(seed, i, cfg) for i in range(trials)]
    for row in rows:
        summary.trials += 1
        counts = summary.by_function.setdefault(row["function"], [0, 0])
        counts[1] += 1
        if row["ok"]:
            summary.passes += 1
            counts[0] += 1
        else:
            summary.failures.append(row)
        summary.worst_slack = min(summary.worst_slack, row["worst"])
    summary.rows = rows
    return summary
