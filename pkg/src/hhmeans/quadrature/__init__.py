"""Integration over the standard simplex E_n against Uniform, Nu and Mu.

Two methods are available:

``adaptive``
    Nested Gauss-Kronrod over stick-breaking coordinates with per-axis power
    substitutions (see ``_engine``).  Every measure is handled as a Dirichlet
    law or a Dirichlet mixture, integrated component by component.
``mc``
    Monte Carlo with the exact samplers of :mod:`hhmeans.measures`,
    reporting three standard errors as the bound.

``auto`` picks ``adaptive`` for ``n <= 3`` and ``mc`` above.

Integrands receive a batch of full barycentric points of shape
``(k, n + 1)`` and return ``k`` values.  Line functionals ``f(T @ P)`` with
a built-in ``f`` go through :func:`integrate_line`, which runs in the
compiled kernel when it is available.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from ..errors import BudgetExhausted, DomainError, NonFiniteIntegrand
from ..measures import MeasureSpec, sample
from ..specfun import log_multivariate_beta
from . import _backend, _engine
from ._backend import compiled_available, current as current_backend, use as use_backend

__all__ = [
    "QuadratureConfig",
    "IntegralEstimate",
    "integrate",
    "integrate_line",
    "power_simplex_volume",
    "power_simplex_moment",
    "LINE_FUNCTIONS",
    "compiled_available",
    "current_backend",
    "use_backend",
]

LINE_FUNCTIONS = tuple(_engine.F_CODES)
_METHODS = ("auto", "adaptive", "mc")
_MC_BATCH = 1 << 15


@dataclass(frozen=True)
class QuadratureConfig:
    """Method, tolerances and budget.

    ``max_evals`` is checked between refinements, so one pass of the base
    rule (30 points per axis, nested) may overshoot it.
    """

    method: str = "auto"
    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_evals: int = 10_000_000
    seed: int = 0

    def __post_init__(self):
        if self.method not in _METHODS:
            raise DomainError(f"method must be one of {_METHODS}, got {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if self.max_evals < 1000:
            raise DomainError("max_evals must be at least 1000")

    def resolve(self, n: int) -> str:
        if self.method == "auto":
            return "adaptive" if n <= 3 else "mc"
        return self.method

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    error_bound: float
    evals: int
    method_used: str


def _adaptive(spec: MeasureSpec, cfg: QuadratureConfig, run_component) -> IntegralEstimate:
    value_terms, err_terms = [], []
    evals = 0
    exhausted = False
    for weight, conc in spec.components():
        budget = max(cfg.max_evals - evals, 1)
        v, e, ne, ex = run_component(conc, budget)
        value_terms.append(weight * v)
        err_terms.append(weight * e)
        evals += ne
        exhausted = exhausted or ex
    value = math.fsum(value_terms)
    err = math.fsum(err_terms)
    est = IntegralEstimate(value, err, evals, "adaptive")
    # a bound slightly above tolerance without running out of evaluations is
    # returned as is; error_bound stays honest either way
    if exhausted:
        raise BudgetExhausted(
            f"adaptive quadrature stopped at error {err:.3g} after {evals} evaluations", est
        )
    return est


def _monte_carlo(spec: MeasureSpec, cfg: QuadratureConfig, batch_fn) -> IntegralEstimate:
    total = 0.0
    total_sq = 0.0
    count = 0
    batch = 0
    while True:
        size = min(_MC_BATCH, cfg.max_evals - count)
        pts = sample(spec, size, seed=(cfg.seed, batch))
        vals = np.asarray(batch_fn(pts), dtype=float)
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise NonFiniteIntegrand(f"integrand is not finite at {pts[bad].tolist()}", pts[bad])
        total += math.fsum(vals)
        total_sq += math.fsum(vals * vals)
        count += size
        batch += 1
        mean = total / count
        var = max(total_sq / count - mean * mean, 0.0)
        bound = 3.0 * math.sqrt(var / count)
        est = IntegralEstimate(mean, bound, count, "mc")
        if batch >= 2 and bound <= max(cfg.abs_tol, cfg.rel_tol * abs(mean)):
            return est
        if count >= cfg.max_evals:
            raise BudgetExhausted(
                f"Monte Carlo reached {count} samples with 3-sigma bound {bound:.3g}", est
            )


def integrate(
    f: Callable,
    spec: MeasureSpec,
    cfg: QuadratureConfig | None = None,
    *,
    vectorized: bool = True,
) -> IntegralEstimate:
    """Integrate ``f`` over E_n against the probability measure ``spec``.

    With ``vectorized=False`` ``f`` is called once per point with a length
    ``n + 1`` barycentric vector.  Always uses the Python engine on the
    adaptive path; see :func:`integrate_line` for the compiled one.
    """
    cfg = cfg or QuadratureConfig()
    fn = f if vectorized else (lambda pts: np.array([f(p) for p in pts], dtype=float))
    if cfg.resolve(spec.n) == "mc":
        return _monte_carlo(spec, cfg, fn)

    def run(conc, budget):
        return _engine.dirichlet_integral(conc, fn, cfg.abs_tol, cfg.rel_tol, budget)

    return _adaptive(spec, cfg, run)


def _line_inputs(spec: MeasureSpec, nodes, func: str, qmat):
    if func not in _engine.F_CODES:
        raise DomainError(f"unknown line function {func!r}; choose from {LINE_FUNCTIONS}")
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    if nodes.shape[0] != spec.n + 1:
        raise DomainError(f"need {spec.n + 1} nodes for n = {spec.n}, got {nodes.shape[0]}")
    code = _engine.F_CODES[func]
    if code == _engine.F_QUADFORM:
        d = nodes.shape[1]
        qmat = np.eye(d) if qmat is None else np.asarray(qmat, dtype=float)
        if qmat.shape != (d, d):
            raise DomainError(f"quadratic form must be {d}x{d}")
    elif code not in (_engine.F_LSE,) and nodes.shape[1] != 1:
        raise DomainError(f"{func!r} acts on scalar nodes")
    return nodes, code, qmat


def integrate_line(
    spec: MeasureSpec,
    nodes,
    func: str,
    cfg: QuadratureConfig | None = None,
    qmat=None,
) -> IntegralEstimate:
    """Integrate ``func(sum_i t_i nodes_i)`` against ``spec``.

    ``nodes`` has one row per barycentric coordinate (scalars allowed).
    ``func`` is one of :data:`LINE_FUNCTIONS`; ``quadform`` uses ``qmat``
    (identity by default).
    """
    cfg = cfg or QuadratureConfig()
    nodes, code, qmat = _line_inputs(spec, nodes, func, qmat)
    if cfg.resolve(spec.n) == "mc":
        return _monte_carlo(spec, cfg, lambda pts: _engine._line_eval(pts @ nodes, code, qmat))

    def run(conc, budget):
        return _backend.line_integral(conc, nodes, code, qmat, cfg.abs_tol, cfg.rel_tol, budget)

    return _adaptive(spec, cfg, run)


def _check_alpha(alpha) -> list[float]:
    alpha = [float(a) for a in alpha]
    if not alpha or any(not a > 0.0 for a in alpha):
        raise DomainError("alpha entries must be positive")
    return alpha


def power_simplex_volume(alpha) -> float:
    """Lebesgue volume of ``{t >= 0 : sum t_i ** alpha_i <= 1}``."""
    alpha = _check_alpha(alpha)
    inv = [1.0 / a for a in alpha]
    log_b = 0.0 if len(inv) == 1 else log_multivariate_beta(inv)
    return math.exp(log_b - math.fsum(math.log(a) for a in alpha) - math.log(math.fsum(inv)))


def power_simplex_moment(alpha, i: int) -> float:
    """Normalized integral of ``t_i ** alpha_i`` over the power simplex (0-based ``i``)."""
    alpha = _check_alpha(alpha)
    if not 0 <= i < len(alpha):
        raise DomainError(f"index {i} out of range for {len(alpha)} axes")
    inv = [1.0 / a for a in alpha]
    return inv[i] / (math.fsum(inv) + 1.0)
