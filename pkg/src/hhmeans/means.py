"""Weighted multivariate means.

Weight convention: ``lam_i`` (with ``lam_{n+1} = 1 - sum lam``) is the
weight of node ``a_i`` everywhere, including the bivariate closed forms,
which take the weight of the *second* node as their scalar parameter
(``a nabla_lam b = (1 - lam) a + lam b``).

The integral means are expectations under the Dirichlet law Mu(lam):

* ``log_mean_cal``  E[ prod a_i ** t_i ]
* ``log_mean_bb``   1 / E[ 1 / sum t_i a_i ]
* ``identric_mean`` exp E[ log sum t_i a_i ]
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .measures import MeasureSpec, WeightVector, parse_number
from .quadrature import IntegralEstimate, QuadratureConfig, integrate_line

__all__ = [
    "NodeVector",
    "MeanKind",
    "MeanResult",
    "AxiomReport",
    "arithmetic",
    "harmonic",
    "geometric",
    "log_mean_cal",
    "log_mean_bb",
    "identric_mean",
    "harmonic_integral_dual",
    "bivariate_log_mean",
    "bivariate_identric_mean",
    "evaluate",
    "check_mean_axioms",
]

_DEGENERATE = 1e-9


@dataclass(frozen=True)
class NodeVector:
    a: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.a)
        if len(vals) < 2:
            raise DomainError("nodes need at least two entries")
        if any(not (v > 0.0 and math.isfinite(v)) for v in vals):
            raise DomainError(f"nodes must be positive and finite, got {self.a!r}")
        object.__setattr__(self, "a", vals)

    @classmethod
    def parse(cls, spec) -> "NodeVector":
        if isinstance(spec, str):
            spec = [p for p in spec.replace(" ", "").split(",") if p]
        return cls(tuple(float(parse_number(p)) for p in spec))

    def __len__(self):
        return len(self.a)

    def array(self) -> np.ndarray:
        return np.asarray(self.a)


class MeanKind(str, enum.Enum):
    ARITHMETIC = "arithmetic"
    HARMONIC = "harmonic"
    GEOMETRIC = "geometric"
    LOGCAL = "logcal"
    LOGBB = "logbb"
    IDENTRIC = "identric"
    BIVARIATE_L = "bivl"
    BIVARIATE_I = "bivi"

    @property
    def integral(self) -> bool:
        return self in (MeanKind.LOGCAL, MeanKind.LOGBB, MeanKind.IDENTRIC)

    @property
    def bivariate(self) -> bool:
        return self in (MeanKind.BIVARIATE_L, MeanKind.BIVARIATE_I)


@dataclass(frozen=True)
class MeanResult:
    value: float
    estimate: IntegralEstimate | None = None
    error_bound: float = 0.0


def _nodes(a) -> NodeVector:
    return a if isinstance(a, NodeVector) else NodeVector(tuple(a))


def _check_dims(w: WeightVector, a: NodeVector):
    if len(a) != w.n + 1:
        raise DomainError(f"{w.n} weights need {w.n + 1} nodes, got {len(a)}")


def arithmetic(w: WeightVector, a) -> float:
    a = _nodes(a)
    _check_dims(w, a)
    return math.fsum(l * x for l, x in zip(w.full, a.a))


def harmonic(w: WeightVector, a) -> float:
    a = _nodes(a)
    _check_dims(w, a)
    return 1.0 / math.fsum(l / x for l, x in zip(w.full, a.a))


def geometric(w: WeightVector, a) -> float:
    a = _nodes(a)
    _check_dims(w, a)
    return math.exp(math.fsum(l * math.log(x) for l, x in zip(w.full, a.a)))


def log_mean_cal(w: WeightVector, a, cfg: QuadratureConfig | None = None) -> MeanResult:
    a = _nodes(a)
    _check_dims(w, a)
    est = integrate_line(MeasureSpec.mu(w), np.log(a.array()), "exp", cfg)
    return MeanResult(est.value, est, est.error_bound)


def log_mean_bb(w: WeightVector, a, cfg: QuadratureConfig | None = None) -> MeanResult:
    a = _nodes(a)
    _check_dims(w, a)
    est = integrate_line(MeasureSpec.mu(w), a.array(), "inverse", cfg)
    value = 1.0 / est.value
    return MeanResult(value, est, est.error_bound * value * value)


def identric_mean(w: WeightVector, a, cfg: QuadratureConfig | None = None) -> MeanResult:
    a = _nodes(a)
    _check_dims(w, a)
    est = integrate_line(MeasureSpec.mu(w), a.array(), "log", cfg)
    value = math.exp(est.value)
    return MeanResult(value, est, value * math.expm1(est.error_bound))


def harmonic_integral_dual(w: WeightVector, a, cfg: QuadratureConfig | None = None) -> MeanResult:
    """``E[ 1 / sum t_i / a_i ]`` under Mu(lam), the Mu-average of the
    t-weighted harmonic mean; equals ``1 / log_mean_bb(w, 1 / a)``."""
    a = _nodes(a)
    _check_dims(w, a)
    est = integrate_line(MeasureSpec.mu(w), 1.0 / a.array(), "inverse", cfg)
    return MeanResult(est.value, est, est.error_bound)


def _check_pair(lam: float, a: float, b: float):
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"bivariate means need a, b > 0, got {a!r}, {b!r}")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam!r}")


def bivariate_log_mean(lam: float, a: float, b: float) -> float:
    """Weighted logarithmic mean ``L_lam(a, b)``; ``lam`` weights ``b``."""
    lam, a, b = float(lam), float(a), float(b)
    _check_pair(lam, a, b)
    if lam == 0.0:
        return a
    if lam == 1.0:
        return b
    d = math.log(b) - math.log(a)
    if abs(d) < _DEGENERATE:
        return a
    e1 = math.expm1(lam * d)
    e = math.expm1(d)
    return a * ((1.0 - lam) / lam * e1 - lam / (1.0 - lam) * (e1 - e)) / d


def _psi(u: float) -> float:
    # (1 + u) log1p(u) - u without cancellation near 0
    if abs(u) < 1e-2:
        acc = 0.0
        p = u * u
        for k in range(2, 14):
            acc += (-1) ** k * p / (k * (k - 1))
            p *= u
        return acc
    return (1.0 + u) * math.log1p(u) - u


def bivariate_identric_mean(lam: float, a: float, b: float) -> float:
    """Weighted identric mean ``I_lam(a, b)``; ``lam`` weights ``b``.

    Evaluated as ``log a + ((1-2 lam) psi(lam u) + lam^2 psi(u)) / (lam (1-lam) u)``
    with ``u = (b - a) / a``, which is the closed form rearranged so the
    ``0/0`` at ``a = b`` never forms.
    """
    lam, a, b = float(lam), float(a), float(b)
    _check_pair(lam, a, b)
    if lam == 0.0:
        return a
    if lam == 1.0:
        return b
    if abs(b - a) <= _DEGENERATE * max(a, b):
        return a
    u = (b - a) / a
    log_i = math.log(a) + ((1.0 - 2.0 * lam) * _psi(lam * u) + lam * lam * _psi(u)) / (
        lam * (1.0 - lam) * u
    )
    return math.exp(log_i)


def evaluate(
    kind: MeanKind | str,
    w: WeightVector,
    a,
    cfg: QuadratureConfig | None = None,
) -> MeanResult:
    """Evaluate any :class:`MeanKind` at ``(w, a)``."""
    kind = MeanKind(kind)
    a = _nodes(a)
    _check_dims(w, a)
    if kind is MeanKind.ARITHMETIC:
        return MeanResult(arithmetic(w, a))
    if kind is MeanKind.HARMONIC:
        return MeanResult(harmonic(w, a))
    if kind is MeanKind.GEOMETRIC:
        return MeanResult(geometric(w, a))
    if kind is MeanKind.LOGCAL:
        return log_mean_cal(w, a, cfg)
    if kind is MeanKind.LOGBB:
        return log_mean_bb(w, a, cfg)
    if kind is MeanKind.IDENTRIC:
        return identric_mean(w, a, cfg)
    if w.n != 1:
        raise DomainError(f"{kind.value} is bivariate and needs n = 1, got n = {w.n}")
    fn = bivariate_log_mean if kind is MeanKind.BIVARIATE_L else bivariate_identric_mean
    return MeanResult(fn(w.full[1], a.a[0], a.a[1]))


@dataclass
class AxiomReport:
    kind: str
    bounds_ok: bool
    corner_ok: bool
    symmetric_ok: bool
    partials_ok: bool
    value: float
    corners: list = field(default_factory=list)
    symmetry_max_dev: float = 0.0
    partials: tuple = ()

    @property
    def all_ok(self) -> bool:
        return self.bounds_ok and self.corner_ok and self.symmetric_ok and self.partials_ok


def _lower_bound(kind: MeanKind, w: WeightVector, a) -> float:
    if kind in (MeanKind.HARMONIC, MeanKind.LOGBB):
        return harmonic(w, a)
    return geometric(w, a)


def check_mean_axioms(
    kind: MeanKind | str,
    w: WeightVector,
    a,
    cfg: QuadratureConfig | None = None,
    *,
    eps: float = 1e-3,
    h: float = 1e-4,
    partial_tol: float = 1e-4,
    permutations: int = 10,
    seed: int = 0,
) -> AxiomReport:
    """Numerically check the four weighted-mean axioms.

    (i) ``min a <= m <= max a``; (ii) near each corner ``(1-eps) e_i + eps e``
    (and ``eps e`` for the last node) the value lies between the harmonic or
    geometric mean and the arithmetic mean at that weight; (iii) at uniform
    weights the value is invariant under random permutations of ``a``;
    (iv) central differences at ``(1, ..., 1)`` recover ``lam_i``.
    """
    kind = MeanKind(kind)
    a = _nodes(a)
    _check_dims(w, a)
    n = w.n
    res = evaluate(kind, w, a, cfg)
    slack = res.error_bound + 1e-12 * max(a.a)
    bounds_ok = min(a.a) - slack <= res.value <= max(a.a) + slack

    corners = []
    corner_ok = True
    centre = eps / (n + 1)
    for i in range(n + 1):
        lam = [centre] * n
        if i < n:
            lam[i] += 1.0 - eps
        wc = WeightVector(tuple(lam))
        r = evaluate(kind, wc, a, cfg)
        lo = _lower_bound(kind, wc, a)
        hi = arithmetic(wc, a)
        tol = r.error_bound + 1e-12 * max(a.a)
        ok = lo - tol <= r.value <= hi + tol
        corner_ok &= ok
        corners.append({"node": i, "value": r.value, "lower": lo, "upper": hi, "ok": ok})

    rng = np.random.default_rng(seed)
    we = WeightVector.uniform(n)
    base = evaluate(kind, we, a, cfg)
    dev = 0.0
    symmetric_ok = True
    for _ in range(permutations):
        perm = NodeVector(tuple(rng.permutation(a.array())))
        r = evaluate(kind, we, perm, cfg)
        diff = abs(r.value - base.value)
        dev = max(dev, diff)
        symmetric_ok &= diff <= r.error_bound + base.error_bound + 1e-12 * max(a.a)

    partials = []
    for i in range(n + 1):
        up = np.ones(n + 1)
        dn = np.ones(n + 1)
        up[i] += h
        dn[i] -= h
        fu = evaluate(kind, w, NodeVector(tuple(up)), cfg).value
        fd = evaluate(kind, w, NodeVector(tuple(dn)), cfg).value
        partials.append((fu - fd) / (2.0 * h))
    partials_ok = all(abs(p - l) <= partial_tol for p, l in zip(partials, w.full))

    return AxiomReport(
        kind=kind.value,
        bounds_ok=bool(bounds_ok),
        corner_ok=bool(corner_ok),
        symmetric_ok=bool(symmetric_ok),
        partials_ok=bool(partials_ok),
        value=res.value,
        corners=corners,
        symmetry_max_dev=dev,
        partials=tuple(partials),
    )
