"""Probability measures on the standard simplex E_n.

Two weighted measures are provided for an interior weight vector
``lam = (lam_1, ..., lam_n)`` with ``lam_{n+1} = 1 - sum(lam)``:

* ``Nu(lam)`` with density ``n! sum_i lam_i t_i ** e_i`` where
  ``e_i = [n! lam_i / lam_{i+1}]_{-n} - 1`` (cyclic, ``lam_{n+2} = lam_1``).
  It is a Dirichlet mixture: component ``i`` has weight ``lam_{i+1}`` and
  concentration one everywhere except ``e_i + 1`` at slot ``i``.
* ``Mu(lam)``, the Dirichlet law with concentration
  ``(lam_1/lam_{n+1}, ..., lam_n/lam_{n+1}, 1)``.  Its mean is ``lam``.

Points of E_n are passed either as the ``n`` free coordinates or as the full
barycentric vector of length ``n + 1``.  Samples and integrands always use
the full barycentric form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DomainError, SingularEvaluationError
from .specfun import inverse_pochhammer, log_gamma, log_multivariate_beta

__all__ = [
    "WeightVector",
    "ExponentVector",
    "MeasureSpec",
    "DirichletMixture",
    "parse_number",
    "lambda_exponents",
    "tilde_weights",
    "nu_density",
    "mu_density",
    "nu_as_mixture",
    "mu_as_dirichlet",
    "dirichlet_density",
    "sample",
]


def parse_number(text) -> Fraction:
    """Parse ``"1/3"``, ``"0.25"`` or a number into an exact rational."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, (int, float)):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse {text!r} as a number") from exc


@dataclass(frozen=True)
class WeightVector:
    """Interior weights ``(lam_1, ..., lam_n)`` of the simplex E_n.

    ``full`` appends ``lam_{n+1}``; ``successor[i]`` is ``lam_{i+2}`` in
    one-based terms, i.e. the cyclic successor of ``full[i]``.
    """

    lam: tuple[float, ...]
    full: tuple[float, ...] = field(init=False, repr=False)
    successor: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        vals = tuple(self.lam)
        if len(vals) < 1:
            raise DomainError("weights must have at least one entry (n >= 1)")
        exact = all(isinstance(v, (Fraction, int)) for v in vals)
        if exact:
            last = 1 - sum(Fraction(v) for v in vals)
            lam = tuple(float(v) for v in vals)
            last = float(last) if last > 0 else -1.0
        else:
            lam = tuple(float(v) for v in vals)
            last = 1.0 - math.fsum(lam)
        shown = ", ".join(str(v) for v in vals)
        for v in lam:
            if not (v > 0.0) or not math.isfinite(v):
                raise DomainError(
                    f"weights must lie in int(E_n): every lam_i > 0, got ({shown})"
                )
        if not last > 0.0:
            raise DomainError(
                f"weights must lie in int(E_n): sum(lam) < 1 required, got ({shown})"
            )
        full = lam + (last,)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "full", full)
        object.__setattr__(self, "successor", full[1:] + full[:1])

    @classmethod
    def parse(cls, spec) -> "WeightVector":
        """Build from ``"1/3,1/6"`` or a sequence of numbers/strings."""
        if isinstance(spec, str):
            parts = [p for p in spec.replace(" ", "").split(",") if p]
        else:
            parts = list(spec)
        return cls(tuple(parse_number(p) for p in parts))

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls(tuple(Fraction(1, n + 1) for _ in range(n)))

    @property
    def n(self) -> int:
        return len(self.lam)

    @property
    def last(self) -> float:
        return self.full[-1]


@dataclass(frozen=True)
class ExponentVector:
    """Exponents ``e_i`` of the Nu density together with ``shapes = e_i + 1``.

    The shapes are the inverse-Pochhammer roots themselves; keeping them
    avoids the round trip ``(x - 1) + 1`` when a root is tiny.
    """

    exps: tuple[float, ...]
    shapes: tuple[float, ...]


def lambda_exponents(w: WeightVector) -> ExponentVector:
    n = w.n
    nfact = math.factorial(n)
    shapes = tuple(
        inverse_pochhammer(nfact * li / lnext, n)
        for li, lnext in zip(w.full, w.successor)
    )
    return ExponentVector(exps=tuple(s - 1.0 for s in shapes), shapes=shapes)


def tilde_weights(w: WeightVector, exps: ExponentVector | None = None) -> tuple[float, ...]:
    """First moments of Nu(lam); the convex weights of its Jensen chain."""
    exps = exps or lambda_exponents(w)
    n = w.n
    beta = exps.shapes
    off = [ln / (b + n) for ln, b in zip(w.successor, beta)]
    out = []
    for i in range(n + 1):
        terms = [off[j] for j in range(n + 1) if j != i]
        terms.append(w.successor[i] * beta[i] / (beta[i] + n))
        out.append(math.fsum(terms))
    return tuple(out)


def _as_points(t, n: int) -> np.ndarray:
    """Return the full barycentric array of shape (..., n + 1)."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] == n:
        last = 1.0 - arr.sum(axis=-1, keepdims=True)
        arr = np.concatenate([arr, last], axis=-1)
    elif arr.shape[-1] != n + 1:
        raise DomainError(f"points need {n} or {n + 1} coordinates, got shape {arr.shape}")
    tol = 1e-12
    if np.any(arr < -tol) or np.any(np.abs(arr.sum(axis=-1) - 1.0) > 1e-9):
        raise DomainError("point lies outside the standard simplex")
    return np.clip(arr, 0.0, None)


def _check_singular(pts: np.ndarray, powers: Sequence[float], what: str):
    neg = np.asarray(powers) < 0.0
    if np.any(neg) and np.any((pts[..., neg] == 0.0)):
        raise SingularEvaluationError(
            f"{what} has a negative power of a zero coordinate at the boundary"
        )


def nu_density(w: WeightVector, t, exps: ExponentVector | None = None):
    """``n! sum_i lam_i t_i ** e_i`` at one point or a batch of points."""
    exps = exps or lambda_exponents(w)
    pts = _as_points(t, w.n)
    _check_singular(pts, exps.exps, "nu density")
    lam = np.asarray(w.full)
    e = np.asarray(exps.exps)
    with np.errstate(divide="ignore"):
        vals = math.factorial(w.n) * np.sum(lam * pts ** e, axis=-1)
    return float(vals) if vals.ndim == 0 else vals


def _log_beta_n(c: Sequence[float]) -> float:
    # B_1(x) = Gamma(x) / Gamma(x) = 1
    if len(c) == 1:
        return 0.0
    return log_multivariate_beta(c)


def mu_density(w: WeightVector, t):
    """``(sum c / B_n(c)) prod_{i<=n} t_i ** (c_i - 1)`` with ``c_i = lam_i / lam_{n+1}``."""
    c = mu_as_dirichlet(w)[:-1]
    pts = _as_points(t, w.n)
    powers = np.asarray(c) - 1.0
    _check_singular(pts[..., :-1], powers, "mu density")
    log_const = math.log(math.fsum(c)) - _log_beta_n(c)
    with np.errstate(divide="ignore"):
        logs = np.sum(powers * np.log(pts[..., :-1]), axis=-1)
    vals = np.exp(log_const + logs)
    return float(vals) if vals.ndim == 0 else vals


def dirichlet_density(conc: Sequence[float], t):
    """Dirichlet density with respect to ``dt_1 ... dt_n``."""
    conc = tuple(float(v) for v in conc)
    n = len(conc) - 1
    pts = _as_points(t, n)
    powers = np.asarray(conc) - 1.0
    _check_singular(pts, powers, "dirichlet density")
    log_norm = -log_multivariate_beta(conc)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(powers == 0.0, 0.0, powers * np.log(pts))
    vals = np.exp(log_norm + np.sum(terms, axis=-1))
    return float(vals) if vals.ndim == 0 else vals


@dataclass(frozen=True)
class DirichletMixture:
    """Finite mixture of Dirichlet laws: ``[(weight, concentration), ...]``."""

    components: tuple[tuple[float, tuple[float, ...]], ...]

    def __post_init__(self):
        total = math.fsum(wt for wt, _ in self.components)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"mixture weights sum to {total!r}, not 1")
        for wt, conc in self.components:
            if not wt > 0.0 or any(not c > 0.0 for c in conc):
                raise DomainError("mixture weights and concentrations must be positive")

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(wt for wt, _ in self.components)

    def density(self, t):
        return sum(wt * dirichlet_density(conc, t) for wt, conc in self.components)


def nu_as_mixture(w: WeightVector, exps: ExponentVector | None = None) -> DirichletMixture:
    exps = exps or lambda_exponents(w)
    m = w.n + 1
    comps = []
    for i in range(m):
        conc = [1.0] * m
        conc[i] = exps.shapes[i]
        comps.append((w.successor[i], tuple(conc)))
    return DirichletMixture(tuple(comps))


def mu_as_dirichlet(w: WeightVector) -> tuple[float, ...]:
    last = w.last
    return tuple(li / last for li in w.lam) + (1.0,)


@dataclass(frozen=True)
class MeasureSpec:
    """A measure on E_n: ``"nu"``, ``"mu"`` or ``"uniform"`` (normalized)."""

    kind: str
    n: int
    weights: WeightVector | None = None
    exponents: ExponentVector | None = field(default=None, repr=False)
    concentration: tuple[float, ...] | None = field(default=None, repr=False)

    @classmethod
    def nu(cls, w: WeightVector) -> "MeasureSpec":
        return cls("nu", w.n, w, exponents=lambda_exponents(w))

    @classmethod
    def mu(cls, w: WeightVector) -> "MeasureSpec":
        return cls("mu", w.n, w, concentration=mu_as_dirichlet(w))

    @classmethod
    def uniform(cls, n: int) -> "MeasureSpec":
        if n < 1:
            raise DomainError("uniform measure needs n >= 1")
        return cls("uniform", n)

    def components(self) -> tuple[tuple[float, tuple[float, ...]], ...]:
        """Dirichlet decomposition as ``(weight, concentration)`` pairs."""
        if self.kind == "uniform":
            return ((1.0, (1.0,) * (self.n + 1)),)
        if self.kind == "mu":
            return ((1.0, self.concentration),)
        if self.kind == "nu":
            return nu_as_mixture(self.weights, self.exponents).components
        raise DomainError(f"unknown measure kind {self.kind!r}")

    def density(self, t):
        if self.kind == "uniform":
            pts = _as_points(t, self.n)
            vals = np.full(pts.shape[:-1], float(math.factorial(self.n)))
            return float(vals) if vals.ndim == 0 else vals
        if self.kind == "mu":
            return mu_density(self.weights, t)
        return nu_density(self.weights, t, self.exponents)


def _dirichlet_draws(rng: np.random.Generator, conc, count: int) -> np.ndarray:
    # log-space gamma variates: G(a) = G(a + 1) * U ** (1 / a) stays
    # representable for the tiny shapes seen near the simplex boundary
    conc = np.asarray(conc, dtype=float)
    logs = np.empty((count, conc.size))
    for j, a in enumerate(conc):
        if a >= 1.0:
            logs[:, j] = np.log(rng.standard_gamma(a, size=count))
        else:
            g = rng.standard_gamma(a + 1.0, size=count)
            u = rng.random(size=count)
            logs[:, j] = np.log(g) + np.log(u) / a
    logs -= logs.max(axis=1, keepdims=True)
    x = np.exp(logs)
    return x / x.sum(axis=1, keepdims=True)


def sample(spec: MeasureSpec, count: int, seed: int = 0) -> np.ndarray:
    """Draw ``count`` i.i.d. points (full barycentric, shape ``(count, n+1)``)."""
    count = int(count)
    m = spec.n + 1
    if count <= 0:
        return np.empty((0, m))
    rng = np.random.default_rng(seed)
    if spec.kind == "uniform":
        e = rng.standard_exponential(size=(count, m))
        return e / e.sum(axis=1, keepdims=True)
    if spec.kind == "mu":
        return _dirichlet_draws(rng, spec.concentration, count)
    comps = spec.components()
    weights = np.array([wt for wt, _ in comps])
    which = rng.choice(len(comps), size=count, p=weights / weights.sum())
    out = np.empty((count, m))
    for k, (_, conc) in enumerate(comps):
        idx = np.flatnonzero(which == k)
        if idx.size:
            out[idx] = _dirichlet_draws(rng, conc, idx.size)
    return out
