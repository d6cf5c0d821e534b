"""Selects the compiled kernel when it imports, else the Python engine.

``HHMEANS_BACKEND=python`` forces the fallback; :func:`use` switches
temporarily (tests and the benchmark compare both).
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

from ..errors import NonFiniteIntegrand
from . import _engine
from ._rules import EPS, GAUSS, KRONROD, NODES

try:
    from . import _kernels
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None

_active = "compiled" if _kernels is not None else "python"
if os.environ.get("HHMEANS_BACKEND", "").lower() == "python":
    _active = "python"


def compiled_available() -> bool:
    return _kernels is not None


def current() -> str:
    return _active


@contextlib.contextmanager
def use(name: str):
    """Temporarily switch to ``"python"`` or ``"compiled"``."""
    global _active
    if name not in ("python", "compiled"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "compiled" and _kernels is None:
        raise RuntimeError("compiled kernel is not built")
    prev, _active = _active, name
    try:
        yield
    finally:
        _active = prev


def line_integral(conc, nodes, fcode, qmat, abs_tol, rel_tol, max_evals):
    nodes = np.asarray(nodes, dtype=float)
    if _active == "compiled":
        order = _engine.axis_order(conc)
        out = _kernels.line_integral(
            _engine.level_table([conc[i] for i in order]),
            np.ascontiguousarray(nodes.reshape(len(conc), -1)[order]), fcode, qmat, abs_tol, rel_tol,
            int(max_evals), _engine.MAX_INTERVALS, NODES, KRONROD, GAUSS, EPS,
        )
        if out[0] == "nonfinite":
            raise NonFiniteIntegrand(
                f"integrand is not finite at line argument {out[1].tolist()}", out[1]
            )
        return out
    try:
        return _engine.line_integral(conc, nodes, fcode, qmat, abs_tol, rel_tol, max_evals)
    except NonFiniteIntegrand as exc:
        x = np.asarray(exc.point) @ nodes
        raise NonFiniteIntegrand(
            f"integrand is not finite at line argument {x.tolist()}", x
        ) from None
