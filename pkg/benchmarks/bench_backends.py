"""Compiled kernel vs pure-Python engine on representative line integrals.

    python3 benchmarks/bench_backends.py [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hhmeans.measures import MeasureSpec, WeightVector
from hhmeans.quadrature import QuadratureConfig, compiled_available, integrate_line, use_backend

CASES = [
    ("logcal n=2", MeasureSpec.mu(WeightVector.parse("1/3,1/6")), np.log([0.5, 1.0, 2.0]), "exp"),
    ("logbb n=2", MeasureSpec.mu(WeightVector.parse("0.2,0.25")), [1.3, 1.5, 1.9], "inverse"),
    ("identric n=2", MeasureSpec.mu(WeightVector.parse("0.05,0.2")), [19.0, 1.0, 1.0], "log"),
    ("nu exp n=2", MeasureSpec.nu(WeightVector.parse("1/3,1/6")), [0.5, 1.0, 2.0], "exp"),
    ("mu square n=3", MeasureSpec.mu(WeightVector.parse("0.2,0.3,0.1")), [-1.0, 0.5, 2.0, 1.0], "square"),
    ("nu lse n=3 d=3", MeasureSpec.nu(WeightVector.parse("0.2,0.3,0.1")),
     np.arange(12.0).reshape(4, 3) / 6.0, "lse"),
]


def _time(fn, repeat: int) -> tuple[float, object]:
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not compiled_available():
        print("compiled kernel not built; only the Python engine is available")
        return 1
    cfg = QuadratureConfig(method="adaptive")
    print(f"{'case':<18}{'evals':>10}{'python s':>12}{'compiled s':>12}{'speedup':>9}{'|diff|':>11}")
    for name, spec, nodes, func in CASES:
        with use_backend("python"):
            tp, ep = _time(lambda: integrate_line(spec, nodes, func, cfg), args.repeat)
        with use_backend("compiled"):
            tc, ec = _time(lambda: integrate_line(spec, nodes, func, cfg), args.repeat)
        diff = abs(ep.value - ec.value)
        print(f"{name:<18}{ec.evals:>10}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}{diff:>11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
