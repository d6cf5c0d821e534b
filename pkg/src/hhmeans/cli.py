"""``hhmeans`` command line: means, measures, Hermite-Hadamard chains, tables.

Exit codes: 0 success, 2 invalid input, 3 quadrature budget exhausted,
4 a tolerance check failed, 5 a Hermite-Hadamard chain was violated.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BudgetExhausted, DomainError, NonFiniteIntegrand, SingularEvaluationError
from .hh import builtin, hh_mu, hh_nu, randomized_audit
from .measures import MeasureSpec, WeightVector, parse_number, sample, tilde_weights
from .means import MeanKind, NodeVector, evaluate
from .quadrature import QuadratureConfig, current_backend, integrate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3
EXIT_TOLERANCE = 4
EXIT_CHAIN = 5

OUTPUT_DIR_ENV = "HHMEANS_OUTPUT_DIR"
TABLE_TOLERANCE = 5e-4
DEFAULT_KINDS = ("logcal", "logbb", "identric")


class ValidationError(Exception):
    def __init__(self, fieldname: str, message: str):
        super().__init__(f"{fieldname}: {message}")
        self.field = fieldname


@dataclass
class JobSpec:
    command: str
    weights: object = None
    nodes: object = None
    kinds: object = None
    tol: float | None = None
    max_evals: int | None = None
    method: str | None = None
    seed: int = 0
    format: str = "csv"
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def config(self) -> QuadratureConfig:
        kw = {"seed": int(self.seed)}
        if self.tol is not None:
            kw["rel_tol"] = float(self.tol)
            kw["abs_tol"] = float(self.tol) / 10.0
        if self.max_evals is not None:
            kw["max_evals"] = int(self.max_evals)
        if self.method is not None:
            kw["method"] = self.method
        try:
            return QuadratureConfig(**kw)
        except DomainError as exc:
            raise ValidationError("quadrature config", str(exc)) from None


_COMMON = ("weights", "nodes", "kinds", "tol", "max_evals", "method", "seed", "format", "out")


def _job_from(args: argparse.Namespace) -> JobSpec:
    data: dict = {}
    job_path = getattr(args, "job", None)
    if job_path:
        try:
            with open(job_path) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ValidationError("job", f"cannot read {job_path}: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError("job", "job file must hold a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
    # explicit flags override the job file
    for key, val in vars(args).items():
        if key != "job" and val is not None:
            data[key] = val
    command = data.pop("command", None)
    if command not in COMMANDS:
        raise ValidationError("command", f"expected one of {sorted(COMMANDS)}, got {command!r}")
    common = {k: data.pop(k) for k in _COMMON if k in data}
    job = JobSpec(command=command, **common, extra=data)
    if job.format not in ("csv", "json"):
        raise ValidationError("format", f"expected csv or json, got {job.format!r}")
    return job


# ---------------------------------------------------------------- parsing


def _text(value) -> str:
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def _weights(job: JobSpec) -> WeightVector:
    if job.weights is None:
        raise ValidationError("weights", "required")
    try:
        return WeightVector.parse(job.weights if isinstance(job.weights, str) else list(job.weights))
    except DomainError as exc:
        raise ValidationError("weights", str(exc)) from None


def _scalar_nodes(job: JobSpec) -> NodeVector:
    if job.nodes is None:
        raise ValidationError("nodes", "required")
    try:
        return NodeVector.parse(job.nodes if isinstance(job.nodes, str) else list(job.nodes))
    except DomainError as exc:
        raise ValidationError("nodes", str(exc)) from None


def _matrix(value, fieldname: str, column: bool = False) -> np.ndarray:
    """``"1,2;3,4"`` or nested lists into a 2-D array.

    With ``column`` a single flat row such as ``"0,1"`` becomes a column of
    scalar nodes.
    """
    try:
        if isinstance(value, str):
            rows = [[float(parse_number(x)) for x in r.split(",") if x.strip()]
                    for r in value.split(";") if r.strip()]
        else:
            rows = [[float(parse_number(x)) for x in (r if isinstance(r, (list, tuple)) else [r])]
                    for r in value]
        arr = np.array(rows, dtype=float)
    except (DomainError, ValueError) as exc:
        raise ValidationError(fieldname, f"cannot parse {value!r}: {exc}") from None
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError(fieldname, f"rows must have equal length, got {value!r}")
    if column and arr.shape[0] == 1:
        arr = arr.T
    return arr


def _kinds(job: JobSpec) -> list[MeanKind]:
    raw = job.kinds if job.kinds is not None else DEFAULT_KINDS
    names = raw.split(",") if isinstance(raw, str) else list(raw)
    try:
        return [MeanKind(k.strip()) for k in names if k.strip()]
    except ValueError:
        raise ValidationError(
            "kinds", f"expected names from {[k.value for k in MeanKind]}, got {raw!r}"
        ) from None


def _measure(job: JobSpec) -> MeasureSpec:
    kind = job.extra.get("kind", "nu")
    if kind == "uniform":
        n = job.extra.get("n")
        if n is None and job.weights is not None:
            n = _weights(job).n
        if n is None or int(n) < 1:
            raise ValidationError("n", "uniform measure needs --n >= 1")
        return MeasureSpec.uniform(int(n))
    if kind == "nu":
        return MeasureSpec.nu(_weights(job))
    if kind == "mu":
        return MeasureSpec.mu(_weights(job))
    raise ValidationError("kind", f"expected nu, mu or uniform, got {kind!r}")


# ---------------------------------------------------------------- output


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def render(rows: list[dict], job: JobSpec, fmt: str | None = None) -> str:
    fmt = fmt or job.format
    if fmt == "json":
        meta = {
            "version": __version__,
            "command": job.command,
            "config": job.config().as_dict(),
            "seed": int(job.seed),
            "backend": current_backend(),
        }
        doc = {"meta": meta, "rows": [{k: _jsonable(v) for k, v in r.items()} for r in rows]}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    if rows:
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0])
        writer.writerow(header)
        for r in rows:
            writer.writerow([_cell(r.get(k)) for k in header])
    return buf.getvalue()


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if not p.is_absolute() and base:
        p = Path(base) / p
    return p


def _emit(rows: list[dict], job: JobSpec, stdout) -> None:
    text = render(rows, job)
    if job.out:
        path = _out_path(job.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        stdout.write(text)


# ---------------------------------------------------------------- commands


def cmd_mean(job: JobSpec, stdout) -> int:
    w = _weights(job)
    a = _scalar_nodes(job)
    if len(a) != w.n + 1:
        raise ValidationError("nodes", f"{w.n} weights need {w.n + 1} nodes, got {len(a)}")
    cfg = job.config()
    rows = []
    for kind in _kinds(job):
        try:
            res = evaluate(kind, w, a, cfg)
        except DomainError as exc:
            raise ValidationError("kinds", str(exc)) from None
        est = res.estimate
        rows.append({
            "kind": kind.value,
            "weights": _text(job.weights),
            "nodes": _text(job.nodes),
            "value": res.value,
            "error_bound": res.error_bound,
            "evals": est.evals if est else 0,
            "method": est.method_used if est else "closed_form",
        })
    _emit(rows, job, stdout)
    return EXIT_OK


def cmd_measure(job: JobSpec, stdout) -> int:
    spec = _measure(job)
    cfg = job.config()
    x = job.extra
    actions = [k for k in ("at", "normcheck", "tilde", "sample") if x.get(k) not in (None, False)]
    if len(actions) != 1:
        raise ValidationError("action", "choose exactly one of --at, --normcheck, --tilde, --sample")
    action = actions[0]
    status = EXIT_OK
    if action == "at":
        pts = _matrix(x["at"], "at")
        try:
            dens = np.atleast_1d(spec.density(pts))
        except (DomainError, SingularEvaluationError) as exc:
            raise ValidationError("at", str(exc)) from None
        rows = [{"point": ",".join(repr(float(v)) for v in p), "density": float(d)}
                for p, d in zip(pts, dens)]
    elif action == "normcheck":
        est = integrate(lambda pts: np.ones(len(pts)), spec, cfg)
        dev = abs(1.0 - est.value)
        ok = dev <= max(1e-8, est.error_bound)
        rows = [{"measure": spec.kind, "value": est.value, "abs_deviation": dev,
                 "error_bound": est.error_bound, "evals": est.evals, "ok": ok}]
        status = EXIT_OK if ok else EXIT_TOLERANCE
    elif action == "tilde":
        if spec.kind != "nu":
            raise ValidationError("kind", "tilde weights belong to the nu measure")
        tw = tilde_weights(spec.weights, spec.exponents)
        rows = [{"index": i + 1, "weight": spec.weights.full[i], "tilde_weight": t}
                for i, t in enumerate(tw)]
    else:
        try:
            count = int(x["sample"])
        except (TypeError, ValueError):
            raise ValidationError("sample", f"expected a count, got {x['sample']!r}") from None
        if count < 0:
            raise ValidationError("sample", "count must be nonnegative")
        pts = sample(spec, count, seed=int(job.seed))
        rows = [{f"t{j + 1}": float(v) for j, v in enumerate(p)} for p in pts]
    _emit(rows, job, stdout)
    return status


def cmd_hh(job: JobSpec, stdout) -> int:
    w = _weights(job)
    x = job.extra
    measure = x.get("measure", "mu")
    if measure not in ("nu", "mu"):
        raise ValidationError("measure", f"expected nu or mu, got {measure!r}")
    if job.nodes is None:
        raise ValidationError("nodes", "required")
    nodes = _matrix(job.nodes, "nodes", column=True)
    qmat = _matrix(x["q"], "q") if x.get("q") is not None else None
    name = x.get("f", "exp")
    if name == "quadform" and qmat is None:
        qmat = np.eye(nodes.shape[1])
    try:
        f = builtin(name, qmat)
        run = hh_nu if measure == "nu" else hh_mu
        report = run(f, w, nodes, job.config())
    except DomainError as exc:
        raise ValidationError("f" if "function" in str(exc) else "nodes", str(exc)) from None
    row = {"weights": _text(job.weights), "nodes": _text(job.nodes)}
    row.update(report.as_dict())
    _emit([row], job, stdout)
    return EXIT_OK if report.chain_ok else EXIT_CHAIN


def cmd_audit(job: JobSpec, stdout) -> int:
    x = job.extra
    trials = int(x.get("trials", 500))
    if trials < 0:
        raise ValidationError("trials", "must be nonnegative")
    summary = randomized_audit(int(job.seed), trials, job.config(), workers=int(x.get("workers", 1)))
    if job.out:
        rows = [{"index": r["index"], "n": r["n"], "function": r["function"], "ok": r["ok"],
                 "worst_slack": r["worst"], "error": r.get("error", "")} for r in summary.rows]
        path = _out_path(job.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render(rows, job))
    worst = summary.worst_slack if math.isfinite(summary.worst_slack) else None
    stdout.write(f"{summary.line()}\n")
    stdout.write(f"worst slack: {worst!r}\n")
    for name in sorted(summary.by_function):
        ok, total = summary.by_function[name]
        stdout.write(f"  {name}: {ok}/{total}\n")
    return EXIT_OK if summary.ok else EXIT_CHAIN


# reference values as printed, with weights as written in the source tables;
# n = 1 rows give the weight of the *second* node (see _row_weights)
TABLES = {
    "logmeans_multivariate": [
        ("1/3,1/6", "0.5,1,2", "logcal", 1.19393),
        ("1/3,1/6", "0.5,1,2", "logbb", 1.19612),
        ("0.2,0.25", "1.3,1.5,1.9", "logcal", 1.66722),
        ("0.2,0.25", "1.3,1.5,1.9", "logbb", 1.66599),
    ],
    "logmeans_bivariate": [
        ("1/3", "2,1", "logcal", 1.60804),
        ("1/3", "2,1", "logbb", 1.62944),
        ("1/3", "2,1", "bivl", 1.61423),
        ("0.9", "4,3", "logcal", 3.09329),
        ("0.9", "4,3", "logbb", 3.08815),
        ("0.9", "4,3", "bivl", 3.09162),
    ],
    "identric_bivariate": [
        ("3/4", "3,1", "identric", 1.40952),
        ("3/4", "3,1", "bivi", 1.43367),
        ("0.2", "6.5,6", "identric", 6.39950),
        ("0.2", "6.5,6", "bivi", 6.39893),
    ],
}

# pairs whose order flips between the two inputs
NONCOMPARABILITY = [
    ("logcal<logbb", "1/3,1/6", "0.5,1,2", ("logcal", 1.19393), ("logbb", 1.19612)),
    ("logcal>logbb", "0.2,0.25", "1.3,1.5,1.9", ("logcal", 1.66722), ("logbb", 1.66599)),
    ("logcal<identric", "1/3,1/6", "0.5,1,2", ("logcal", 1.19393), ("identric", 1.26771)),
    ("logcal>identric", "0.05,0.2", "19,1,1", ("logcal", 1.36040), ("identric", 1.35253)),
]


def _row_weights(text: str) -> WeightVector:
    parts = text.split(",")
    if len(parts) == 1:
        # one-parameter rows weight the second node
        return WeightVector((1 - parse_number(parts[0]),))
    return WeightVector.parse(text)


def _table_row(weights, nodes, kind, ref, cfg) -> dict:
    w = _row_weights(weights)
    res = evaluate(kind, w, NodeVector.parse(nodes), cfg)
    return {
        "weights": weights,
        "weights_used": ",".join(repr(v) for v in w.lam),
        "nodes": nodes,
        "mean": kind,
        "reference_value": ref,
        "computed_value": res.value,
        "abs_diff": abs(res.value - ref),
        "error_bound": res.error_bound,
    }


def build_tables(cfg: QuadratureConfig) -> dict[str, list[dict]]:
    out = {name: [_table_row(*spec, cfg) for spec in specs] for name, specs in TABLES.items()}
    rows = []
    for label, weights, nodes, (k1, r1), (k2, r2) in NONCOMPARABILITY:
        first = _table_row(weights, nodes, k1, r1, cfg)
        second = _table_row(weights, nodes, k2, r2, cfg)
        expected = label[len(k1)]
        gap = first["computed_value"] - second["computed_value"]
        margin = first["error_bound"] + second["error_bound"]
        got = "<" if gap < -margin else ">" if gap > margin else "?"
        for r in (first, second):
            r["comparison"] = label
            r["expected_order"] = expected
            r["computed_order"] = got
            rows.append(r)
    out["noncomparability"] = rows
    return out


def table_failures(tables: dict[str, list[dict]]) -> list[str]:
    bad = []
    for name, rows in tables.items():
        for r in rows:
            if not r["abs_diff"] <= TABLE_TOLERANCE:
                bad.append(f"{name}: {r['mean']} at weights {r['weights']}, nodes {r['nodes']}: "
                           f"computed {r['computed_value']!r}, reference {r['reference_value']!r}")
            if r.get("expected_order") not in (None, r.get("computed_order")):
                bad.append(f"{name}: order {r['comparison']} not reproduced "
                           f"(got {r['computed_order']})")
    return bad


def cmd_tables(job: JobSpec, stdout) -> int:
    tables = build_tables(job.config())
    outdir = Path(job.out) if job.out else Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    outdir.mkdir(parents=True, exist_ok=True)
    for name, rows in tables.items():
        (outdir / f"{name}.{job.format}").write_text(render(rows, job))
        worst = max(r["abs_diff"] for r in rows)
        stdout.write(f"{name}: {len(rows)} rows, max abs_diff {worst:.3g}\n")
    bad = table_failures(tables)
    for line in bad:
        stdout.write(f"FAIL {line}\n")
    return EXIT_TOLERANCE if bad else EXIT_OK


COMMANDS = {
    "mean": cmd_mean,
    "measure": cmd_measure,
    "hh": cmd_hh,
    "tables": cmd_tables,
    "audit": cmd_audit,
}


# ---------------------------------------------------------------- argparse


def _common_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps unset flags out of the namespace so a job file can fill them
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--job", help="JSON job file; flags given explicitly override it")
    p.add_argument("--tol", type=float, help="relative tolerance (absolute is tol/10)")
    p.add_argument("--max-evals", dest="max_evals", type=int)
    p.add_argument("--method", choices=("auto", "adaptive", "mc"))
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out", help=f"output path (relative paths resolve under ${OUTPUT_DIR_ENV})")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="hhmeans",
        parents=[common],
        argument_default=argparse.SUPPRESS,
        description="Weighted logarithmic and identric means on the simplex.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sd = argparse.SUPPRESS

    p = sub.add_parser("mean", parents=[common], argument_default=sd, help="evaluate weighted means")
    p.add_argument("--weights", help="lam_1..lam_n, fractions allowed: 1/3,1/6")
    p.add_argument("--nodes", help="a_1..a_{n+1}")
    p.add_argument("--kinds", help=f"comma list from {[k.value for k in MeanKind]}")

    p = sub.add_parser("measure", parents=[common], argument_default=sd,
                       help="densities, normalization, tilde weights, samples")
    p.add_argument("--kind", choices=("nu", "mu", "uniform"))
    p.add_argument("--weights")
    p.add_argument("--n", type=int, help="dimension for the uniform measure")
    p.add_argument("--at", help="points t, ';' between points: 0.2,0.3;0.1,0.1")
    p.add_argument("--normcheck", action="store_true")
    p.add_argument("--tilde", action="store_true")
    p.add_argument("--sample", type=int, metavar="N")

    p = sub.add_parser("hh", parents=[common], argument_default=sd,
                       help="one Hermite-Hadamard chain")
    p.add_argument("--measure", choices=("nu", "mu"))
    p.add_argument("--f", help="exp, square, neglog, inverse, log, identity, lse, quadform")
    p.add_argument("--weights")
    p.add_argument("--nodes", help="scalars 0,1 or vectors 0,1;1,0;2,2")
    p.add_argument("--q", help="quadform matrix rows, ';' separated")

    p = sub.add_parser("tables", parents=[common], argument_default=sd,
                       help="recompute the reference tables (--out is a directory)")

    p = sub.add_parser("audit", parents=[common], argument_default=sd,
                       help="randomized Hermite-Hadamard audit")
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        job = _job_from(args)
        return COMMANDS[job.command](job, stdout)
    except ValidationError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (DomainError, SingularEvaluationError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except NonFiniteIntegrand as exc:
        stderr.write(f"error: nodes: {exc}\n")
        return EXIT_INVALID
    except BudgetExhausted as exc:
        est = exc.estimate
        stderr.write(f"error: {exc}\n")
        if est is not None:
            stderr.write(f"integral estimate so far {est.value!r} with error bound {est.error_bound!r}\n")
        return EXIT_BUDGET


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
