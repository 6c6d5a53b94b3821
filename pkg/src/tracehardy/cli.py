"""Command-line front end.

Subcommands ``constants``, ``profile``, ``verify``, ``sharpness``,
``logsob`` and ``sweep`` print JSON (default) or CSV to stdout or
``--out``; diagnostics go to stderr.

Exit codes: 0 success, 2 usage or invalid parameters, 3 constant identity
violation, 4 failed certificate, 5 sharpness gap above ``--tol``.

JSON documents carry ``schema_version``; each row has ``params``,
``values``, ``errors``, ``flags``, ``seed`` and ``version``. CSV output is
long-format with the frozen header :data:`CSV_COLUMNS`.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from . import __version__
from .constants import (CONSTANT_KINDS, InequalityParams, ParameterRangeError,
                        constant_identities, sharp_constant)
from .integrate.geometry import ConeDomain, QuadratureSpec

SCHEMA_VERSION = 1
CSV_COLUMNS = ("row", "n", "s", "beta", "quantity", "value", "error", "flag")
EXIT_USAGE, EXIT_IDENTITY, EXIT_CERTIFICATE, EXIT_GAP = 2, 3, 4, 5

log = logging.getLogger("tracehardy")


class UsageError(Exception):
    """Invalid command-line input (exit code 2)."""


@dataclass
class ReportRow:
    params: dict
    values: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    seed: Optional[int] = None
    wall_time: Optional[float] = None

    def as_dict(self, timing=False):
        d = {"params": self.params, "values": _clean(self.values),
             "errors": _clean(self.errors), "flags": _clean(self.flags),
             "seed": self.seed, "version": __version__}
        if timing:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class SweepPlan:
    grid: List[InequalityParams]
    task: str
    spec: QuadratureSpec
    fmt: str = "json"

    def __post_init__(self):
        if not self.grid:
            raise UsageError("parameter grid is empty")


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ------------------------------------------------------------- parsing


def _floats(text, name):
    try:
        vals = [float(x) for x in str(text).replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"--{name}: expected numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"--{name}: empty list")
    return vals


def _ints(text, name):
    vals = _floats(text, name)
    if any(v != int(v) for v in vals):
        raise UsageError(f"--{name}: expected integers, got {text!r}")
    return [int(v) for v in vals]


def _grid(args) -> List[InequalityParams]:
    out = []
    for n, s, b in product(_ints(args.n, "n"), _floats(args.s, "s"),
                           _floats(args.beta, "beta")):
        try:
            out.append(InequalityParams(n, s, b))
        except (ParameterRangeError, ValueError) as exc:
            raise UsageError(f"invalid grid point n={n}, s={s}, beta={b}: {exc}")
    return out


def _single(args) -> InequalityParams:
    grid = _grid(args)
    if len(grid) != 1:
        raise UsageError("this command takes a single (n, s, beta)")
    return grid[0]


def _cone(args, p: InequalityParams) -> ConeDomain:
    if args.cone_normals:
        try:
            cone = ConeDomain.from_file(args.cone_normals)
        except OSError as exc:
            raise UsageError(f"cannot read {args.cone_normals}: {exc}") from None
        if cone.dim != p.n + 1:
            raise UsageError(f"cone dimension {cone.dim} != n + 1 = {p.n + 1}")
        return cone
    return ConeDomain.halfspace(p.n + 1)


def _spec(args) -> QuadratureSpec:
    return QuadratureSpec(seed=args.seed)


def _threads() -> int:
    raw = os.environ.get("THL_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"THL_THREADS must be an integer, got {raw!r}") from None


# ---------------------------------------------------------- commands


def _constants_row(p: InequalityParams, kinds) -> ReportRow:
    row = ReportRow(p.as_dict())
    for k in kinds:
        try:
            row.values[k] = sharp_constant(k, p)
            row.flags[f"{k}_in_range"] = True
        except (ParameterRangeError, ValueError):
            row.values[k] = None
            row.flags[f"{k}_in_range"] = False
    rep = constant_identities([p])
    row.values["identity_max_deviation"] = rep.max_deviation
    row.flags["identities_ok"] = rep.passed
    return row


def cmd_constants(plan: SweepPlan, kinds) -> tuple:
    """One row per grid point with the requested constants and identity check."""
    if not kinds:
        raise UsageError("--kinds is empty")
    bad = [k for k in kinds if k not in CONSTANT_KINDS]
    if bad:
        raise UsageError(f"unknown kinds {bad}; choose from {CONSTANT_KINDS}")
    rows = _map(lambda p: _constants_row(p, kinds), plan.grid)
    code = 0 if all(r.flags["identities_ok"] for r in rows) else EXIT_IDENTITY
    return rows, {"identities_ok": code == 0}, code


def cmd_profile(p: InequalityParams, geometry: str, points: int) -> tuple:
    """Profile values on a grid with the ODE residual and shape checks."""
    from .profiles import (build_cone_profile, build_half_profile, cone_scan,
                           half_ode_residual, cone_ode_residual)
    if points < 2:
        raise UsageError("--points must be >= 2")
    rows = []
    if geometry == "cone":
        prof = build_cone_profile(p)
        z = np.linspace(0.0, 1.0, points)
        w = prof.omega(z, deriv=0)
        dw = np.full_like(z, np.nan)
        dw[1:] = prof.omega(z[1:], deriv=1)[1]
        for zi, wi, di in zip(z, w, dw):
            rows.append(ReportRow(p.as_dict(), {"z": zi, "omega": wi, "domega": di}))
        zz = np.linspace(0.01, 0.99, 100)
        summary = {"H": prof.H, "residual": cone_ode_residual(prof, zz),
                   **cone_scan(prof, 2000)}
    else:
        if not 0 <= p.beta <= 1:
            raise UsageError("half-space profiles need 0 <= beta <= 1")
        prof = build_half_profile(p.s, p.beta)
        y = np.linspace(0.0, 10.0, points)
        w, dw = prof.omega(y, deriv=1)
        for yi, wi, di in zip(y, w, dw):
            rows.append(ReportRow(p.as_dict(), {"y": yi, "omega": wi, "domega": di}))
        summary = {"k": prof.k, "case": prof.case_tag,
                   "residual": half_ode_residual(prof, np.geomspace(1e-2, 50, 100))}
    return rows, summary, 0


def _margin_ok(cert, tol):
    return cert.margin >= -cert.error_estimate - tol


def _cert_row(p, tag, name, cert, tol, seed):
    ok = _margin_ok(cert, tol)
    return ReportRow(p.as_dict(), {"field": name, "certificate": tag,
                                   "lhs": cert.lhs, "margin": cert.margin},
                     {"margin": cert.error_estimate}, {"passed": ok}, seed)


def cmd_verify(geometry: str, p: InequalityParams, corpus_size: int, seed: int,
               tol: float = 0.0, cone: ConeDomain | None = None,
               spec: QuadratureSpec | None = None) -> tuple:
    """Certificates over the seeded corpus; exit 4 if any fails."""
    from .corpus import cone_corpus, halfspace_corpus, whole_line_corpus
    from .families import improved_certificate, trace_log_checks
    from .integrate import (cone_certificate, halfspace_certificate,
                            whole_line_certificate)
    if corpus_size < 1:
        raise UsageError("--corpus-size must be >= 1")
    jobs: List[Callable] = []
    if geometry == "cone":
        cone = cone or ConeDomain.halfspace(p.n + 1)
        fields = cone_corpus(cone, corpus_size, seed)
        is_half = cone.m == 1 and np.allclose(cone.normals[0], np.eye(p.n + 1)[-1])
        for u in fields:
            jobs.append(lambda u=u: [("cone_trace_hardy", u.name,
                                      cone_certificate(u, cone, p, spec))])
            jobs.append(lambda u=u: [("improved_K5", u.name,
                                      improved_certificate(u, cone, p, 1.0, 5, spec))])
            if is_half and p.n == 2:
                jobs.append(lambda u=u: [
                    (f"log_{k}", u.name, trace_log_checks(u, p.n, p.s, k, spec))
                    for k in ("LS", "LH")])
    else:
        if not 0 <= p.beta <= 1:
            raise UsageError("half-space certificates need 0 <= beta <= 1")
        for u in halfspace_corpus(p.n, corpus_size, seed):
            jobs.append(lambda u=u: [("halfspace_trace_hardy", u.name,
                                      halfspace_certificate(u, p, spec))])
        for u in whole_line_corpus(p.n, corpus_size, seed):
            jobs.append(lambda u=u: [("whole_line_hardy", u.name,
                                      whole_line_certificate(u, p.n, spec))])
    rows = []
    for res in _map(lambda job: job(), jobs):
        for tag, name, cert in res:
            rows.append(_cert_row(cert.params if tag == "whole_line_hardy" else p,
                                  tag, name, cert, tol, seed))
    margins = [r.values["margin"] for r in rows]
    ok = all(r.flags["passed"] for r in rows)
    summary = {"certificates": len(rows), "min_margin": min(margins),
               "all_passed": ok}
    return rows, summary, 0 if ok else EXIT_CERTIFICATE


def cmd_sharpness(geometry: str, p: InequalityParams, eps_schedule, tol=0.05,
                  cone: ConeDomain | None = None, delta: float | None = None,
                  spec: QuadratureSpec | None = None) -> tuple:
    """Quotients along the schedule; exit 5 if the final gap exceeds ``tol``."""
    from .families import FamilyError, sharpness_study
    eps = list(eps_schedule)
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise UsageError("--eps-schedule must be strictly decreasing")
    if geometry == "cone":
        family = "cone_truncation"
    elif p.beta == 1:
        family, delta = "half_critical", 0.25 if delta is None else delta
    else:
        family = "half_generic"
    try:
        res = sharpness_study(family, p, eps, cone=cone, delta=delta, spec=spec)
    except (FamilyError, ParameterRangeError) as exc:
        raise UsageError(str(exc)) from None
    rows = [ReportRow(p.as_dict(), {"eps": e, "quotient": q}, {"quotient": err},
                      {"family": family})
            for e, q, err in zip(res.eps, res.quotients, res.errors)]
    summary = {"family": family, "sharp": res.sharp, "limit": res.limit,
               "gap": res.gap, "monotone": res.monotone, "threshold": tol}
    return rows, summary, 0 if res.gap <= tol else EXIT_GAP


def cmd_logsob(p: InequalityParams, corpus_size: int, seed: int) -> tuple:
    """Half-line deficits, radial log quotients and trace-log certificates."""
    from .corpus import radial_corpus
    from .families import (logsob_extremal, logsob_halfline, ls_extremal_profile,
                           lh_extremal_profile, radial_field, radial_log_quotients,
                           to_sup_variable, trace_log_checks)
    n, s = p.n, p.s
    a = 2 * n / (1 - s)
    rows = []
    for lam in (1.0, 2.0):
        d, _, _ = logsob_halfline(logsob_extremal(a, lam), a)
        rows.append(ReportRow(p.as_dict(), {"test": f"halfline_extremal_lam{lam:g}",
                                            "value": d}, {}, {"passed": abs(d) <= 1e-8}))
    for kind, prof, ref in (("LS", ls_extremal_profile(n, s), "cls_r"),
                            ("LH", lh_extremal_profile(n, s), "clh_r")):
        q = radial_log_quotients(to_sup_variable(prof, s), n, s, kind)
        c = sharp_constant(ref, p)
        rows.append(ReportRow(p.as_dict(), {"test": f"radial_{kind}", "value": q,
                                            "reference": c},
                              {"value": abs(q - c)}, {"passed": abs(q / c - 1) <= 1e-6}))
        cert = trace_log_checks(radial_field(prof, n), n, s, kind)
        rows.append(ReportRow(p.as_dict(), {"test": f"trace_{kind}_extremal",
                                            "value": cert.margin},
                              {"value": cert.error_estimate},
                              {"passed": _margin_ok(cert, 0.0)}))
    if corpus_size:
        for prof in radial_corpus(corpus_size, seed):
            d, _, _ = logsob_halfline(prof, a)
            rows.append(ReportRow(p.as_dict(), {"test": f"halfline_{prof.name}",
                                                "value": d}, {},
                                  {"passed": d >= -1e-6}, seed))
    ok = all(r.flags["passed"] for r in rows)
    return rows, {"all_passed": ok}, 0 if ok else EXIT_CERTIFICATE


def cmd_sweep(plan: SweepPlan, args) -> tuple:
    """Run ``plan.task`` over the grid in parallel; output keeps grid order."""
    def one(p):
        if plan.task == "constants":
            return cmd_constants(SweepPlan([p], "constants", plan.spec),
                                 _kinds(args))
        if plan.task == "verify":
            return cmd_verify(args.geometry, p, args.corpus_size, args.seed,
                              args.tol or 0.0, _cone(args, p), plan.spec)
        if plan.task == "sharpness":
            return cmd_sharpness(args.geometry, p,
                                 _floats(args.eps_schedule, "eps-schedule"),
                                 args.tol if args.tol is not None else 0.05,
                                 _cone(args, p), args.delta, plan.spec)
        if plan.task == "logsob":
            return cmd_logsob(p, args.corpus_size, args.seed)
        raise UsageError(f"unknown sweep task {plan.task!r}")

    rows, summaries, code = [], [], 0
    for p, (r, sm, c) in zip(plan.grid, _map(one, plan.grid)):
        rows.extend(r)
        summaries.append({"params": p.as_dict(), **sm})
        code = max(code, c)
    return rows, {"points": summaries}, code


def _map(fn, items):
    def timed(it):
        t0 = time.perf_counter()
        res = fn(it)
        _stamp(res, time.perf_counter() - t0)
        return res

    workers = _threads()
    items = list(items)
    if workers == 1 or len(items) < 2:
        return [timed(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(timed, items))


def _stamp(res, dt):
    if isinstance(res, ReportRow):
        if res.wall_time is None:
            res.wall_time = dt
    elif isinstance(res, (list, tuple)):
        rows = [r for r in res if isinstance(r, ReportRow)]
        rows += [r for part in res if isinstance(part, list)
                 for r in part if isinstance(r, ReportRow)]
        for r in rows:
            if r.wall_time is None:
                r.wall_time = dt / max(1, len(rows))


# -------------------------------------------------------------- output


def _csv_rows(rows: List[ReportRow]):
    for i, r in enumerate(rows):
        p = r.params
        flag = ";".join(f"{k}={_clean(v)}" for k, v in r.flags.items())
        for k, v in r.values.items():
            err = r.errors.get(k)
            yield (i, p.get("n"), p.get("s"), p.get("beta"), k,
                   _clean(v) if not isinstance(v, str) else v,
                   _clean(err), flag)


def render(command: str, rows: List[ReportRow], summary: dict, fmt: str,
           timing=False) -> str:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command,
               "version": __version__,
               "rows": [r.as_dict(timing) for r in rows],
               "summary": _clean(summary)}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in _csv_rows(rows):
        w.writerow(["" if x is None else x for x in rec])
    return buf.getvalue()


def plot_data(rows: List[ReportRow], x_key="beta") -> str:
    """Companion ``curve,x,y`` table: one curve per numeric value and (n, s)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("curve", "x", "y"))
    for r in rows:
        p = r.params
        for k, v in r.values.items():
            if isinstance(v, (int, float, np.floating)) and v is not None \
                    and math.isfinite(float(v)):
                w.writerow((f"{k}@n={p['n']},s={p['s']:g}", p[x_key], float(v)))
    return buf.getvalue()


def _emit(text: str, out: Optional[str], companion: Optional[str] = None):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    try:
        path.write_text(text)
        if companion is not None:
            path.with_suffix(".plot.csv").write_text(companion)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------- main


def _kinds(args):
    if args.kinds is None:
        return ["H_cone", "k_half", "trace_sobolev"]
    return [k for k in args.kinds.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", default="2", help="dimension n (list for grids)")
    common.add_argument("--s", default="0", help="weight exponent s in (-1, 1)")
    common.add_argument("--beta", default="2", help="interpolation parameter")
    common.add_argument("--geometry", choices=("cone", "halfspace"), default="cone")
    common.add_argument("--cone-normals", default=None,
                        help="file of unit inward normals, one per line")
    common.add_argument("--kinds", default=None, help="constant kinds (comma list)")
    common.add_argument("--eps-schedule", default="1e-1,1e-2,1e-3")
    common.add_argument("--delta", type=float, default=None,
                        help="critical family exponent (beta = 1)")
    common.add_argument("--corpus-size", type=int, default=20)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None,
                        help="gap threshold (sharpness) or margin slack (verify)")
    common.add_argument("--points", type=int, default=11, help="profile grid size")
    common.add_argument("--task", default="constants",
                        choices=("constants", "verify", "sharpness", "logsob"))
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--timing", action="store_true",
                        help="add wall times to JSON rows (breaks byte identity)")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="tracehardy", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("constants", "sharp constant table with identity checks"),
                       ("profile", "profile values and ODE residuals"),
                       ("verify", "inequality certificates on a seeded corpus"),
                       ("sharpness", "extremizer family convergence"),
                       ("logsob", "logarithmic inequalities"),
                       ("sweep", "run a task over a parameter grid")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s: %(message)s")
    try:
        spec = _spec(args)
        cmd = args.command
        if cmd == "constants":
            rows, summary, code = cmd_constants(
                SweepPlan(_grid(args), "constants", spec), _kinds(args))
        elif cmd == "profile":
            rows, summary, code = cmd_profile(_single(args), args.geometry, args.points)
        elif cmd == "verify":
            p = _single(args)
            rows, summary, code = cmd_verify(args.geometry, p, args.corpus_size,
                                             args.seed, args.tol or 0.0,
                                             _cone(args, p), spec)
        elif cmd == "sharpness":
            p = _single(args)
            rows, summary, code = cmd_sharpness(
                args.geometry, p, _floats(args.eps_schedule, "eps-schedule"),
                0.05 if args.tol is None else args.tol, _cone(args, p),
                args.delta, spec)
        elif cmd == "logsob":
            rows, summary, code = cmd_logsob(_single(args), args.corpus_size,
                                             args.seed)
        else:
            plan = SweepPlan(_grid(args), args.task, spec, args.format)
            rows, summary, code = cmd_sweep(plan, args)
        text = render(cmd, rows, summary, args.format, args.timing)
        companion = plot_data(rows) if cmd == "sweep" and args.out else None
        _emit(text, args.out, companion)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterRangeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if code:
        log.warning("exit code %d", code)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
