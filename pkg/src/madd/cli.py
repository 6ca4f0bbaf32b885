"""Command-line front end: spec ingestion, dispatch, serialization.

Verbs: validate, moments, section, boundary, green, asym, compare,
simulate, checks.  Specs are JSON files (1-based layer indices), tabular
output goes to CSV, scalars are printed with 12 significant digits.
Exit codes: 0 ok, 1 failed checks, 2 spec error, 3 precondition,
4 numeric, 5 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import boundary as bdy
from . import green as grn
from . import process as prc
from . import sections as sct
from . import transforms as tfm
from .errors import MaddError, SpecError


def fmt(v) -> str:
    return f"{float(v):.12g}"


def fmt_vec(v) -> str:
    return "(" + ", ".join(fmt(t) for t in np.atleast_1d(v)) + ")"


def load_spec(path: str) -> prc.ProcessSpec:
    """Read and structurally validate a process description file."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: parse error at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return prc.ProcessSpec.from_dict(obj)


@dataclass(frozen=True)
class Command:
    verb: str
    spec_path: str
    options: dict = field(default_factory=dict)


@dataclass
class RunReport:
    command: Command
    wall_time: float
    outputs: dict
    warnings: list


def _parse_vec(text: str, d: int, what: str) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise SpecError(f"cannot parse {what} '{text}'") from None
    if v.size != d:
        raise SpecError(f"{what} has {v.size} coordinates, spec has d={d}")
    return v


def _parse_ivec(text: str, d: int, what: str) -> np.ndarray:
    v = _parse_vec(text, d, what)
    iv = np.round(v).astype(np.int64)
    if np.abs(iv - v).max() > 0:
        raise SpecError(f"{what} must have integer coordinates, got '{text}'")
    return iv


def _layer(opt: dict, key: str, p: int) -> int:
    val = int(opt.get(key, 1))
    if not 1 <= val <= p:
        raise SpecError(f"layer --{key}={val} out of range 1..{p}")
    return val - 1


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


# -- verb implementations -------------------------------------------------------


def _run_validate(spec, opt, out):
    report = prc.validate(spec)
    for name in (
        "rows_stochastic",
        "markov_irreducible",
        "chain_irreducible",
        "aperiodic",
        "non_centered",
    ):
        out[name] = getattr(report, name)
    out["diagnostics"] = report.diagnostics
    return []


def _run_moments(spec, opt, out):
    mom = prc.moments(spec)
    out["pi"] = fmt_vec(mom.pi)
    out["global_drift"] = fmt_vec(mom.global_drift)
    for i in range(spec.p):
        for j in range(spec.p):
            if spec.jumps[i][j]:
                out[f"local_drift_{i + 1}_{j + 1}"] = fmt_vec(mom.local_drifts[i, j])
    return []


def _run_section(spec, opt, out):
    g = sct.appropriate_section(spec)
    sigma = sct.energy_matrix(spec)
    for i in range(spec.p):
        out[f"g_row_{i + 1}"] = fmt_vec(g.g[i])
    for k in range(spec.d):
        out[f"sigma_row_{k + 1}"] = fmt_vec(sigma.sigma[k])
    return []


def _run_boundary(spec, opt, out):
    n = int(opt.get("directions", 16))
    trace = bdy.boundary_trace(spec, n)
    out["directions"] = len(trace.points)
    out["max_consecutive_step"] = fmt(trace.max_step)
    out["max_gamma_residual"] = fmt(trace.max_gamma_residual)
    if opt.get("out"):
        d = spec.d
        header = (
            [f"u_{k + 1}" for k in range(d)]
            + [f"c_{k + 1}" for k in range(d)]
            + [f"m_c_{k + 1}" for k in range(d)]
            + ["rho_residual", "gamma_residual"]
        )
        rows = [
            list(pt.u) + list(pt.c) + list(pt.m_c) + [abs(pt.rho - 1.0), pt.gamma_residual]
            for pt in trace.points
        ]
        _write_csv(opt["out"], header, rows)
        out["csv"] = opt["out"]
    return []


def _run_green(spec, opt, out):
    i = _layer(opt, "i", spec.p)
    j = _layer(opt, "j", spec.p)
    x = _parse_ivec(opt.get("x", "0"), spec.d, "--x")
    method = opt.get("method", "series")
    if method == "series":
        est = grn.green_series(spec, i, x, j, opt.get("horizon"))
    elif method == "resolvent":
        sched = None if opt.get("auto_schedule") else grn.DEFAULT_SCHEDULE
        est = grn.green_resolvent(spec, i, x, j, schedule=sched, grid_size=opt.get("grid"))
    elif method in ("mc", "monte-carlo"):
        est = grn.green_mc(
            spec,
            i,
            x,
            j,
            n_paths=int(opt.get("paths", 100_000)),
            horizon=int(opt.get("horizon") or 500),
            seed=int(opt.get("seed", 0)),
        )
    else:
        raise SpecError(f"unknown green method '{method}'")
    out["method"] = est.method
    out["value"] = fmt(est.value)
    out["error"] = fmt(est.error)
    warnings = []
    if not est.params.get("converged", True):
        warnings.append("series horizon exhausted before requested tolerance")
    return warnings


def _run_asym(spec, opt, out):
    i = _layer(opt, "i", spec.p)
    j = _layer(opt, "j", spec.p)
    expo = opt.get("m_exponent")
    expo = float(expo) if expo is not None else None
    if opt.get("x"):
        x = _parse_ivec(opt["x"], spec.d, "--x")
        out["value"] = fmt(grn.asymptotic_green(spec, i, x, j, expo))
        u = np.asarray(x, dtype=float)
        u = u / np.linalg.norm(u)
    else:
        u = _parse_vec(opt.get("u", "1"), spec.d, "--u")
        u = u / np.linalg.norm(u)
    coeff = grn.asymptotic_coefficient(spec, u, expo)
    out["u"] = fmt_vec(coeff.u)
    out["c"] = fmt_vec(coeff.c)
    out["m_c_norm"] = fmt(coeff.m_c_norm)
    out["m_exponent"] = fmt(coeff.m_exponent)
    out["chi"] = fmt(coeff.chi[i, j])
    return []


def _run_compare(spec, opt, out):
    i = _layer(opt, "i", spec.p)
    j = _layer(opt, "j", spec.p)
    u = _parse_vec(opt.get("u", "1"), spec.d, "--u")
    u = u / np.linalg.norm(u)
    radii = [float(t) for t in opt.get("radii", "10,20").split(",")]
    methods = tuple(opt.get("methods", "series,resolvent").split(","))
    table = grn.compare(
        spec,
        u,
        radii,
        i,
        j,
        methods=methods,
        mc_paths=int(opt.get("paths", 100_000)),
        seed=int(opt.get("seed", 0)),
    )
    for row in table.rows:
        out[f"r={fmt(row.r)} {row.method}"] = (
            f"value={fmt(row.value)} error={fmt(row.error)} "
            f"asym={fmt(row.asym)} ratio={fmt(row.ratio)}"
        )
    out["max_doob_residual"] = fmt(max(table.doob_residuals))
    if opt.get("out"):
        d = spec.d
        header = ["r"] + [f"x_{k + 1}" for k in range(d)] + [
            "method",
            "value",
            "error",
            "asym",
            "ratio",
        ]
        rows = [
            [row.r] + list(row.x) + [row.method, row.value, row.error, row.asym, row.ratio]
            for row in table.rows
        ]
        _write_csv(opt["out"], header, rows)
        out["csv"] = opt["out"]
    return []


def _run_simulate(spec, opt, out):
    i = _layer(opt, "i", spec.p)
    n_paths = int(opt.get("paths", 10_000))
    horizon = int(opt.get("horizon") or 200)
    seed = int(opt.get("seed", 0))
    cum, dxs, nxt = grn._jump_tables(spec)
    rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
    pos = np.zeros((n_paths, spec.d), dtype=np.int64)
    lay = np.full(n_paths, i, dtype=np.int64)
    for _ in range(horizon):
        u = rng.random(n_paths)
        idx = (u[:, None] > cum[lay]).sum(axis=1)
        pos += dxs[lay, idx]
        lay = nxt[lay, idx]
    mean = pos.mean(axis=0)
    out["paths"] = n_paths
    out["horizon"] = horizon
    out["mean_endpoint"] = fmt_vec(mean)
    out["mean_endpoint_per_step"] = fmt_vec(mean / horizon)
    out["layer_occupancy"] = fmt_vec(np.bincount(lay, minlength=spec.p) / n_paths)
    if opt.get("out"):
        header = [f"x_{k + 1}" for k in range(spec.d)] + ["layer"]
        rows = [list(map(int, pos[k])) + [int(lay[k]) + 1] for k in range(n_paths)]
        _write_csv(opt["out"], header, rows)
        out["csv"] = opt["out"]
    return []


def _run_checks(spec, opt, out):
    """Full invariant battery; records one PASS/FAIL line per check."""
    from . import _fd

    failures = []
    lines = []

    def check(name, ok, detail=""):
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        if not ok:
            failures.append(name)

    report = prc.require_assumptions(spec, non_centered=True)
    mom = prc.moments(spec)
    sigma = sct.energy_matrix(spec).sigma

    kchk = tfm.k_derivative_check(spec)
    check("k gradient at 0 equals i*drift", kchk.grad_residual < 1e-6, f"res={kchk.grad_residual:.2e}")
    check("k hessian at 0 equals -sigma", kchk.hess_residual < 1e-6, f"res={kchk.hess_residual:.2e}")

    ev0 = bdy.rho_eval(spec, np.zeros(spec.d))
    check("rho(0) = 1", abs(ev0.rho - 1.0) < 1e-10, f"rho={ev0.rho:.12g}")
    check(
        "grad rho(0) equals drift",
        float(np.abs(ev0.grad - mom.global_drift).max()) < 1e-6,
    )
    check("hess rho(0) equals sigma", float(np.abs(ev0.hess - sigma).max()) < 1e-6)

    scan = tfm.spectral_scan(spec, 201)
    check("spectral radius < 1 away from 0", scan.max_radius < 1.0, f"max={scan.max_radius:.6f}")

    n_dirs = 16 if spec.d > 1 else 2
    trace = bdy.boundary_trace(spec, n_dirs)
    check(
        "boundary map round trip",
        trace.max_gamma_residual < 1e-8,
        f"res={trace.max_gamma_residual:.2e}",
    )
    m_hat = mom.global_drift / np.linalg.norm(mom.global_drift)
    ok_rate = all(
        pt.c @ pt.u > -1e-12
        and (np.abs(pt.u - m_hat).max() < 1e-9 or pt.c @ pt.u > 0)
        for pt in trace.points
    )
    check("exponential rate positive off the drift direction", ok_rate)
    rows_ok, doob_ok, pd_ok = True, True, True
    for pt in trace.points:
        doob = bdy.doob_transform(spec, pt.c)
        P = doob.transformed.row_matrix()
        rows_ok &= bool(np.abs(P.sum(axis=1) - 1.0).max() < 1e-12)
        ev = bdy.rho_eval(spec, pt.c)
        doob_ok &= bool(np.abs(pt.m_c - ev.grad).max() < 1e-6)
        try:
            np.linalg.cholesky(ev.hess)
        except np.linalg.LinAlgError:
            pd_ok = False
    check("doob rows stochastic", rows_ok)
    check("doob drift equals grad rho", doob_ok)
    check("boundary hessians positive-definite", pd_ok)

    series_horizon = 2000 if spec.d == 1 else 800
    bp = trace.points[0]
    xs = [grn.nearest_lattice_point(r, bp.u) for r in (2, 4, 6)]
    res = max(
        grn.doob_conjugation_residual(spec, bp.c, 0, x, 0, series_horizon) for x in xs
    )
    check("doob conjugation of green functions", res < 1e-6, f"res={res:.2e}")

    agree = True
    for x in xs:
        gs = grn.green_series(spec, 0, x, 0, series_horizon)
        gr = grn.green_resolvent(spec, 0, x, 0, schedule=None)
        gm = grn.green_mc(
            spec, 0, x, 0, n_paths=20_000, horizon=grn.default_mc_horizon(spec, x), seed=7
        )
        agree &= bool(abs(gs.value - gr.value) <= gs.error + gr.error + 1e-9)
        agree &= bool(abs(gs.value - gm.value) <= 3 * gm.error + gs.error + 1e-9)
    check("green methods agree", agree)

    out["checks"] = lines
    out["failures"] = len(failures)
    return [f"failed: {name}" for name in failures]


_VERBS = {
    "validate": _run_validate,
    "moments": _run_moments,
    "section": _run_section,
    "boundary": _run_boundary,
    "green": _run_green,
    "asym": _run_asym,
    "compare": _run_compare,
    "simulate": _run_simulate,
    "checks": _run_checks,
}


def run(command: Command) -> RunReport:
    """Dispatch a parsed command against its spec file."""
    spec = load_spec(command.spec_path)
    outputs: dict = {}
    start = time.perf_counter()
    warnings = _VERBS[command.verb](spec, command.options, outputs)
    return RunReport(
        command=command,
        wall_time=time.perf_counter() - start,
        outputs=outputs,
        warnings=warnings,
    )


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="madd",
        description="Green-function analysis of finite-support Markov-additive processes",
    )
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="process spec JSON file")

    common(sub.add_parser("validate", help="structural assumption flags"))
    common(sub.add_parser("moments", help="stationary law and drifts"))
    common(sub.add_parser("section", help="appropriate section and energy matrix"))

    p = sub.add_parser("boundary", help="trace the unit-spectral-radius boundary")
    common(p)
    p.add_argument("--directions", type=int, default=16)
    p.add_argument("--out", help="CSV output path")

    p = sub.add_parser("green", help="green function value by one method")
    common(p)
    p.add_argument("--method", choices=["series", "resolvent", "mc"], default="series")
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--x", default="0", help="target point, comma separated")
    p.add_argument("--horizon", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--auto-schedule", action="store_true", dest="auto_schedule")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("asym", help="asymptotic coefficient / equivalent")
    common(p)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--u", default="1", help="direction, comma separated")
    p.add_argument("--x", help="evaluate the equivalent at this point")
    p.add_argument("--m-exponent", dest="m_exponent")

    p = sub.add_parser("compare", help="exact methods vs asymptotic equivalent")
    common(p)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--u", default="1")
    p.add_argument("--radii", default="10,20")
    p.add_argument("--methods", default="series,resolvent")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path")

    p = sub.add_parser("simulate", help="sample paths; endpoint summary/CSV")
    common(p)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--horizon", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path")

    common(sub.add_parser("checks", help="run the full invariant battery"))
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    options = {k: v for k, v in vars(args).items() if k not in ("verb", "spec") and v is not None}
    command = Command(verb=args.verb, spec_path=args.spec, options=options)
    try:
        report = run(command)
    except MaddError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    for key, val in report.outputs.items():
        if key == "checks":
            for line in val:
                print(line)
        elif isinstance(val, dict):
            for k2, v2 in val.items():
                print(f"{key}.{k2} = {v2}")
        else:
            print(f"{key} = {val}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"wall_time_s = {report.wall_time:.3f}", file=sys.stderr)
    if args.verb == "checks" and report.outputs.get("failures", 0) > 0:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
