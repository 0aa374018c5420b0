"""Command line driver: solve, continue, analyze, fit."""

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import analyze, richardson
from .banded import LinearSolveError
from .continuation import (
    DSIGMA0,
    DSIGMA_MIN,
    ContinuationAbort,
    ContinuationPlan,
    bootstrap_sigma2,
    continue_family,
    initial_guess,
    promote,
)
from .equation import GridSpec
from .fitting import fit_log_corrected, fit_power_law
from .solver import NonConvergenceError, SolveOutcome, SolverConfig, newton_solve
from .storage import (
    ProfileFile,
    SchemaError,
    atomic_write_text,
    read_profile,
    read_table,
    write_report,
    write_table,
)
from .tables import table_from_reports

log = logging.getLogger("dnls_blowup")

DEFAULT_N = 100_000
DEFAULT_XMAX = 25.0
DEFAULT_TOL = 1e-6
THREADS_ENV = "DNLS_BLOWUP_THREADS"
STATE_FILE = "continuation.json"
FAMILY_FILE = "family.csv"
TABLE_FILE = "table.csv"

# fit model -> the target quantity it is meant for
MODEL_TARGETS = {"power": "a_over_eps", "logcorrected": "sqrt_eps"}


class CliError(Exception):
    pass


def profile_name(sigma):
    return f"profile_s{sigma:.12f}.txt"


def _write_failed(path, state, grid, tol, iterations=0, residual=math.nan):
    if state is None:
        return None
    failed = Path(str(path) + ".failed")
    ProfileFile(state, grid, tol, iterations, residual).write(failed)
    log.error("best iterate written to %s", failed)
    return failed


def _load_guess(path, grid, sigma):
    pf = read_profile(path)
    state = pf.state
    if pf.grid.n != grid.n or pf.grid.x_max != grid.x_max:
        log.warning("guess has N=%d, x_max=%g; resampling to N=%d by cubic interpolation", pf.grid.n, pf.grid.x_max, grid.n)
        if pf.grid.x_max != grid.x_max:
            raise CliError("cannot resample a guess with a different x_max")
        state = promote(state, pf.grid, grid)
    state = state.copy()
    state.sigma = sigma
    return state


# ------------------------------------------------------------------ solve


def cmd_solve(args):
    grid = GridSpec(args.n, args.xmax)
    config = SolverConfig(tol=args.tol, max_iter=args.max_iter)
    if args.guess:
        start = _load_guess(args.guess, grid, args.sigma)
    elif args.a0 is not None and args.b0 is not None:
        start = initial_guess(grid, args.sigma, args.a0, args.b0)
    elif args.bootstrap:
        if args.sigma != 2.0:
            raise CliError("--bootstrap is only defined at sigma = 2")
        boot = bootstrap_sigma2(config=config)
        log.info("bootstrap seed %s", boot.seed)
        start = promote(boot.outcome.state, boot.grid, grid)
    else:
        raise CliError("give --a0/--b0, --guess or --bootstrap")
    try:
        out = newton_solve(start, grid, config)
    except (NonConvergenceError, LinearSolveError) as exc:
        log.error("solve failed: %s", exc)
        _write_failed(args.out, getattr(exc, "best", None) or start, grid, args.tol)
        return 2
    ProfileFile(out.state, grid, args.tol, out.iterations, out.final_residual).write(args.out)
    report = {
        "sigma": out.state.sigma,
        "a": out.state.a,
        "b": out.state.b,
        "iterations": out.iterations,
        "final_residual": out.final_residual,
        "v0_minus_g0": out.diagnostics["v0_minus_g0"],
        "N": grid.n,
        "x_max": grid.x_max,
    }
    atomic_write_text(str(args.out) + ".json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"sigma={out.state.sigma:.12g} a={out.state.a:.12g} b={out.state.b:.12g} iterations={out.iterations}")
    return 0


# --------------------------------------------------------------- continue

FAMILY_COLUMNS = ("sigma", "a", "b", "epsilon", "iterations", "final_residual", "v0_minus_g0", "dsigma", "N", "x_max", "profile")


def _family_rows(path):
    if not path.exists():
        return []
    lines = path.read_text(encoding="ascii").splitlines()
    return lines[1:]


def cmd_continue(args):
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = GridSpec(args.n, args.xmax)
    solver = SolverConfig(tol=args.tol, max_iter=args.max_iter)
    state_path = out_dir / STATE_FILE
    family_path = out_dir / FAMILY_FILE
    rows = _family_rows(family_path)
    dsigma = None
    emit_start = True
    if state_path.exists() and not args.start:
        saved = json.loads(state_path.read_text(encoding="ascii"))
        if saved["N"] != grid.n or saved["x_max"] != grid.x_max:
            raise CliError(f"{state_path} belongs to a run with N={saved['N']}, x_max={saved['x_max']}")
        pf = read_profile(out_dir / saved["profile"])
        start = SolveOutcome(pf.state, pf.iterations, pf.residual, {})
        sigma_from, dsigma, emit_start = pf.state.sigma, saved["dsigma"], False
        log.info("resuming at sigma=%.12g with dsigma=%g", sigma_from, dsigma)
    else:
        sigma_from = args.sigma_from
        rows = []
        if args.start:
            pf = read_profile(args.start)
            guess = pf.state if pf.grid == grid else _load_guess(args.start, grid, pf.state.sigma)
            if not np.isclose(guess.sigma, sigma_from, rtol=0, atol=1e-12):
                raise CliError(f"--start profile has sigma={guess.sigma}, expected {sigma_from}")
            start = newton_solve(guess, grid, solver)
        elif sigma_from == 2.0:
            boot = bootstrap_sigma2(config=solver)
            start = newton_solve(promote(boot.outcome.state, boot.grid, grid), grid, solver)
        else:
            raise CliError("--start is required unless --sigma-from is 2")
    if sigma_from <= args.sigma_to and not emit_start:
        print("nothing left to do")
        return 0
    plan = ContinuationPlan(sigma_from, args.sigma_to, args.dsigma0, args.dsigma_min, grid, solver)
    header = ",".join(FAMILY_COLUMNS)

    def on_solution(entry, state):
        name = profile_name(entry.sigma)
        ProfileFile(state, grid, args.tol, entry.iterations, entry.final_residual).write(out_dir / name)
        vals = [entry.sigma, entry.a, entry.b, 2.0 - entry.b]
        cells = [f"{v:.16e}" for v in vals]
        cells += [str(entry.iterations), f"{entry.final_residual:.16e}", f"{entry.v0_minus_g0:.16e}", f"{entry.dsigma:.16e}"]
        cells += [str(grid.n), f"{grid.x_max:.16e}", name]
        rows.append(",".join(cells))
        atomic_write_text(family_path, header + "\n" + "\n".join(rows) + "\n")
        saved = {"profile": name, "sigma": entry.sigma, "dsigma": entry.dsigma, "N": grid.n, "x_max": grid.x_max}
        atomic_write_text(state_path, json.dumps(saved, indent=2, sort_keys=True) + "\n")
        print(f"sigma={entry.sigma:.12g} a={entry.a:.12g} b={entry.b:.12g} iterations={entry.iterations}", flush=True)
        return name

    def on_failure(sigma, exc):
        _write_failed(out_dir / profile_name(sigma), getattr(exc, "best", None), grid, args.tol)

    try:
        record = continue_family(plan, start, on_solution, dsigma=dsigma, on_failure=on_failure, emit_start=emit_start)
    except ContinuationAbort as exc:
        _write_failed(out_dir / "abort", exc.state, grid, args.tol)
        log.error("%s", exc)
        return 3
    if record.truncated:
        log.warning("continuation truncated at sigma=%.12g", record.entries[-1].sigma if record.entries else sigma_from)
        return 4
    return 0


# ---------------------------------------------------------------- analyze


def _analyze_file(path):
    pf = read_profile(path)
    return analyze(pf.state, pf.grid)


def _threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def cmd_analyze(args):
    if args.profile:
        report = _analyze_file(args.profile)
        if args.out:
            write_report(report, args.out)
        else:
            from .storage import report_to_json

            sys.stdout.write(report_to_json(report))
        return 0
    table_dir = Path(args.table_dir)
    files = sorted(table_dir.glob("profile_s*.txt"))
    if not files:
        raise CliError(f"no profile files in {table_dir}")
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        reports = list(pool.map(_analyze_file, files))
    table = table_from_reports(reports)
    out = Path(args.out) if args.out else table_dir / TABLE_FILE
    write_table(table, out)
    print(f"{len(table)} rows written to {out}")
    return 0


# -------------------------------------------------------------------- fit


def _target_points(table, target):
    sig = table.column("sigma")
    a, eps = table.column("a"), table.column("epsilon")
    with np.errstate(invalid="ignore", divide="ignore"):
        y = a / eps if target == "a_over_eps" else np.sqrt(eps)
    keep = np.isfinite(y)
    return np.column_stack([sig[keep], y[keep]])


# column names and decimals of the sigma_max-sweep tables
SWEEP_LAYOUT = {
    "power": (("smax", "alpha", "c"), (3, 4, 4)),
    "logcorrected": (("smax", "alpha", "c1", "c2"), (3, 3, 3, 3)),
}


def sweep_table(points, model, sigma_min, sigma_max_list, init=(8.0, 15.0, 1.0)):
    """One fit per sigma_max window; returns (header, rows), c1/c2 being C0/C1."""
    rows = []
    for smax in sigma_max_list:
        window = (sigma_min, smax)
        if model == "power":
            fit = fit_power_law(points, window)
            rows.append((smax, fit.exponent, fit.coefficients[0]))
        else:
            fit = fit_log_corrected(points, window, init)
            rows.append((smax, fit.exponent, fit.coefficients[0], fit.coefficients[1]))
    return SWEEP_LAYOUT[model][0], rows


def format_sweep(header, rows, model):
    """Whitespace-separated table with fixed decimals per column."""
    digits = SWEEP_LAYOUT[model][1]
    lines = [" ".join(header)]
    for r in rows:
        lines.append(" ".join(f"{v:.{d}f}" for v, d in zip(r, digits)))
    return "\n".join(lines) + "\n"


def cmd_fit(args):
    if MODEL_TARGETS[args.model] != args.target:
        raise CliError(f"model {args.model!r} fits target {MODEL_TARGETS[args.model]!r}, not {args.target!r}")
    tables = [read_table(p) for p in args.tables]
    if len(tables) == 1:
        table = tables[0]
    elif len(tables) == 2:
        coarse, fine = sorted(tables, key=lambda t: t.resolution())
        try:
            table = richardson(coarse, fine)
        except ValueError as exc:
            raise CliError(f"cannot extrapolate: {exc}") from exc
    else:
        raise CliError("--tables takes one table or a coarse/fine pair")
    points = _target_points(table, args.target)
    sweep = args.sigma_max_sweep or [float(points[:, 0].max())]
    sigma_min = args.sigma_min if args.sigma_min is not None else float(points[:, 0].min())
    header, rows = sweep_table(points, args.model, sigma_min, sweep, tuple(args.init))
    text = format_sweep(header, rows, args.model)
    if args.out:
        atomic_write_text(args.out, text)
    sys.stdout.write(text)
    return 0


# ----------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="dnls-blowup", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n", type=int, default=DEFAULT_N)
        sp.add_argument("--xmax", type=float, default=DEFAULT_XMAX)
        sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
        sp.add_argument("--max-iter", type=int, default=50)

    s = sub.add_parser("solve", help="solve the profile equation at one sigma")
    s.add_argument("--sigma", type=float, required=True)
    common(s)
    s.add_argument("--a0", type=float)
    s.add_argument("--b0", type=float)
    s.add_argument("--guess")
    s.add_argument("--bootstrap", action="store_true", help="seed sigma = 2 by the (a0, b0) sweep")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("continue", help="continue the family downward in sigma")
    c.add_argument("--sigma-from", type=float, default=2.0)
    c.add_argument("--sigma-to", type=float, required=True)
    c.add_argument("--dsigma0", type=float, default=DSIGMA0)
    c.add_argument("--dsigma-min", type=float, default=DSIGMA_MIN)
    common(c)
    c.add_argument("--out-dir", required=True)
    c.add_argument("--start")
    c.set_defaults(func=cmd_continue)

    a = sub.add_parser("analyze", help="analyze one profile or a continuation directory")
    g = a.add_mutually_exclusive_group(required=True)
    g.add_argument("--profile")
    g.add_argument("--table-dir")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("fit", help="fit power laws to parameter tables")
    f.add_argument("--tables", nargs="+", required=True)
    f.add_argument("--model", choices=sorted(MODEL_TARGETS), required=True)
    f.add_argument("--target", choices=sorted(set(MODEL_TARGETS.values())), required=True)
    f.add_argument("--sigma-min", type=float)
    f.add_argument("--sigma-max-sweep", type=float, nargs="+")
    f.add_argument("--init", type=float, nargs=3, default=[8.0, 15.0, 1.0])
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CliError, SchemaError) as exc:
        parser.exit(2, f"dnls-blowup: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
