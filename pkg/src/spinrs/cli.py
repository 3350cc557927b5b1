"""Command-line entry point.

Subcommands
-----------
simulate CONFIG
    Integrate one configuration; writes ``trajectory_<solver>.csv`` and
    ``summary.json`` to ``--out-dir``.
check
    Run a randomized verification suite and print one line per check.
compare CONFIG --rtol ...
    Accuracy/cost table of the ODE solver against the factorization solver.

Exit codes: 0 success, 2 configuration error, 3 solver breakdown,
4 verification failure.
"""

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import checks
from .config import ConfigError, RunConfig
from .dynamics import Trajectory, conserved_report, integrate
from .errors import BreakdownError, SingularityError, SpinRSError
from .factorization import factorization_residual, solve
from .io import trajectory_csv, write_json, atomic_write
from .rmatrix import check_regular

EXIT_OK, EXIT_CONFIG, EXIT_BREAKDOWN, EXIT_CHECK = 0, 2, 3, 4
REFERENCE_RTOL = 1e-13


def worker_count():
    """Worker pool size from ``SPINRS_THREADS`` (default 1, i.e. serial)."""
    raw = os.environ.get("SPINRS_THREADS", "1")
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"SPINRS_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ConfigError(f"SPINRS_THREADS must be a positive integer, got {raw!r}")
    return k


def _map(fn, items):
    items = list(items)
    k = min(worker_count(), len(items))
    if k <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, *zip(*items)))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _shift(traj, t0):
    if t0 == 0:
        return traj
    return Trajectory(traj.times + t0, traj.q, traj.g, traj.conserved, dict(traj.meta),
                      None if traj.breakdown is None else traj.breakdown + t0)


def _empty(m, t0):
    return Trajectory(np.zeros(0), np.zeros((0, m)), np.zeros((0, m, m), dtype=complex),
                      breakdown=t0)


def run_solver(cfg, method):
    """Run one solver; returns ``(trajectory, summary)`` and never raises on breakdown."""
    spec, ham, s0 = cfg.rmatrix, cfg.hamiltonian, cfg.state
    grid = cfg.time.grid()
    t0 = cfg.time.t0
    m = cfg.n + 1
    summary = {"solver": None, "breakdown_time": None, "breakdown_root": None,
               "breakdown_message": None, "drifts": None, "factorization_residual": None,
               "gauge_condition_residual": None, "residuals": None}
    start = time.perf_counter()
    try:
        check_regular(spec, s0.q)
    except SingularityError as exc:
        summary.update(solver=method, breakdown_time=t0, breakdown_root=list(exc.root),
                       breakdown_message=str(exc))
        traj = _empty(m, t0)
        stats = {}
    else:
        if method in ("rk45", "rk4"):
            summary["solver"] = method
            try:
                traj = integrate(spec, ham, s0, grid, cfg.solver.integrator(method))
            except BreakdownError as exc:
                traj = exc.partial
                summary.update(breakdown_time=exc.time, breakdown_message=str(exc),
                               breakdown_root=None if exc.root is None else list(exc.root))
            stats = {k: traj.meta.get(k) for k in ("steps", "rejected", "evaluations",
                                                    "max_correction")}
        else:
            backend = cfg.solver.backend
            summary["solver"] = f"factorization/{backend}"
            res = solve(spec, ham, s0, grid - t0, backend=backend,
                        convention=cfg.solver.convention)
            if len(res.traj):
                resid = factorization_residual(res, ham, s0)
                summary["factorization_residual"] = resid["factorization"]
                summary["gauge_condition_residual"] = resid.get("gauge_condition")
                summary["residuals"] = resid
            if res.breakdown is not None:
                summary.update(breakdown_time=res.breakdown + t0,
                               breakdown_message="eigenvalue collision (wall)",
                               breakdown_root=None if res.breakdown_root is None
                               else list(res.breakdown_root))
            traj = _shift(res.traj, t0)
            stats = {k: v for k, v in res.diagnostics.items() if k != "breakdown"}
    if len(traj):
        rep = conserved_report(traj)
        summary["drifts"] = {"power_traces": [float(x) for x in rep["power_traces"]],
                             "spectrum": rep["spectrum"]}
    summary["wall_clock_s"] = time.perf_counter() - start
    summary["grid"] = {"t0": cfg.time.t0, "t1": cfg.time.t1, "samples": cfg.time.samples,
                       "completed_samples": len(traj), **stats}
    return traj, summary


def sup_error(a, b):
    """Largest entrywise difference of ``(q, g)`` over the common samples."""
    k = min(len(a), len(b))
    if k == 0:
        return None
    if not np.allclose(a.times[:k], b.times[:k], rtol=0, atol=1e-12):
        raise ValueError("trajectories are sampled on different grids")
    dq = np.abs(np.asarray(a.q[:k]) - np.asarray(b.q[:k])).max()
    dg = np.abs(a.g[:k] - b.g[:k]).max()
    return float(max(dq, dg))


def cmd_simulate(cfg, out_dir):
    """Run ``cfg`` and write its outputs; returns the exit code."""
    methods = ("rk45", "factorization") if cfg.solver.method == "both" else (cfg.solver.method,)
    complex_mode = cfg.mode == "complex"
    runs = _map(run_solver, [(cfg, m) for m in methods])
    summaries = []
    for method, (traj, summary) in zip(methods, runs):
        path = os.path.join(out_dir, f"trajectory_{method}.csv")
        atomic_write(path, trajectory_csv(traj, cfg.n, complex_mode))
        summary["trajectory_file"] = os.path.basename(path)
        summaries.append(summary)
    cross = sup_error(runs[0][0], runs[1][0]) if len(runs) == 2 else None
    broken = any(s["breakdown_time"] is not None for s in summaries)
    out = {"config": cfg.to_dict(), "runs": summaries, "cross_agreement": cross,
           "exit_code": EXIT_BREAKDOWN if broken else EXIT_OK}
    write_json(os.path.join(out_dir, "summary.json"), out)
    for s in summaries:
        line = f"{s['solver']}: {s['grid']['completed_samples']}/{cfg.time.samples} samples"
        if s["breakdown_time"] is not None:
            line += f", breakdown at t={s['breakdown_time']:.6g} ({s['breakdown_message']})"
        print(line)
    if cross is not None:
        print(f"cross-agreement (sup |difference|): {cross:.3e}")
    return out["exit_code"]


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _compare_row(cfg, method, rtol):
    if method == "rk45":
        c = replace(cfg, solver=replace(cfg.solver, rtol=rtol, atol=rtol * 1e-3))
        return run_solver(c, "rk45")
    c = replace(cfg, solver=replace(cfg.solver, backend="eigen"))
    return run_solver(c, "factorization")


def cmd_compare(cfg, rtols, out_dir=None, timing=True):
    """Sup-error of each solver against a tight RK45 reference.

    RK45 rows vary the relative tolerance; the factorization solver has no
    ODE tolerance, so its rows repeat the same run (its error is set by the
    time grid and the quadrature of the gauge integral).
    """
    rtols = [float(r) for r in rtols]
    if not rtols:
        raise ConfigError("compare needs at least one rtol")
    if any(r <= 0 for r in rtols):
        raise ConfigError("rtol values must be positive")
    if not cfg.subset.is_full:
        raise ConfigError("compare needs pi_prime = full (the factorization solver)")
    ref_cfg = replace(cfg, solver=replace(cfg.solver, rtol=REFERENCE_RTOL, atol=1e-15))
    jobs = [(ref_cfg, "rk45", REFERENCE_RTOL)]
    jobs += [(cfg, "rk45", r) for r in rtols]
    jobs += [(cfg, "factorization/eigen", r) for r in rtols[:1]]
    results = _map(_compare_row, jobs)
    ref, ref_summary = results[0]
    if ref_summary["breakdown_time"] is not None:
        raise BreakdownError(f"reference run broke down at t={ref_summary['breakdown_time']}",
                             time=ref_summary["breakdown_time"])
    rows = []
    fact = None
    for (c, method, rtol), (traj, summary) in zip(jobs[1:], results[1:]):
        row = {"solver": method, "rtol": rtol, "sup_error": sup_error(traj, ref),
               "evaluations": summary["grid"].get("evaluations"),
               "breakdown_time": summary["breakdown_time"]}
        if timing:
            row["wall_time_s"] = summary["wall_clock_s"]
        if method.startswith("factorization"):
            fact = row
        else:
            rows.append(row)
    for r in rtols:
        rows.append(dict(fact, rtol=r))
    table = {"reference": {"solver": "rk45", "rtol": REFERENCE_RTOL}, "rows": rows}
    cols = ["solver", "rtol", "sup_error", "evaluations"] + (["wall_time_s"] if timing else [])
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join("" if row[c] is None else
                              (f"{row[c]:.6e}" if isinstance(row[c], float) else str(row[c]))
                              for c in cols))
    text = "\n".join(lines) + "\n"
    if out_dir is not None:
        write_json(os.path.join(out_dir, "compare.json"), table)
        atomic_write(os.path.join(out_dir, "compare.csv"), text)
    sys.stdout.write(text)
    return table


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def parse_pi_prime(text):
    if text in (None, "full"):
        return "full"
    try:
        return tuple(sorted({int(x) for x in text.split(",") if x.strip()}))
    except ValueError:
        raise ConfigError(f"--pi-prime must be 'full' or comma-separated integers, got {text!r}") \
            from None


def _check_job(name, n, pi_prime, kappa, seed, samples, negative_control):
    kw = {"corrupt": True} if negative_control and name == "skew" else {}
    return checks.run_suite(name, n, pi_prime, kappa, seed=seed, samples=samples, **kw)


def cmd_check(suite, n, pi_prime="full", kappa=0.5, seed=0, samples=None,
              negative_control=False, out_dir=None):
    """Run one suite (or all); prints a line per check and returns the exit code."""
    if suite not in checks.SUITES + ("all",):
        raise ConfigError(f"unknown suite {suite!r}")
    if n < 1:
        raise ConfigError("n must be at least 1")
    if pi_prime != "full" and any(not 1 <= k <= n for k in pi_prime):
        raise ConfigError(f"simple-root indices must lie in 1..{n}")
    names = checks.SUITES if suite == "all" else (suite,)
    jobs = [(name, n, pi_prime, kappa, seed, samples, negative_control) for name in names]
    results = [r for batch in _map(_check_job, jobs) for r in batch]
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    if out_dir is not None:
        write_json(os.path.join(out_dir, "check.json"),
                   {"suite": suite, "seed": seed, "passed": ok,
                    "results": [r.to_dict() for r in results]})
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="spinrs", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help="override the seed (default: the config's, or 0)")
        sp.add_argument("--out-dir", default=None, help="directory for output files")

    s = sub.add_parser("simulate", help="integrate a configuration")
    s.add_argument("config")
    common(s)

    c = sub.add_parser("check", help="run a verification suite")
    c.add_argument("--suite", default="all", choices=checks.SUITES + ("all",))
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--pi-prime", default="full",
                   help="'full' or comma-separated simple-root indices")
    c.add_argument("--kappa", type=float, default=0.5)
    c.add_argument("--samples", type=int, default=None)
    c.add_argument("--negative-control", action="store_true",
                   help="test R + kappa in the skew suite (expected to fail)")
    common(c)

    m = sub.add_parser("compare", help="accuracy/cost table of both solvers")
    m.add_argument("config")
    m.add_argument("--rtol", type=float, nargs="*", default=[1e-6, 1e-8, 1e-10])
    m.add_argument("--no-timing", action="store_true", help="omit wall-clock columns")
    common(m)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            return cmd_check(args.suite, args.n, parse_pi_prime(args.pi_prime), args.kappa,
                             0 if args.seed is None else args.seed, args.samples,
                             args.negative_control, args.out_dir)
        try:
            cfg = RunConfig.load(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out_dir or ".")
        cmd_compare(cfg, args.rtol, args.out_dir, timing=not args.no_timing)
        return EXIT_OK
    except ConfigError as exc:
        print(f"spinrs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpinRSError as exc:
        print(f"spinrs: solver breakdown: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN


if __name__ == "__main__":
    sys.exit(main())
