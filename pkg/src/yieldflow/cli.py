"""Command line entry point ``yieldflow``.

Subcommands::

    table1   optimal outer load lambda1* and the gap Pi for lam = 1.2, 1.4, 1.6, 1.8
    profile  samples of phi_{K(lam)} and the sweep lam -> phi_{K(lam)}(1)
    oned     closed-form 1D minimizer samples
    solve    2D regularized solve; writes field.csv, contour.csv, report.json
    verify   sandwich and barrier checks on a solved field
    sweep    several solves; volume rate per load

Exit status: 0 on success, 2 on invalid input, 3 when a solver fails to converge.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import barriers, oned, output, profiles, solver
from .errors import ConvergenceError, DomainError

TABLE1_LAMBDAS = (1.2, 1.4, 1.6, 1.8)


def physical_to_dimensionless(theta_deg, mu_s):
    """``tan(theta) / mu_s`` for an inclination ``theta`` in degrees."""
    theta_deg, mu_s = float(theta_deg), float(mu_s)
    if not 0.0 <= theta_deg < 90.0:
        raise DomainError(f"theta must lie in [0, 90) degrees (got {theta_deg!r})")
    if not mu_s > 0.0:
        raise DomainError(f"mu_s must be positive (got {mu_s!r})")
    return math.tan(math.radians(theta_deg)) / mu_s


def thread_count():
    raw = os.environ.get("YIELDFLOW_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise DomainError(f"YIELDFLOW_THREADS must be an integer (got {raw!r})") from exc
    if n < 1:
        raise DomainError("YIELDFLOW_THREADS must be at least 1")
    return n


def parallel_map(fn, items):
    """``[fn(x) for x in items]`` on up to ``YIELDFLOW_THREADS`` threads, order preserved."""
    items = list(items)
    n = min(thread_count(), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands (also usable as library functions)
# ---------------------------------------------------------------------------


def cmd_table1(tol=1e-6, lambdas=TABLE1_LAMBDAS, out=None):
    rows = parallel_map(lambda lam: (lam, *barriers.optimize_lambda1(lam, tol)), sorted(lambdas))
    if out is not None:
        output.write_table_csv(Path(out) / "table1.csv", "lambda,lambda1_star,pi", rows)
    return rows


def cmd_profile(lambdas=TABLE1_LAMBDAS, n=201, sweep=(1.05, 5.0, 60), out=None):
    lambdas = sorted(float(v) for v in lambdas)
    y = np.linspace(-1.0, 1.0, int(n))
    curves = parallel_map(lambda lam: np.asarray(profiles.phi(profiles.make_params(lam), y)), lambdas)
    lo, hi, m = sweep
    grid = np.linspace(float(lo), float(hi), int(m))
    tops = parallel_map(lambda lam: profiles.make_params(lam).phi_max, grid)
    if out is not None:
        out = Path(out)
        header = "y," + ",".join(f"phi_{lam:g}" for lam in lambdas)
        output._write_rows(out / "profiles.csv", header, [y, *curves])
        output.write_table_csv(out / "phi_top.csv", "lambda,phi_at_1", list(zip(grid, tops)))
    return y, curves, grid, np.asarray(tops)


def cmd_oned(A, m, n=201, out=None):
    sol = oned.solve_oned(A, m)
    y = np.linspace(-1.0, 1.0, int(n))
    w = np.asarray(oned.profile_w(sol, y))
    w[[0, -1]] = 0.0
    q = np.asarray(oned.subgradient_q(sol, y))
    if out is not None:
        output._write_rows(Path(out) / "oned.csv", "y,w,q", [y, w, q])
    return sol, y, w, q


def verification_payload(grid, lam, eps_min, barrier_h=None):
    """Checks of a solved field against the barriers (or the zero solution for ``lam <= 1``)."""
    _, area, thr = solver.extract_support(grid)
    payload = {
        "lambda": lam,
        "max_u": float(np.max(grid.values)),
        "support_area": area,
        "support_threshold": thr,
    }
    if lam <= 1.0:
        return payload
    pair = barriers.make_pair(lam)
    rep = solver.verify_sandwich(grid, pair, eps_min=eps_min)
    contour, _, _ = solver.extract_support(grid)
    cc = contour_check(grid, pair, contour)
    payload.update(
        {
            "lambda0": pair.lam0,
            "zeta0": pair.zeta0,
            "lambda1": pair.lam1,
            "b": pair.b,
            "slack": rep.slack,
            "nodes": rep.nodes,
            "below_sub": rep.below_sub,
            "above_super": rep.above_super,
            "max_below": rep.max_below,
            "max_above": rep.max_above,
            "contour_points": cc["points"],
            "contour_outside": cc["outside"],
            "contour_top": cc["top"],
        }
    )
    if barrier_h:
        for name, fn in (("sub", barriers.subsolution_grid), ("super", barriers.supersolution_grid)):
            g = fn(pair, h=barrier_h)
            payload[f"{name}_off_tube_fraction"] = g.off_tube_fraction
            payload[f"{name}_failures_off_tube"] = g.failures_off_tube
            payload[f"{name}_failures_in_tube"] = g.failures_in_tube
    return payload


def contour_check(grid, pair, contour, cells=2):
    """Contour points outside the barrier band by more than ``cells`` grid cells.

    The band is ``outer(y) <= z <= inner(y)`` with inner ``phi_{K(lam)}`` and
    outer ``b phi_{K(lam1)}(y/b)``; ``top`` is the highest contour point.
    """
    pts = contour[~np.isnan(contour[:, 0])] if contour.size else contour.reshape(0, 2)
    if pts.size == 0:
        return {"points": 0, "outside": 0, "top": None}
    y, z = pts[:, 0], pts[:, 1]
    inner = np.asarray(barriers.inner_curve(pair, np.clip(y, -1.0, 1.0)))
    outer = np.asarray(barriers.outer_curve(pair, np.clip(y, -1.0, 1.0)))
    tol = cells * grid.hz
    bad = (z > inner + tol) | (z < outer - tol)
    return {"points": int(y.size), "outside": int(np.count_nonzero(bad)), "top": float(np.max(z))}


def cmd_solve(lam, grid="auto", eps_min=solver.DEFAULT_EPS_MIN, tol=solver.DEFAULT_TOL, max_iter=2000,
              out=None, verify=False, reproducible=False, barrier_h=None):
    shape = solver.DEFAULT_GRID if grid in (None, "auto") else grid
    field, report = solver.solve(lam, shape, solver.default_schedule(eps_min), tol=tol, max_iter=max_iter)
    ver = verification_payload(field, lam, eps_min, barrier_h) if verify else None
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        output.write_field_csv(out / "field.csv", field, solver.recover_q(field, report.epsilons[-1]))
        output.write_contour_csv(out / "contour.csv", report.contour)
        output.write_report_json(out / "report.json", report, include_runtime=not reproducible)
        if ver is not None:
            output.write_json(out / "verify.json", ver)
    return field, report, ver


def cmd_verify(lam, field_path, eps_min=solver.DEFAULT_EPS_MIN, out=None, barrier_h=None):
    grid, _ = output.read_field_csv(field_path)
    ver = verification_payload(grid, lam, eps_min, barrier_h)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        output.write_json(out / "verify.json", ver)
    return ver


def volume(grid):
    return float(np.sum(grid.node_weights() * grid.values))


def cmd_sweep(loads, grid=(65, 257), eps_min=solver.DEFAULT_EPS_MIN, tol=solver.DEFAULT_TOL, out=None):
    """``loads`` is a list of ``(lam, m0_factor)``; ``m0 = m0_factor * m`` when the factor is known."""
    loads = sorted(loads, key=lambda t: t[0])

    def run(item):
        lam, fac = item
        f, rep = solver.solve(lam, grid, solver.default_schedule(eps_min), tol=tol)
        m = volume(f)
        return (lam, float(np.max(f.values)), m, math.nan if fac is None else fac * m)

    rows = parallel_map(run, loads)
    if out is not None:
        output.write_table_csv(Path(out) / "sweep.csv", "lambda,max_u,volume,m0", rows)
    return rows


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _grid_arg(text):
    if text == "auto":
        return "auto"
    try:
        ny, nz = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must be NYxNZ or auto (got {text!r})") from exc
    if ny < 3 or nz < 3:
        raise argparse.ArgumentTypeError("grid needs at least 3 nodes per direction")
    return ny, nz


def _add_load(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lam", type=float, help="dimensionless load")
    g.add_argument("--theta", type=float, help="inclination in degrees (with --mu-s)")
    p.add_argument("--mu-s", dest="mu_s", type=float, help="friction coefficient (with --theta)")


def _load(args):
    if args.lam is not None:
        if args.mu_s is not None:
            raise DomainError("--mu-s goes with --theta, not --lambda")
        return args.lam
    if args.mu_s is None:
        raise DomainError("--theta needs --mu-s")
    return physical_to_dimensionless(args.theta, args.mu_s)


def build_parser():
    ap = argparse.ArgumentParser(prog="yieldflow", description="Drucker-Prager visco-plastic channel flow.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", help="optimal lambda1* and Pi")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("profile", help="yield-curve profiles")
    p.add_argument("--lambda", dest="lams", type=float, nargs="+", default=list(TABLE1_LAMBDAS))
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--sweep", type=float, nargs=3, default=(1.05, 5.0, 60), metavar=("MIN", "MAX", "N"))
    p.add_argument("--out", type=Path)

    p = sub.add_parser("oned", help="1D minimizer samples")
    p.add_argument("--A", type=float, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--n", type=int, default=201)
    p.add_argument("--out", type=Path)

    for name in ("solve", "verify"):
        p = sub.add_parser(name, help=f"{name} the 2D problem")
        _add_load(p)
        p.add_argument("--eps-min", dest="eps_min", type=float, default=solver.DEFAULT_EPS_MIN)
        p.add_argument("--out", type=Path)
        p.add_argument("--barrier-h", dest="barrier_h", type=float, default=None,
                       help="also run the barrier inequality grids at this spacing")
        if name == "solve":
            p.add_argument("--grid", type=_grid_arg, default="auto")
            p.add_argument("--tol", type=float, default=solver.DEFAULT_TOL)
            p.add_argument("--max-iter", dest="max_iter", type=int, default=2000)
            p.add_argument("--verify", action="store_true", help="write verify.json as well")
            p.add_argument("--reproducible", action="store_true", help="write runtime_s as null")
        else:
            p.add_argument("--field", type=Path, help="field.csv to check (default OUT/field.csv)")

    p = sub.add_parser("sweep", help="volume rate over several loads")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--lambda", dest="lams", type=float, nargs="+")
    g.add_argument("--theta", dest="thetas", type=float, nargs="+")
    p.add_argument("--mu-s", dest="mu_s", type=float)
    p.add_argument("--length", type=float, default=1.0, help="channel half-width l")
    p.add_argument("--gravity", type=float, default=1.0, help="g0")
    p.add_argument("--grid", type=_grid_arg, default=(65, 257))
    p.add_argument("--eps-min", dest="eps_min", type=float, default=solver.DEFAULT_EPS_MIN)
    p.add_argument("--tol", type=float, default=solver.DEFAULT_TOL)
    p.add_argument("--out", type=Path)
    return ap


def _run(args):
    out = getattr(args, "out", None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    if args.command == "table1":
        for lam, l1, pi in cmd_table1(args.tol, out=out):
            print(f"{lam:.1f}  lambda1*={l1:.6f}  Pi={pi:.6f}")
    elif args.command == "profile":
        _, _, lams, tops = cmd_profile(args.lams, args.n, args.sweep, out=out)
        print(f"phi(1) from {tops[0]:.6f} (lambda={lams[0]:g}) to {tops[-1]:.6f} (lambda={lams[-1]:g})")
    elif args.command == "oned":
        sol, *_ = cmd_oned(args.A, args.m, args.n, out=out)
        print(
            f"lambda_A={sol.lambda_A:.12g}  a={sol.a:.12g}  energy={oned.epsilon_min(sol):.12g}"
            f"  m*lambda_A={oned.minimal_energy(sol):.12g}"
        )
    elif args.command == "solve":
        lam = _load(args)
        grid = "auto" if args.grid == "auto" else args.grid
        field, rep, _ = cmd_solve(lam, grid, args.eps_min, args.tol, args.max_iter, out, args.verify,
                                  args.reproducible, args.barrier_h)
        m = volume(field)
        line = f"lambda={lam:.12g}  max_u={np.max(field.values):.6e}  volume={m:.6e}  support_area={rep.support_area:.6f}"
        if args.lam is None:
            line += f"  m0/(l^2 g0)={args.mu_s * math.cos(math.radians(args.theta)) * m:.6e}"
        print(line)
    elif args.command == "verify":
        lam = _load(args)
        path = args.field if args.field is not None else (out / "field.csv" if out else None)
        if path is None:
            raise DomainError("verify needs --field or --out")
        ver = cmd_verify(lam, path, args.eps_min, out, args.barrier_h)
        for k, v in ver.items():
            print(f"{k}: {v}")
    elif args.command == "sweep":
        if args.lams is not None:
            if args.mu_s is not None:
                raise DomainError("--mu-s goes with --theta")
            loads = [(lam, None) for lam in args.lams]
        else:
            if args.mu_s is None:
                raise DomainError("--theta needs --mu-s")
            fac = args.length**2 * args.gravity * args.mu_s
            loads = [(physical_to_dimensionless(t, args.mu_s), fac * math.cos(math.radians(t))) for t in args.thetas]
        for lam, mu, m, m0 in cmd_sweep(loads, args.grid, args.eps_min, args.tol, out):
            line = f"lambda={lam:.6g}  max_u={mu:.6e}  volume={m:.6e}"
            if not math.isnan(m0):
                line += f"  m0={m0:.6e}"
            print(line)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except DomainError as exc:
        print(f"yieldflow: error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"yieldflow: no convergence: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
