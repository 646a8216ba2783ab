"""Smallest sandwich slack constant for the lambda = 2 reference solve.

Prints the constant ``C_s`` for which ``verify_sandwich`` reports no violations
at slack ``C_s (h + eps_min)``, next to the frozen ``SANDWICH_CS``.
"""

import argparse

from yieldflow.barriers import make_pair
from yieldflow.solver import DEFAULT_EPS_MIN, SANDWICH_CS, default_schedule, solve, verify_sandwich


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lambda", dest="lam", type=float, default=2.0)
    ap.add_argument("--grid", default="129x513")
    ap.add_argument("--eps-min", type=float, default=DEFAULT_EPS_MIN)
    args = ap.parse_args()
    ny, nz = (int(v) for v in args.grid.lower().split("x"))
    field, _ = solve(args.lam, (ny, nz), epsilon_schedule=default_schedule(args.eps_min))
    rep = verify_sandwich(field, make_pair(args.lam), slack=0.0)
    scale = field.h + args.eps_min
    need = max(rep.max_below, rep.max_above, 0.0) / scale
    print(f"lambda={args.lam} grid={ny}x{nz} h+eps={scale:.6g}")
    print(f"max below sub={rep.max_below:.4e}  max above super={rep.max_above:.4e}")
    print(f"required C_s={need:.4e}  frozen SANDWICH_CS={SANDWICH_CS:g}  ok={need <= SANDWICH_CS}")


if __name__ == "__main__":
    main()
