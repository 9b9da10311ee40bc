"""Convergence of the log-critical ratios with the integration length.

For each dimension class (n >= 3, n = 2, n = 1) at the critical exponent,
prints the InverseLogFit estimates of the auxiliary ratios and of the headline
ratio for increasing rmax, next to their targets.  Use ``--ratios DIR`` to dump
the raw (r, ratio) tables for plotting.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from radial_biharmonic.asymptotics import critical_exponent, predicted_law
from radial_biharmonic.extraction import FitModel, estimate_limit, intermediate_limits, ratio_series
from radial_biharmonic.integrator import IntegratorControls, integrate
from radial_biharmonic.series import OriginData, Problem


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, nargs="+", default=[3, 2, 1])
    p.add_argument("--rmax", type=float, nargs="+", default=[1e3, 1e4, 1e5, 1e6, 1e7])
    p.add_argument("--u0", type=float, default=1.0)
    p.add_argument("--lap0", type=float, default=0.0)
    p.add_argument("--ratios", type=Path, default=None, help="directory for raw ratio tables")
    args = p.parse_args(argv)

    for n in args.n:
        problem = Problem(n, critical_exponent(n))
        law = predicted_law(problem)
        traj = integrate(problem, OriginData(args.u0, args.lap0), IntegratorControls(rmax=max(args.rmax)))
        print(f"\nn={n} alpha={problem.alpha:.6g} headline constant {law.constant:.6g} ({traj.termination})")
        rep = intermediate_limits(traj)
        names = list(rep.limits)
        print(f"{'rmax':>8}" + "".join(f"{nm:>20}" for nm in names) + f"{'headline/law':>16}")
        print(f"{'target':>8}" + "".join(f"{rep[nm].target:>20.6g}" for nm in names) + f"{1.0:>16.6g}")
        for rmax in args.rmax:
            part = integrate(problem, OriginData(args.u0, args.lap0), IntegratorControls(rmax=rmax))
            sub = intermediate_limits(part)
            head = estimate_limit(ratio_series(part, law), FitModel.INVERSE_LOG)
            print(f"{rmax:>8.0e}" + "".join(f"{sub[nm].estimate.value:>20.6g}" for nm in names) + f"{head.value:>16.6g}")
        if args.ratios is not None:
            args.ratios.mkdir(parents=True, exist_ok=True)
            rs = ratio_series(traj, law)
            with (args.ratios / f"log_critical_n{n}.csv").open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(("r", "ratio"))
                w.writerows(zip(np.asarray(rs.r).tolist(), np.asarray(rs.ratio).tolist()))
    return 0


if __name__ == "__main__":
    sys.exit(main())
