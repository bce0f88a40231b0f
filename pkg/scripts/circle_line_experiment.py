#!/usr/bin/env python3
"""Circle/line experiment: log-scale error traces for DR and LT from a
seeded start, plus Dolan-More performance profiles over a trial disk of
radius 0.5 about the intersection (sqrt(3)/2, 1/2).

Writes trace_<method>.csv, profiles_iters.csv and profiles_time.csv into
--outdir (plot-ready CSV; no plotting here).
"""

import argparse
import pathlib

from feasikit.cli import RunConfig, cmd_bench, cmd_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="results/circle_line")
    parser.add_argument("--precision", type=int, default=120)
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for method in ("dr", "lt"):
        cmd_run(RunConfig(
            problem="circle-line",
            method=method,
            precision=args.precision,
            seed=args.seed,
            out=str(outdir / f"trace_{method}.csv"),
        ))
        print(f"wrote {outdir / f'trace_{method}.csv'}")

    # iteration-count and CPU-time profiles; DR needs a reachable tolerance
    cmd_bench(RunConfig(
        problem="circle-line",
        methods=("dr", "lt"),
        precision=args.precision,
        tol="1e-30",
        trials=args.trials,
        seed=args.seed,
        jobs=args.jobs,
        out=str(outdir / "profiles"),
    ))
    print(f"wrote {outdir / 'profiles_iters.csv'} and {outdir / 'profiles_time.csv'}")


if __name__ == "__main__":
    main()
