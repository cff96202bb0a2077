"""Empirical excess risk against its lower and upper bounds over a sweep of n.

    python3 scripts/run_sandwich.py --trials 4000 --workers 4
"""
import argparse

from rdlab.families import halfspace_angle_2d, interval_1d
from rdlab.simlab import BracketViolation, Learner, sandwich_sweep

CASES = {"interval": (interval_1d, "PosteriorSample"),
         "angle2d": (halfspace_angle_2d, "ConsistentMidpoint")}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--case", choices=sorted(CASES), nargs="+", default=sorted(CASES))
    ap.add_argument("--n", type=int, nargs="+", default=[16, 64, 256, 1024])
    ap.add_argument("--trials", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for case in args.case:
        make, kind = CASES[case]
        try:
            sw = sandwich_sweep(make(), Learner(kind), args.n, args.trials, args.seed,
                                args.workers)
            status = "bracketed"
        except BracketViolation as e:
            sw, status = e.results, f"VIOLATION at n={e.n}"
        print(f"{case} ({kind}): {status}, log-log slope {sw.slope:.3f}")
        print(f"{'n':>6} {'lower':>11} {'excess':>11} {'se':>9} {'upper':>9}")
        for r in sw.results:
            print(f"{r.n:>6} {r.lower_bound.value:>11.4e} {r.excess_mean:>11.4e} "
                  f"{r.excess_se:>9.2e} {r.upper_bound.value:>9.4f}")


if __name__ == "__main__":
    main()
