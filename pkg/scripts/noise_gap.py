"""Information lost to symmetric label noise, as a function of n and rho."""
import argparse

from rdlab.families import interval_1d, noisy_wrap
from rdlab.miest import mi_nested_mc, noise_info_gap


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.5])
    ap.add_argument("--n", type=int, nargs="+", default=[5, 20, 50, 200])
    ap.add_argument("--outer", type=int, default=2000)
    ap.add_argument("--estimator", choices=["two_term", "posterior"], default="posterior")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    fam = interval_1d()
    for n in args.n:
        clean = mi_nested_mc(fam, n, args.outer, seed=args.seed)
        cells = "  ".join(
            f"rho={rho}: {g.value:.3f}+-{g.std_error:.3f}"
            for rho in args.rho
            for g in [noise_info_gap(noisy_wrap(fam, rho), n, args.outer, seed=args.seed,
                                     method=args.estimator)])
        print(f"n={n:<4} clean I={clean.value:.3f}  {cells}")


if __name__ == "__main__":
    main()
