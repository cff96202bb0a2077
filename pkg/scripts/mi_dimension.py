"""Nested Monte Carlo information I(Z^n; W) and its growth rate in log n."""
import argparse

from rdlab.families import halfspace_angle_2d, halfspace_sphere, interval_1d
from rdlab.miest import mi_dimension_fit, mi_nested_mc, mi_vc_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[8, 32, 128, 512])
    ap.add_argument("--outer", type=int, default=2000)
    ap.add_argument("--inner", type=int, default=10_000)
    ap.add_argument("--sphere-d", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    for fam in (interval_1d(), halfspace_angle_2d(), halfspace_sphere(args.sphere_d)):
        pts = []
        for n in args.n:
            e = mi_nested_mc(fam, n, args.outer, args.inner, args.seed, args.workers)
            pts.append((n, e))
            flag = "  (unreliable)" if e.unreliable else ""
            print(f"{fam.id:<24} n={n:<5} I={e.value:7.4f} +- {e.std_error:.4f}  "
                  f"cap {mi_vc_bound(fam.d_vc, n):7.4f}{flag}")
        fit = mi_dimension_fit(pts, weighted=all(e.std_error > 0 for _, e in pts))
        print(f"{fam.id:<24} slope in log n: {fit.slope:.3f} (R^2 {fit.r_squared:.3f})\n")


if __name__ == "__main__":
    main()
