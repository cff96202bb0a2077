"""Blahut-Arimoto rate-distortion curves on a grid next to the Shannon lower bound."""
import argparse

from rdlab.families import halfspace_angle_2d, interval_1d
from rdlab.rdtheory import (SLBParams, binary_hamming, blahut_arimoto, discretize_family,
                            rd_at_distortion, slb_zero_one)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--tol", type=float, default=1e-4)
    ap.add_argument("--D", type=float, nargs="+", default=[0.01, 0.02, 0.05, 0.1, 0.2])
    args = ap.parse_args()

    ham = binary_hamming()
    for D in (0.05, 0.11, 0.25):
        print(f"hamming D={D}: R={rd_at_distortion(ham, D, tol=1e-12, d_rtol=1e-10).R:.8f}")
    for fam in (interval_1d(), halfspace_angle_2d()):
        slb = SLBParams.from_family(fam)
        print(f"\n{fam.id}")
        print("D        SLB     " + "".join(f"grid={g:<6}" for g in args.grid))
        problems = [discretize_family(fam, g) for g in args.grid]
        for D in args.D:
            rs = [rd_at_distortion(p, D, tol=args.tol).R for p in problems]
            print(f"{D:<8} {slb_zero_one(slb, D):<7.4f} " + "".join(f"{r:<11.4f}" for r in rs))
        curve = blahut_arimoto(problems[-1], [-2.0 ** k for k in range(9)], tol=args.tol)
        # each rate is only accurate to the stopping gap, so judge shape at that scale
        print(f"convex {curve.is_convex(args.tol)}, "
              f"nonincreasing {curve.is_nonincreasing(args.tol)}")


if __name__ == "__main__":
    main()
