"""Classify random and named flat bundle tuples, and test subadditivity of the reciprocal small divisors."""
import argparse
import csv
import sys

import numpy as np

from ueda.bundles import FlatBundleTuple, classify, epsilon_sequence, golden_tuple, siegel_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--r", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--scan-bound", type=int, default=200)
    ap.add_argument("--m-max", type=int, default=30)
    ap.add_argument("--A", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    w = csv.writer(sys.stdout)
    w.writerow(["r", "tuple", "verdict", "fitted_A", "holds_A", "siegel_a", "subadditive", "first_violation"])
    for r in args.r:
        tuples = [(f"random{i}", FlatBundleTuple.from_angles(rng.random((r, 2)).tolist())) for i in range(args.count)]
        tuples.append(("golden", golden_tuple(r)))
        for name, t in tuples:
            rep = classify(t, args.scan_bound, threads=args.threads)
            sc = siegel_check(epsilon_sequence(t, 1.0, args.m_max, threads=args.threads), args.m_max)
            first = sc.violations[0][:2] if sc.violations else ""
            w.writerow([r, name, rep.verdict, rep.fitted_A, rep.verdict == "S_A" and rep.holds(args.A),
                        sc.property_a, sc.property_b, first])


if __name__ == "__main__":
    main()
