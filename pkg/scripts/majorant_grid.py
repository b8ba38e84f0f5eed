"""Majorant coefficients over a (K, M, R, r) grid, with the Newton cross-check and radius estimates."""
import argparse
import csv
import itertools
import sys

from ueda.majorant import MajorantParams, diagonal_bounds, implicit_cross_check, majorant_series


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--degree", type=int, default=12)
    ap.add_argument("--values", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--r", type=int, nargs="+", default=[1, 2, 3])
    args = ap.parse_args()
    w = csv.writer(sys.stdout)
    w.writerow(["K", "M", "R", "r", "B_N", "Bhat_N", "radius_estimate", "newton_rel_dev"])
    for (K, M, R), r in itertools.product(itertools.product(args.values, repeat=3), args.r):
        p = MajorantParams(K, M, R, r)
        s = majorant_series(p, args.degree)
        plain, hat = diagonal_bounds(s, "plain"), diagonal_bounds(s, "hat")
        dev = implicit_cross_check(p, args.degree).max_rel_deviation
        w.writerow([K, M, R, r, plain.values[args.degree], hat.values[args.degree], plain.radius_estimate, dev])


if __name__ == "__main__":
    main()
