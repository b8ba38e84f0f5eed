"""Normalize seeded random germ systems with Diophantine weights and report types, residuals and timings."""
import argparse
import csv
import sys
import time

from ueda.germs import DIOPHANTINE_ANGLES, random_system
from ueda.normalizer import normalize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", type=int, default=2)
    ap.add_argument("--degree", type=int, default=10)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--scale", type=float, default=0.1)
    ap.add_argument("--max-data-degree", type=int, default=3)
    args = ap.parse_args()
    angles = list(DIOPHANTINE_ANGLES[: args.r])
    w = csv.writer(sys.stdout)
    w.writerow(["seed", "type", "residual", "seconds"])
    for seed in range(args.seeds):
        s = random_system(angles, args.degree, seed, degrees=range(2, args.max_data_degree + 1), scale=args.scale)
        t0 = time.perf_counter()
        res = normalize(s)
        w.writerow([seed, res.type_label, res.residual, round(time.perf_counter() - t0, 4)])


if __name__ == "__main__":
    main()
