"""Mean Enc/Dec/T_K/T_C times at the three designed key lengths (ordering, not absolute values).

Usage: python scripts/timing_table.py [--trials 1000] [--seed 0] [--out out/timings.csv]
"""
import argparse
import random

from encctl.bench import time_key_lengths
from encctl.records import write_csv

KEY_BITS = (641, 734, 1091)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/timings.csv")
    args = ap.parse_args()

    stats = time_key_lengths(KEY_BITS, args.trials, random.Random(args.seed))
    write_csv(args.out, ["k", "op", "min", "mean", "max", "std"], [s.row() for s in stats])
    print(f"{'op':<5}" + "".join(f"{k:>12}" for k in KEY_BITS))
    for op in ("Enc", "Dec", "T_K", "T_C"):
        means = {s.k: s.mean for s in stats if s.op == op}
        print(f"{op:<5}" + "".join(f"{means[k] * 1e3:>10.3f}ms" for k in KEY_BITS))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
