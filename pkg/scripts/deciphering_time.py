"""tau(T, k) for a static key and for dynamic keys at both critical sample counts.

Usage: python scripts/deciphering_time.py [--kmax 1200] [--out out/deciphering_time.csv]
"""
import argparse
import math

from encctl.designer import find_k_star
from encctl.records import write_csv
from encctl.security_curves import CostModelParams, log_sdt

TAU_C = 1.5768e9  # 50 years in seconds
UPSILON = 4.42e17
SCENARIOS = {"static": 0, "dynamic_poles": 18586, "dynamic_cheap": 384473}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kmax", type=int, default=1200)
    ap.add_argument("--out", default="out/deciphering_time.csv")
    args = ap.parse_args()

    params = CostModelParams(upsilon=UPSILON)
    rows = []
    for k in range(2, args.kmax + 1):
        # log10 keeps the column finite for any k
        rows.append([k] + [log_sdt(T, k, params) / math.log(10) for T in SCENARIOS.values()] + [math.log10(TAU_C)])
    write_csv(args.out, ["k"] + [f"log10_tau_{n}" for n in SCENARIOS] + ["log10_tau_c"], rows)
    for name, T in SCENARIOS.items():
        print(f"{name}: T = {T}, k* = {find_k_star(T, TAU_C, UPSILON)}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
