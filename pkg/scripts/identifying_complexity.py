"""gamma(T) for the pole-placed and the cheap-control gain, with their critical sample counts.

Usage: python scripts/identifying_complexity.py [--stop 400000] [--step 500] [--out out/identifying_complexity.csv]
"""
import argparse

import numpy as np

from encctl.designer import cheap_gain, find_T_star, pole_place
from encctl.records import write_csv
from encctl.security_curves import sic_curve

A_P = np.array([[1.0, 0.5], [0.0, -1.2]])
B_P = np.array([[0.0], [1.0]])
GAMMA_C = 1e-6


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--stop", type=int, default=400_000)
    ap.add_argument("--step", type=int, default=500)
    ap.add_argument("--out", default="out/identifying_complexity.csv")
    args = ap.parse_args()

    gains = {"poles": pole_place(A_P, B_P, [0.99, -0.99]), "cheap": cheap_gain(A_P, B_P)}
    Ts = np.arange(1, args.stop + 1, args.step)
    cols = []
    for name, F in gains.items():
        A = A_P + B_P @ F
        _, gamma = sic_curve(A, Ts)
        cols.append(gamma)
        print(f"{name}: F = {F.ravel()}, T* = {find_T_star(A, GAMMA_C)}")
    write_csv(args.out, ["T", "gamma_poles", "gamma_cheap", "gamma_c"],
              [[int(T), cols[0][i], cols[1][i], GAMMA_C] for i, T in enumerate(Ts)])
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
