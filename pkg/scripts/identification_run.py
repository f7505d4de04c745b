"""Posterior mean and 95% band of every entry of A over T = 1..5000 (one seeded run).

Usage: python scripts/identification_run.py [--seed 0] [--T 5000] [--out out/identification.csv]
"""
import argparse

import numpy as np

from encctl import adversary as adv
from encctl.designer import pole_place
from encctl.records import write_csv
from encctl.simulator import PlantModel, run_closed_loop

A_P = np.array([[1.0, 0.5], [0.0, -1.2]])
B_P = np.array([[0.0], [1.0]])


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--T", type=int, default=5000)
    ap.add_argument("--out", default="out/identification.csv")
    args = ap.parse_args()

    plant = PlantModel(A_P, B_P, np.eye(2))
    F = pole_place(A_P, B_P, [0.99, -0.99])
    A = plant.closed_loop(F)
    traj, _ = run_closed_loop(plant, F, args.T, seed=args.seed)
    rows = []
    for T, post in adv.posterior_path(adv.Prior.standard(2), traj.states, plant.L):
        ci = adv.ci_half_widths(post)
        rows.append([T, *post.mu_hat, *ci, adv.total_variance(post)])
    header = ["T"] + [f"mu_{i}" for i in range(1, 5)] + [f"ci_{i}" for i in range(1, 5)] + ["total_variance"]
    write_csv(args.out, header, rows)
    print("true vec(A):", A.flatten(order="F"))
    print("final mean: ", np.array(rows[-1][1:5]))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
