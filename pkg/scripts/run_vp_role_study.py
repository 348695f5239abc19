#!/usr/bin/env python3
"""Virtual-player role study: four coupled-HKB surrogates all-to-all, run
plain, then with an adaptive-follower VP attached to everyone, then with an
adaptive-leader VP (own-tempo sinusoid signature) attached to one player."""

import argparse

import numpy as np

from synclab.harness import run_vp_role_trial


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=6)
    parser.add_argument("--seed-base", type=int, default=0)
    parser.add_argument("--duration", type=float, default=30.0)
    args = parser.parse_args()

    for mode, label in ((None, "4 surrogates, no VP"),
                        ("follower", "+ adaptive-follower VP linked to all"),
                        ("leader", "+ adaptive-leader VP linked to one")):
        vals = []
        for k in range(args.trials):
            result = run_vp_role_trial(mode, seed=args.seed_base + k,
                                       duration_s=args.duration)
            vals.append(result.report.rho_g_mean)
        print(f"{label:<42} rho_g = {np.mean(vals):.4f} +/- {np.std(vals):.4f}")


if __name__ == "__main__":
    main()
