"""Scan the amplitude ratio of the rest + moving two-mode state and report
the fraction of spacelike guidance samples along one trajectory.

    python scripts/superluminal_scan.py --ratios 0.2 0.5 0.8 0.9
"""
import argparse

import numpy as np

from relbohm.dynamics import IntegratorSettings, NodeProximity, integrate, superluminal_fraction
from relbohm.states import unequal_two_mode


def scan(ratios, s_end=20.0, n_samples=2001):
    rows = []
    for r in ratios:
        psi = unequal_two_mode(ratio=r)
        # start on a minimum of |psi| at t = 0: the relative phase x equals pi there
        x0 = [[0.0, np.pi, 0.5, 0.5]]
        try:
            traj = integrate(psi, x0, (0.0, s_end), IntegratorSettings(node_abort=False), n_samples=n_samples)
            rows.append((r, superluminal_fraction(traj), traj.status))
        except NodeProximity as exc:
            rows.append((r, float("nan"), f"node: {exc}"))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.2, 0.4, 0.6, 0.8, 0.9, 0.95])
    ap.add_argument("--s-end", type=float, default=20.0)
    args = ap.parse_args()
    print(f"{'ratio':>8} {'spacelike fraction':>20}  status")
    for r, frac, status in scan(args.ratios, args.s_end):
        print(f"{r:8.3f} {frac:20.4f}  {status}")


if __name__ == "__main__":
    main()
