"""Plot x^1 against x^0 for every particle in a trajectory CSV written by
``relbohm run``.  Spacelike samples are drawn in red.  Needs matplotlib,
which is not a package dependency.

    python scripts/plot_trajectory.py out/trajectory_000.csv -o traj.png
"""
import argparse
import csv
from collections import defaultdict


def load(path):
    parts = defaultdict(lambda: {"t": [], "x": [], "flag": []})
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            p = parts[int(row["particle"])]
            p["t"].append(float(row["t"]))
            p["x"].append(float(row["x"]))
            p["flag"].append(row["flag"])
    return dict(parts)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("-o", "--output", default="trajectory.png")
    args = ap.parse_args()
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise SystemExit("matplotlib is required for plotting (pip install matplotlib)")
    fig, ax = plt.subplots(figsize=(5, 5))
    for a, p in sorted(load(args.csv).items()):
        ax.plot(p["x"], p["t"], lw=1, label=f"particle {a}")
        sx = [x for x, f in zip(p["x"], p["flag"]) if f == "spacelike"]
        st = [t for t, f in zip(p["t"], p["flag"]) if f == "spacelike"]
        if sx:
            ax.plot(sx, st, "r.", ms=2)
    ax.set_xlabel("x")
    ax.set_ylabel("t")
    ax.legend()
    fig.savefig(args.output, dpi=150, bbox_inches="tight")
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
