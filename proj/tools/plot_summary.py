#!/usr/bin/env python3
"""Plot mean PDR with 95% intervals from a *_summary.csv written by cv2x_sim."""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("summary", help="summary CSV")
    parser.add_argument("-o", "--output", default="pdr.png", help="image file")
    args = parser.parse_args()

    df = pd.read_csv(args.summary)
    axis = df["axis"].iloc[0]
    fig, ax = plt.subplots(figsize=(6, 4))
    for (speed, rri), group in df.groupby(["speed_kmh", "rri_ms"] if axis != "rri_multiplier" else ["speed_kmh", "axis"]):
        group = group.sort_values("axis_value")
        label = f"{speed:g} km/h" + (f", {rri} ms" if axis != "rri_multiplier" else "")
        err = [group["mean_pdr"] - group["ci_low"], group["ci_high"] - group["mean_pdr"]]
        ax.errorbar(group["axis_value"], group["mean_pdr"], yerr=err, marker="o", capsize=3, label=label)
    ax.set_xlabel(axis)
    ax.set_ylabel("PDR")
    ax.set_ylim(0, 1)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
