#!/usr/bin/env python3
"""Plot BER-vs-SNR curves from a sweep CSV (optional; needs matplotlib)."""

import argparse
import csv
from collections import defaultdict

STYLES = {"jml": "k-o", "mlsic": "b-s", "deepsic": "r-^"}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv_path")
    parser.add_argument("-o", "--output", help="write PNG here instead of showing")
    args = parser.parse_args()

    curves = defaultdict(list)
    with open(args.csv_path, newline="") as fh:
        for row in csv.DictReader(fh):
            curves[(row["detector"], int(row["user"]))].append(
                (float(row["snr_db"]), float(row["ber"])))

    import matplotlib
    if args.output:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5), sharey=True)
    for (detector, user), points in sorted(curves.items()):
        points.sort()
        snr = [p[0] for p in points]
        ber = [max(p[1], 0) for p in points]
        axes[user - 1].semilogy(snr, ber, STYLES.get(detector, "-x"), label=detector)
    for user, ax in enumerate(axes, start=1):
        ax.set_title(f"user {user}")
        ax.set_xlabel("SNR (dB)")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    axes[0].set_ylabel("BER")
    fig.tight_layout()
    if args.output:
        fig.savefig(args.output, dpi=150)
        print(f"wrote {args.output}")
    else:
        plt.show()


if __name__ == "__main__":
    main()
