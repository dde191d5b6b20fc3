"""Plot a sweep summary written by `blochctl sweep`.

usage: python docs/plot_sweep.py sweep.csv [out.png]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(argv):
    if len(argv) < 2:
        print(__doc__.strip())
        return 1
    df = pd.read_csv(argv[1])
    out = argv[2] if len(argv) > 2 else "sweep.png"

    fig, axes = plt.subplots(1, 3, figsize=(13, 3.8))
    axes[0].plot(df.n_mean, df.tracking_error_integral, "o-")
    axes[0].set_xscale("log")
    axes[0].set_xlabel("N")
    axes[0].set_ylabel("tracking error")

    axes[1].plot(df.n_mean, df.terminal_pe, "o-", label="p_e(tf)")
    axes[1].plot(df.n_mean, df.terminal_pg, "s-", label="p_g(tf)")
    axes[1].set_xscale("log")
    axes[1].set_xlabel("N")
    axes[1].legend()

    axes[2].plot(df.n_mean, df.mean_decoherence_controlled, "o-", label="controlled")
    axes[2].plot(df.n_mean, df.mean_decoherence_free, "s--", label="free")
    axes[2].set_xscale("log")
    axes[2].set_xlabel("N")
    axes[2].set_ylabel("mean Lambda")
    axes[2].legend()

    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
