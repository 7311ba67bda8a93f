"""Figures written next to the CSV output (``--plot``)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_curves(curves, path, title: str = ""):
    """Mean relative error against transmissions, one line per algorithm."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for name, c in curves.items():
        ax.semilogy(c.tx, c.mean, label=name, lw=1.4)
    ax.set_xlabel("transmissions")
    ax.set_ylabel("relative error")
    ax.set_ylim(bottom=1e-4)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(rows, path):
    n = [r.n for r in rows]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    top.errorbar(n, [r.A_mean for r in rows],
                 yerr=[[r.A_mean - r.A_min for r in rows], [r.A_max - r.A_mean for r in rows]],
                 marker="o", capsize=3)
    top.set_ylabel("A(G)")
    bottom.errorbar(n, [r.tave_mean for r in rows],
                    yerr=[[r.tave_mean - r.tave_min for r in rows],
                          [r.tave_max - r.tave_mean for r in rows]],
                    marker="o", capsize=3, label="simulated")
    bottom.plot(n, [r.bound_mean for r in rows], "s--", label="bound")
    ref = [r.ref_rgg if r.topology == "rgg" else r.ref_grid for r in rows]
    bottom.plot(n, ref, "k:", label="reference")
    bottom.set_xlabel("number of nodes")
    bottom.set_ylabel("T_ave(eps) / n")
    bottom.set_yscale("log")
    bottom.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
