"""Static SVG figures for batch reports (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_figure1", "plot_convergence", "plot_fluid"]


def _save(fig, path) -> Path:
    path = Path(path)
    # fixed metadata keeps reruns byte-identical
    fig.savefig(path, format=path.suffix.lstrip(".") or "svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_figure1(hists, path) -> Path:
    """One panel per epoch: queued (solid) and sent-to-service (dotted) by lead time."""
    fig, axes = plt.subplots(1, len(hists), figsize=(4.2 * len(hists), 3.2), sharey=True)
    axes = np.atleast_1d(axes)
    for ax, (edges, hq, hs, t) in zip(axes, hists):
        mid = 0.5 * (edges[:-1] + edges[1:])
        ax.plot(mid, hq, "-", color="k", lw=1.2, label="not sent to service")
        ax.plot(mid, hs, ":", color="k", lw=1.4, label="sent to service")
        ax.set_title(f"t = {t:g}")
        ax.set_xlabel("lead time")
    axes[0].set_ylabel("jobs per bin")
    axes[0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_convergence(report: dict, path) -> Path:
    """Median (with 10-90% band) of each metric against N on log-log axes."""
    metrics = report["metrics"]
    Ns = np.asarray(report["N_list"], dtype=float)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    top = 0.0
    for name, byN in sorted(metrics.items()):
        med = np.array([byN[str(int(n))]["median"] for n in Ns])
        lo = np.array([byN[str(int(n))]["q10"] for n in Ns])
        hi = np.array([byN[str(int(n))]["q90"] for n in Ns])
        if not np.any(med > 0):
            continue
        top = max(top, med[0])
        line, = ax.plot(Ns, med, "o-", label=name)
        ax.fill_between(Ns, np.maximum(lo, 1e-12), np.maximum(hi, 1e-12),
                        color=line.get_color(), alpha=0.15)
    if top > 0:
        ax.plot(Ns, top * np.sqrt(Ns[0] / Ns), "k--", lw=0.8, label=r"$N^{-1/2}$ guide")
        ax.set_yscale("log")
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("sup-in-time distance")
    ax.set_title(report.get("experiment", ""))
    ax.legend(frameon=False, fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_fluid(fluid, path, n_snapshots: int = 5) -> Path:
    """Queue CDF snapshots plus the scalar paths (reneging and idleness)."""
    xi = fluid.xi
    fig, (a, b) = plt.subplots(1, 2, figsize=(10, 3.8))
    rows = np.unique(np.linspace(0, xi.times.size - 1, n_snapshots).round().astype(int))
    for k in rows:
        a.plot(xi.grid, xi.cdf[k], label=f"t = {xi.times[k]:.3g}")
    a.set_xlabel("x")
    a.set_ylabel(r"$\xi_t[0,x]$")
    a.legend(frameon=False, fontsize=8)
    t = xi.times
    b.plot(t, xi.total, label="queue mass")
    b.plot(t, fluid.rho.values, label="reneged")
    b.plot(t, fluid.iota.values, label="idle effort")
    b.set_xlabel("t")
    b.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
