"""Static figures drawn from ``results.csv`` and from saved fit directories."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid import read_csv  # noqa: E402
from .io import load_fit  # noqa: E402

METHOD_COLORS = {"graphnotears": "tab:red", "notears_lasso": "tab:blue", "dynotears": "tab:green"}
METHOD_LABELS = {"graphnotears": "GraphNOTEARS", "notears_lasso": "NOTEARS+LASSO", "dynotears": "DYNOTEARS"}


def plot_grid(csv_path, out_dir, metrics=("f1", "shd")) -> list[Path]:
    """One figure per (metric, noise, n, lag set), panels laid out inter model x intra model.

    x axis is d; each method is one color; solid lines are intra-slice (W),
    dashed lines inter-slice (P); bands are the 95% CI.
    """
    rows = [r for r in read_csv(csv_path) if r["kind"] == "aggregate" and r["f1_w"] != ""]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    keys = sorted({(r["noise"], int(r["n"]), r["lags"]) for r in rows})
    intras = sorted({r["intra_model"] for r in rows})
    inters = sorted({r["inter_model"] for r in rows})
    for metric in metrics:
        for noise, n, lags in keys:
            sub = [r for r in rows if (r["noise"], int(r["n"]), r["lags"]) == (noise, n, lags)]
            fig, axes = plt.subplots(
                len(inters), len(intras), figsize=(4 * len(intras), 3 * len(inters)),
                squeeze=False, sharex=True,
            )
            for i, inter in enumerate(inters):
                for j, intra in enumerate(intras):
                    ax = axes[i, j]
                    panel = [r for r in sub if r["inter_model"] == inter and r["intra_model"] == intra]
                    for method in sorted({r["method"] for r in panel}):
                        pts = sorted((int(r["d"]), r) for r in panel if r["method"] == method)
                        x = np.array([p[0] for p in pts])
                        for col, style in (("w", "-"), ("p", "--")):
                            y = np.array([float(p[1][f"{metric}_{col}"]) for p in pts])
                            ci = np.array([float(p[1][f"{metric}_{col}_ci"] or 0) for p in pts])
                            color = METHOD_COLORS.get(method)
                            label = f"{METHOD_LABELS.get(method, method)} ({col.upper()})"
                            ax.plot(x, y, style, marker="o", color=color, label=label)
                            ax.fill_between(x, y - ci, y + ci, color=color, alpha=0.15)
                    ax.set_title(f"intra {intra} / inter {inter}", fontsize=9)
                    ax.set_xlabel("d")
                    ax.set_ylabel(metric.upper())
            axes[0, 0].legend(fontsize=7)
            fig.suptitle(f"{metric.upper()}: {noise} noise, n={n}, lags {lags}")
            fig.tight_layout()
            path = out_dir / f"{metric}_{noise}_n{n}_lags{lags}.png"
            fig.savefig(path, dpi=100)
            plt.close(fig)
            written.append(path)
    return written


def plot_sorted_weights(result_dir, out_path, tau_w: float | None = None, tau_p: float | None = None) -> Path:
    """Continuous |W| and |P| estimates sorted in decreasing order, with the thresholds marked."""
    res = load_fit(result_dir)
    fig, axes = plt.subplots(1, 2, figsize=(8, 3))
    for ax, M, tau, name in ((axes[0], res.W_cont, tau_w, "W"), (axes[1], res.P_cont, tau_p, "P")):
        w = np.sort(np.abs(np.asarray(M).ravel()))[::-1]
        ax.plot(np.arange(1, w.size + 1), w, marker=".")
        if tau is not None:
            ax.axhline(tau, color="gray", linestyle=":", label=f"tau = {tau}")
            ax.legend(fontsize=8)
        ax.set_title(f"sorted |{name}|")
        ax.set_xlabel("rank")
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=100)
    plt.close(fig)
    return out_path
