"""Figure rendering from parsed artifacts.

These functions never recompute model quantities: every number drawn comes
straight from the input files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .readers import AuditData, HeatmapData, LatentData  # noqa: E402


def plot_heatmap(data: HeatmapData, title: str | None = None,
                 annotate_fmt: str = "{:.3g}"):
    """Parameter-space error map: one colored, annotated cell per grid point,
    black square outlines on the sampled cells."""
    mu1_vals = np.unique(data.mu1)
    mu2_vals = np.unique(data.mu2)
    n1, n2 = len(mu1_vals), len(mu2_vals)
    grid = np.full((n2, n1), np.nan)
    sampled = np.zeros((n2, n1), dtype=bool)
    i1 = np.searchsorted(mu1_vals, data.mu1)
    i2 = np.searchsorted(mu2_vals, data.mu2)
    grid[i2, i1] = data.max_rel_error
    sampled[i2, i1] = data.sampled

    fig, ax = plt.subplots(figsize=(1.1 * n1 + 1.5, 0.9 * n2 + 1.2))
    finite = data.max_rel_error[np.isfinite(data.max_rel_error)]
    vmax = float(finite.max()) if finite.size else 1.0
    mesh = ax.imshow(grid, origin="lower", cmap="viridis", vmin=0.0, vmax=vmax,
                     aspect="auto")
    for r in range(n2):
        for c in range(n1):
            val = grid[r, c]
            ax.text(c, r, annotate_fmt.format(val), ha="center", va="center",
                    fontsize=8,
                    color="white" if np.isfinite(val) and val < 0.6 * vmax else "black")
            if sampled[r, c]:
                ax.add_patch(Rectangle((c - 0.5, r - 0.5), 1.0, 1.0, fill=False,
                                       edgecolor="black", linewidth=2.2))
    ax.set_xticks(range(n1), [f"{v:g}" for v in mu1_vals], rotation=45)
    ax.set_yticks(range(n2), [f"{v:g}" for v in mu2_vals])
    ax.set_xlabel("mu_1")
    ax.set_ylabel("mu_2")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label="max relative error")
    fig.tight_layout()
    return fig, ax


def plot_latent(data: LatentData, title: str | None = None):
    """Overlay per-coordinate latent series: encoder output (solid) against
    the integrated dynamics prediction (dashed)."""
    n_z = data.z_enc.shape[1]
    fig, axes = plt.subplots(n_z, 1, sharex=True,
                             figsize=(7, 1.8 * n_z + 0.8), squeeze=False)
    for i in range(n_z):
        ax = axes[i, 0]
        ax.plot(data.t, data.z_enc[:, i], "-", lw=1.8, label="encoder")
        ax.plot(data.t, data.z_di[:, i], "--", lw=1.8, label="dynamics model")
        ax.set_ylabel(f"z{i + 1}")
        if i == 0:
            ax.legend(loc="best", fontsize=8)
            if title:
                ax.set_title(title)
    axes[-1, 0].set_xlabel("t")
    fig.tight_layout()
    return fig, axes[:, 0].tolist()


def plot_indicator_fit(data: AuditData, title: str | None = None):
    """Scatter of (indicator, true max error) pairs with the recorded
    least-squares line; the legend carries the fit coefficients verbatim."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(data.e_res, data.e_max, s=18, alpha=0.8, label="training samples")
    finite = data.e_res[np.isfinite(data.e_res)]
    xs = np.linspace(0.0, float(finite.max()) * 1.05 if finite.size else 1.0, 50)
    label = f"fit: slope={data.fit_slope!r}, intercept={data.fit_intercept!r}"
    ax.plot(xs, data.fit_slope * xs + data.fit_intercept, "r-", lw=1.5,
            label=label)
    ax.set_xlabel("residual indicator")
    ax.set_ylabel("max relative error")
    ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return fig, ax
