"""Matplotlib renderings of the report artifacts, written next to their CSV
counterparts. The CSVs stay authoritative; these are convenience views."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .report import AcfResult, RelativeDiffCell

# stripped so reruns produce byte-identical files
_PNG_METADATA = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def render_heatmap(cells: list[RelativeDiffCell], path, baseline_id: str | None = None):
    """Percent-difference-vs-baseline heatmap: one row per (model, input
    size), one column per horizon, diverging palette centered on zero."""
    if not cells:
        return
    models = sorted({c.model_id for c in cells})
    if baseline_id in models and len(models) > 1:
        models.remove(baseline_id)
    inputs = sorted({c.input_size for c in cells})
    horizons = sorted({c.horizon for c in cells})
    row_keys = [(m, i) for i in inputs for m in models]
    grid = np.full((len(row_keys), len(horizons)), np.nan)
    for c in cells:
        if (c.model_id, c.input_size) not in row_keys:
            continue
        grid[row_keys.index((c.model_id, c.input_size)), horizons.index(c.horizon)] = (
            c.percent_diff
        )
    vmax = max(1.0, float(np.nanmax(np.abs(grid))) if np.isfinite(grid).any() else 1.0)

    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(horizons), 1.0 + 0.38 * len(row_keys)))
    im = ax.imshow(grid, cmap="RdBu_r", vmin=-vmax, vmax=vmax, aspect="auto")
    ax.set_xticks(range(len(horizons)), [str(h) for h in horizons])
    ax.set_yticks(range(len(row_keys)), [f"{m} / in {i}" for m, i in row_keys])
    ax.set_xlabel("horizon [h]")
    for r in range(grid.shape[0]):
        for c in range(grid.shape[1]):
            if not math.isnan(grid[r, c]):
                ax.text(c, r, f"{grid[r, c]:+.1f}%", ha="center", va="center", fontsize=7)
    fig.colorbar(im, ax=ax, label="% diff vs baseline")
    fig.tight_layout()
    _save(fig, path)


def render_hourly_profile(profile: list[float], path, title="Median hourly consumption"):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot(range(24), profile, marker="o", lw=1.5)
    ax.set_xlabel("hour of day")
    ax.set_ylabel("median kWh")
    ax.set_title(title)
    ax.set_xticks(range(0, 24, 3))
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def render_monthly_profile(matrix: list[list[float]], path):
    fig, ax = plt.subplots(figsize=(7, 4))
    arr = np.asarray(matrix, dtype=float)
    im = ax.imshow(arr, aspect="auto", cmap="viridis")
    ax.set_xlabel("hour of day")
    ax.set_ylabel("month")
    ax.set_yticks(range(12), [str(m) for m in range(1, 13)])
    fig.colorbar(im, ax=ax, label="median kWh")
    fig.tight_layout()
    _save(fig, path)


def render_acf(acfs: list[AcfResult], path, max_households: int = 12):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for acf in sorted(acfs, key=lambda a: a.household_id)[:max_households]:
        ax.plot(range(len(acf.coefficients)), acf.coefficients, lw=0.8, alpha=0.7)
    ax.axhline(0.0, color="black", lw=0.5)
    for lag in (24, 48, 72, 96, 120, 144, 168):
        ax.axvline(lag, color="grey", lw=0.4, ls=":")
    ax.set_xlabel("lag [h]")
    ax.set_ylabel("autocorrelation")
    fig.tight_layout()
    _save(fig, path)
