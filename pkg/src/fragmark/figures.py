"""Figure rendering for report artifacts.

Everything draws through the Agg backend straight to files; nothing here
opens a window. Curve plots take (x, y) series keyed by a legend label so
the same two entry points cover the r-sweep, the l-sweep, and the strategy
comparison table.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ParameterError

Series = Mapping[str, tuple[Sequence[float], Sequence[float]]]


def render_rate_curves(
    series: Series,
    path: str | Path,
    xlabel: str = "tamper side l (blocks)",
    ylabel: str = "average recovery rate",
    title: str | None = None,
) -> Path:
    """One line per label; y axis clamped to a rate-friendly window."""
    if not series:
        raise ParameterError("no series to plot")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    lo = 1.0
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, marker="o", markersize=4, linewidth=1.4, label=label)
        lo = min(lo, min(ys))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_ylim(max(0.0, lo - 0.05), 1.01)
    ax.grid(True, linewidth=0.4, alpha=0.5)
    ax.legend(fontsize=9)
    if title:
        ax.set_title(title)
    out = Path(path)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def render_block_heatmap(
    rates: np.ndarray,
    path: str | Path,
    title: str | None = None,
) -> Path:
    """Per-block recovery-rate grid over the tamper region."""
    if rates.ndim != 2 or rates.size == 0:
        raise ParameterError("heatmap needs a non-empty 2-D rate grid")
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    im = ax.imshow(rates, cmap="viridis", vmin=min(0.9, float(rates.min())), vmax=1.0)
    ax.set_xlabel("block column within region")
    ax.set_ylabel("block row within region")
    fig.colorbar(im, ax=ax, label="recovery rate")
    if title:
        ax.set_title(title)
    out = Path(path)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def comparison_series(cells) -> Series:
    """Fold experiment cells into per-strategy measured-rate curves.

    Cells for the constrained strategy split into one curve per r; failed
    cells (no trials) are dropped.
    """
    series: dict[str, tuple[list[float], list[float]]] = {}
    for cell in cells:
        if cell.error is not None:
            continue
        label = cell.strategy if cell.r is None else f"{cell.strategy} r={cell.r}"
        xs, ys = series.setdefault(label, ([], []))
        xs.append(cell.l)
        ys.append(cell.measured_rate)
    return series
