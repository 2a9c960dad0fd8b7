"""
SVG quick-look plots.

Rendered with the Agg backend, a fixed SVG hash salt and no date metadata,
so identical data produce identical bytes.
"""

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from models.result_models import PlotSpec

matplotlib.rcParams["svg.hashsalt"] = "tll-lab"


def _line(ax, spec: PlotSpec):
    for label, values in spec.series.items():
        values = np.asarray(values, dtype=float)
        x = np.asarray(spec.x, dtype=float)
        if spec.log_log:
            keep = (x > 0) & (values > 0) & np.isfinite(values)
            ax.loglog(x[keep], values[keep], "o-", markersize=3, label=label)
        else:
            ax.plot(x, values, "o-", markersize=3, label=label)
    if spec.series:
        ax.legend(fontsize="small")


def _heatmap(fig, ax, spec: PlotSpec):
    mesh = ax.pcolormesh(np.asarray(spec.x, dtype=float), np.asarray(spec.y, dtype=float),
                         np.asarray(spec.z, dtype=float), shading="nearest", cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax)


def render_plot(spec: PlotSpec, output_dir: Path) -> Path:
    """Write <name>.svg and return its path"""
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        if spec.kind == "heatmap":
            _heatmap(fig, ax, spec)
        elif spec.kind == "line":
            _line(ax, spec)
        else:
            raise ValueError(f"unknown plot kind '{spec.kind}'")
        ax.set_xlabel(spec.xlabel)
        ax.set_ylabel(spec.ylabel)
        ax.set_title(spec.title)
        fig.tight_layout()
        path = Path(output_dir) / f"{spec.name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path
