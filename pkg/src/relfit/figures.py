"""Render simulation densities against the chi-squared reference law.

One PNG per requested statistic: the report's Freedman-Diaconis histogram
drawn as a density, with the chi-squared density for the experiment's
degrees of freedom overlaid.  Rendering is strictly opt-in and imports
matplotlib lazily with the file-only backend, so library use never needs
a display.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .errors import InvalidArgument
from .simulate import SimulationReport


def _chisq_pdf(x: np.ndarray, k: int) -> np.ndarray:
    half = 0.5 * k
    log_norm = half * math.log(2.0) + math.lgamma(half)
    with np.errstate(divide="ignore"):
        logs = (half - 1.0) * np.log(x) - 0.5 * x - log_norm
    return np.exp(logs)


def render_figures(report: SimulationReport, out_dir) -> list[Path]:
    """Write <statistic>_density.png files into ``out_dir``; returns paths."""
    if report.df < 1:
        raise InvalidArgument(
            "density figures need at least one degree of freedom"
        )
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name in report.statistics:
        hist = report.histograms[name]
        edges = np.asarray(hist["bin_edges"], dtype=float)
        counts = np.asarray(hist["counts"], dtype=float)
        widths = np.diff(edges)
        total = counts.sum()
        density = counts / (total * widths) if total > 0 else counts

        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        ax.bar(edges[:-1], density, width=widths, align="edge",
               color="#9ecae1", edgecolor="#4292c6", linewidth=0.4,
               label=f"empirical {name}")
        lo = max(float(edges[0]), 1e-3)
        hi = max(float(edges[-1]), lo + 1.0)
        grid = np.linspace(lo, hi, 400)
        pdf = _chisq_pdf(grid, report.df)
        ax.plot(grid, pdf, color="#d7301f", linewidth=1.6,
                label=f"chi-squared, {report.df} df")
        top = float(density.max()) if density.size else 1.0
        ax.set_ylim(0.0, max(top * 1.25, 1e-3))
        ax.set_xlabel(f"{name} statistic")
        ax.set_ylabel("density")
        ax.set_title(
            f"{name} vs chi-squared({report.df}), "
            f"{report.replicates} replicates, {report.scheme.value}"
        )
        ax.legend(frameon=False)
        fig.tight_layout()
        path = directory / f"{name}_density.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
