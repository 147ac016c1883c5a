"""Optional matplotlib rendering of report traces."""
from __future__ import annotations

from pathlib import Path

from .report import NormReport


def plot_traces(report: NormReport, path, names=None) -> Path:
    """Log-log plot of every positive trace in ``report``; returns the written path."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(names or report.traces):
        tr = report.traces[name]
        pts = [(abs(float(x)), float(v)) for x, v in zip(tr["coordinate"], tr["value"])
               if isinstance(v, (int, float)) and v > 0 and float(x) != 0]
        if len(pts) >= 2:
            xs, ys = zip(*pts)
            ax.loglog(xs, ys, label=name)
    ax.set_xlabel("|coordinate|")
    ax.set_ylabel("norm")
    ax.set_title(report.run_id)
    if ax.lines:
        ax.legend(fontsize=6)
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path
