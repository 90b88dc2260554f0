"""Matplotlib rendering of a run matrix: best-rate heatmap with verdicts."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import VERDICT_SATISFIED
from .runner import MatrixReport

_VERDICT_MARK = {"satisfied": "pass", "failed": "FAIL", "not-demonstrated": "n/d"}


def render_matrix_figure(matrix: MatrixReport, path: str | Path) -> Path:
    """One cell per (test id, program): color is the best satisfaction rate
    across runs, label is the aggregate verdict."""
    programs = list(matrix.programs)
    test_ids = list(matrix.test_ids)
    rates = np.zeros((len(test_ids), len(programs)))
    for col, program in enumerate(programs):
        for row, test_id in enumerate(test_ids):
            best = matrix.aggregate[program][test_id].best_rate
            rates[row, col] = 0.0 if best is None else best

    fig_w = max(4.0, 1.0 + 1.1 * len(programs))
    fig_h = max(3.0, 1.0 + 0.45 * len(test_ids))
    fig, ax = plt.subplots(figsize=(fig_w, fig_h))
    mesh = ax.imshow(rates, cmap="RdYlGn", vmin=0.0, vmax=1.0, aspect="auto")
    ax.set_xticks(range(len(programs)), labels=programs, rotation=45, ha="right")
    ax.set_yticks(range(len(test_ids)), labels=test_ids)
    for col, program in enumerate(programs):
        for row, test_id in enumerate(test_ids):
            agg = matrix.aggregate[program][test_id]
            weight = "normal" if agg.verdict == VERDICT_SATISFIED else "bold"
            ax.text(col, row, _VERDICT_MARK[agg.verdict], ha="center", va="center",
                    fontsize=8, fontweight=weight)
    ax.set_title(f"best satisfaction rate (threshold {matrix.threshold:g})")
    fig.colorbar(mesh, ax=ax, shrink=0.8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
