"""Matplotlib figures written next to the CSV/JSON outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .discrete import DiscreteDist  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.labelsize": 11,
    "legend.fontsize": 9,
    "legend.frameon": False,
}


def cdf_table(rep, exact=None, points: int = 400) -> list[tuple[float, float, float | None]]:
    """(t, empirical CDF, exact CDF or None) on a grid spanning the data and exact support."""
    lo, hi = float(rep.values.min()), float(rep.values.max())
    if isinstance(exact, DiscreteDist):
        lo, hi = min(lo, float(exact.min)), max(hi, float(exact.max))
    elif exact is not None:
        lo, hi = min(lo, 0.0), max(hi, 1.0)
    pad = 0.05 * (hi - lo or 1.0)
    ts = np.linspace(lo - pad, hi + pad, points)
    if isinstance(exact, DiscreteDist):
        ts = np.union1d(ts, [float(v) for v in exact.support])
    emp = rep.ecdf(ts)
    rows = []
    for t, e in zip(ts, emp):
        ex = None
        if isinstance(exact, DiscreteDist):
            ex = float(sum(p for v, p in exact.items() if float(v) <= t))
        elif exact is not None:
            ex = float(exact(float(t)))
        rows.append((float(t), float(e), ex))
    return rows


def plot_cdf_comparison(rep, exact, path: Path | str, title: str = "") -> Path:
    rows = cdf_table(rep, exact)
    ts = [r[0] for r in rows]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.step(ts, [r[1] for r in rows], where="post", label=f"empirical (R={rep.R})")
        if exact is not None:
            ax.step(ts, [r[2] for r in rows], where="post", linestyle="--", label="exact")
        ax.set_xlabel("t")
        ax.set_ylabel("P(W <= t)")
        ax.set_ylim(-0.02, 1.02)
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
    return Path(path)


def plot_laws(laws: Mapping[str, DiscreteDist], path: Path | str, title: str = "") -> Path:
    """Side-by-side probability bars for a few exact laws."""
    width = 0.8 / max(len(laws), 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, (label, law) in enumerate(laws.items()):
            xs = np.array([float(v) for v in law.support]) + (k - (len(laws) - 1) / 2) * width
            ax.bar(xs, [float(p) for p in law.probs], width=width * 0.9, label=label)
        ax.set_xlabel("value")
        ax.set_ylabel("probability")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
    return Path(path)
