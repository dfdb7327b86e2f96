"""Figure rendering for benchmark curves (one PNG per instance family)."""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_MARKERS = "ox^sdv*"


def render_family_figure(family: str, curves: Sequence, path) -> None:
    """Median scaled cost over time, one line per solver, log time axis."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    solvers = sorted({c.solver for c in curves})
    for marker, solver in zip(itertools.cycle(_MARKERS), solvers):
        members = [c for c in curves if c.solver == solver]
        times = sorted({p.time_ms for c in members for p in c.points})
        medians = []
        for t in times:
            vals = sorted(
                p.scaled_cost
                for c in members
                for p in c.points
                if p.time_ms == t and not math.isnan(p.scaled_cost)
            )
            medians.append(vals[(len(vals) - 1) // 2] if vals else math.nan)
        ax.plot(times, medians, marker=marker, markersize=4, linewidth=1.2, label=solver)
    ax.set_xscale("log")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("scaled cost")
    ax.set_title(family)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
