"""Report figures rendered alongside the delimited outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_trajectory_figure",
    "save_quantile_figure",
    "save_extinction_figure",
    "save_progeny_figure",
]

# fixed metadata keeps PNG bytes reproducible across runs
_META = {"Software": "poolsim"}


def _finish(fig, path):
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)


def save_trajectory_figure(trajs, path, title="pool radius"):
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    for traj in trajs:
        times = [e.time for e in traj.events]
        radii = [e.radius_after for e in traj.events]
        horizon = traj.metadata.get("horizon")
        if horizon is not None and horizon > times[-1] and traj.exploded_at is None:
            times = times + [horizon]
            radii = radii + [radii[-1]]
        ax.step(times, radii, where="post", lw=0.8, alpha=0.8)
    ax.set_xlabel("time")
    ax.set_ylabel("radius")
    ax.set_title(title)
    _finish(fig, path)


def save_quantile_figure(table, path, title="ensemble radius quantiles"):
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    t = table["time"]
    ax.fill_between(t, table["min"], table["max"], alpha=0.15, label="min-max")
    ax.fill_between(t, table["q10"], table["q90"], alpha=0.35, label="q10-q90")
    ax.plot(t, table["q50"], lw=1.5, label="median")
    ax.set_xlabel("time")
    ax.set_ylabel("radius")
    ax.set_title(title)
    ax.legend(loc="upper left")
    _finish(fig, path)


def save_extinction_figure(lams, q, bound, path):
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    lams = np.asarray(lams)
    ax.plot(lams, q, "o-", label="extinction prob q")
    ax.plot(lams, 1.0 - np.asarray(q), "s-", label="survival prob")
    ax.plot(lams, bound, "^-", label="survival lower bound")
    ax.axvline(1.0, color="k", lw=0.8, ls=":")
    ax.set_xlabel("offspring mean")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    _finish(fig, path)


def save_progeny_figure(samples, path, title="total progeny survival"):
    samples = np.asarray(samples)
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    positive = samples[samples >= 1]
    if positive.size:
        grid = np.unique(np.geomspace(1, max(positive.max(), 2), 60).astype(np.int64))
        surv = 1.0 - np.searchsorted(np.sort(positive), grid, side="left") / positive.size
        keep = surv > 0
        ax.loglog(grid[keep], surv[keep], "o-", ms=3, label="empirical")
        ref = surv[0] * (grid[keep] / max(grid[0], 1)) ** -0.5
        ax.loglog(grid[keep], ref, "--", label="slope -1/2")
        ax.legend()
    ax.set_xlabel("total progeny n")
    ax.set_ylabel("P(X >= n)")
    ax.set_title(title)
    _finish(fig, path)
