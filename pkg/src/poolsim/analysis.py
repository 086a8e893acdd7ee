"""Deterministic trajectory analysis: stall search, mass-conservation
audit, and ensemble summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engulf import radius_from_mass
from .stats import StatReport
from .trajectory import Trajectory

__all__ = ["StallParams", "find_stall", "mass_audit", "ensemble_quantiles"]


@dataclass(frozen=True)
class StallParams:
    """Stall-search parameters; beta defaults to the proposition's value
    1 / (12 (1 - alpha/2)) when not supplied."""

    alpha: float
    beta: float | None = None
    T0: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.beta is None:
            object.__setattr__(self, "beta", 1.0 / (12.0 * (1.0 - self.alpha / 2.0)))
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must be in (0,1), got {self.beta}")
        if self.T0 < 0:
            raise ValueError(f"T0 must be >= 0, got {self.T0}")


def find_stall(traj: Trajectory, params: StallParams) -> float | None:
    """Smallest grid time t1 > T0 with radius(t1 - t1^beta) >= radius(t1) - 2.

    The scan grid is the trajectory's event times plus the integer times;
    the radius is evaluated cadlag.  Returns None when no stall exists in
    the horizon.  The result is self-verifying: re-evaluating the
    inequality at the returned time always holds.
    """
    horizon = float(traj.metadata.get("horizon", traj.events[-1].time))
    if params.T0 > horizon:
        raise ValueError(f"T0={params.T0} is beyond the horizon {horizon}")
    grid = {e.time for e in traj.events}
    grid.update(float(k) for k in range(1, int(math.floor(horizon)) + 1))
    beta = params.beta
    for t1 in sorted(grid):
        if t1 <= params.T0 or t1 > horizon:
            continue
        lookback = t1 - t1**beta
        if lookback < traj.events[0].time:
            continue
        if traj.radius_at(lookback) >= traj.radius_at(t1) - 2.0:
            return t1
    return None


def mass_audit(traj: Trajectory, engine: str | None = None) -> StatReport:
    """Verify mass conservation event by event.

    Checks, exactly: radius_after is sqrt(mass_after/pi) bit-for-bit;
    mass never decreases; mass_after equals 1 + cumulative released count
    (via the per-event round sums, and the absorbed id lists when
    present).  A box-engine arrival's rounds include the entrants; an
    exact-engine arrival adds the triggering particle on top of its
    cascade rounds.
    """
    engine = engine or traj.metadata.get("engine")
    discrepancies = []
    prev_mass = None
    for i, ev in enumerate(traj.events):
        if ev.radius_after != radius_from_mass(ev.mass_after):
            discrepancies.append((i, "radius != sqrt(mass/pi)"))
        if prev_mass is not None and ev.mass_after < prev_mass:
            discrepancies.append((i, "mass decreased"))
        delta = ev.mass_after - (prev_mass if prev_mass is not None else 1)
        if ev.absorbed_ids is not None and len(ev.absorbed_ids) != delta:
            discrepancies.append((i, "absorbed id count != mass increment"))
        if ev.rounds and engine in ("exact", "box"):
            expected = sum(ev.rounds)
            if engine == "exact" and ev.kind in ("arrival", "cap-hit"):
                expected += 1  # the triggering particle
            if expected != delta:
                discrepancies.append((i, "round sums != mass increment"))
        prev_mass = ev.mass_after
    ok = not discrepancies
    return StatReport(
        name="mass_audit",
        estimate=float(len(discrepancies)),
        ci_low=float(len(discrepancies)),
        ci_high=float(len(discrepancies)),
        n_samples=len(traj.events),
        verdict="pass" if ok else "fail",
        details={
            "engine": engine,
            "discrepancies": [{"event": i, "problem": p} for i, p in discrepancies],
            "final_mass": traj.final_mass,
        },
    )


def ensemble_quantiles(trajs: list[Trajectory], times) -> dict[str, np.ndarray]:
    """Pointwise radius quantiles across trajectories on a time grid.

    Returns columns time, q10, q50, q90, min, max (cadlag evaluation)."""
    if not trajs:
        raise ValueError("need at least one trajectory")
    times = np.asarray(times, dtype=float)
    values = np.empty((len(trajs), times.size))
    for i, traj in enumerate(trajs):
        for j, t in enumerate(times):
            values[i, j] = traj.radius_at(t)
    return {
        "time": times,
        "q10": np.quantile(values, 0.10, axis=0),
        "q50": np.quantile(values, 0.50, axis=0),
        "q90": np.quantile(values, 0.90, axis=0),
        "min": values.min(axis=0),
        "max": values.max(axis=0),
    }
