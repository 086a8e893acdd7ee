"""Approximate simulator in a periodic square box.

Free particles live in the centred box with periodic wrapping and the
pool sits at the box centre.  Time advances in fixed steps: every active
particle moves, then engulfing runs at the end of the step as a repeated
sweep (absorb everything inside the pool, recompute the radius, re-sweep)
until no active particle qualifies.  A particle that wanders into the
pool mid-step is therefore only detected at the step end, which is the
declared approximation of this engine.

Two kinematics: ``random-walk`` (rate-1 Poisson jump counts per step,
displacements collapsed to one Gaussian) and ``brownian`` (one
N(0, dt*I) increment per step).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engulf import cascade, radius_from_mass
from .field import sample_ppp_box, wrap_periodic
from .streams import RngStream
from .trajectory import Trajectory, TrajectoryEvent

__all__ = ["BoxConfig", "BoxState", "box_step", "run_box"]

KINEMATICS = ("random-walk", "brownian")


@dataclass(frozen=True)
class BoxConfig:
    lam: float
    box_side: float = 800.0
    dt: float = 0.01
    horizon: float = 100.0
    kinematics: str = "random-walk"
    cap: int = 10_000_000
    seed: RngStream = field(default_factory=lambda: RngStream(0))

    def __post_init__(self):
        errors = []
        if not (math.isfinite(self.lam) and self.lam >= 0):
            errors.append(f"lam must be >= 0, got {self.lam}")
        if not (math.isfinite(self.box_side) and self.box_side > 0):
            errors.append(f"box_side must be > 0, got {self.box_side}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            errors.append(f"dt must be > 0, got {self.dt}")
        if not (math.isfinite(self.horizon) and self.horizon >= self.dt):
            errors.append(f"horizon must be >= dt, got {self.horizon}")
        if self.kinematics not in KINEMATICS:
            errors.append(f"kinematics must be one of {KINEMATICS}, got {self.kinematics!r}")
        if self.cap < 1:
            errors.append(f"cap must be >= 1, got {self.cap}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.horizon / self.dt + 1e-9))


@dataclass
class BoxState:
    """Box-engine state between steps (positions in centred coordinates)."""

    step: int
    mass: int
    positions: np.ndarray       # (n, 2), all particles ever sampled
    active: np.ndarray          # bool mask over positions

    @property
    def released_count(self) -> int:
        return int((~self.active).sum())

    @property
    def radius(self) -> float:
        return radius_from_mass(self.mass)


def initial_box_state(cfg: BoxConfig) -> tuple[BoxState, TrajectoryEvent]:
    """Sample the field, run the time-0 cascade, return state plus event."""
    positions = sample_ppp_box(cfg.lam, cfg.box_side, cfg.seed.substream("initial-field"))
    ids = np.arange(positions.shape[0], dtype=np.int64)
    result = cascade(ids, positions, initial_mass=1, exclusion_radius=0.0, cap=cfg.cap)
    active = np.ones(positions.shape[0], dtype=bool)
    active[result.absorbed_ids] = False
    event = TrajectoryEvent(
        time=0.0,
        kind="initial-cascade",
        mass_after=result.final_mass,
        radius_after=radius_from_mass(result.final_mass),
        rounds=tuple(result.rounds),
        cap_flag=result.exploded,
        absorbed_ids=result.absorbed_ids,
    )
    return BoxState(step=0, mass=result.final_mass, positions=positions, active=active), event


def box_step(state: BoxState, cfg: BoxConfig, displacements: np.ndarray | None = None):
    """Advance one dt step: move every active particle, then sweep.

    Pure in (state, cfg): the step's randomness comes from a substream
    keyed by the step index.  ``displacements`` overrides the moves (one
    row per particle) for fixture tests.  Returns (new_state, event);
    event is None when the sweep absorbed nothing.

    This reference implementation is quadratic-ish and meant for small
    configurations; ``run_box`` uses the compiled equivalent.
    """
    positions = state.positions.copy()
    active = state.active.copy()
    idx = np.flatnonzero(active)
    if displacements is None:
        gen = cfg.seed.substream("py-step", state.step).generator()
        if cfg.kinematics == "brownian":
            disp = math.sqrt(cfg.dt) * gen.standard_normal((idx.size, 2))
        else:
            counts = gen.poisson(cfg.dt, size=idx.size)
            disp = np.sqrt(counts)[:, None] * gen.standard_normal((idx.size, 2))
    else:
        disp = np.asarray(displacements, dtype=float)[idx]
    positions[idx] = wrap_periodic(positions[idx] + disp, cfg.box_side)

    result = cascade(idx, positions[idx], initial_mass=state.mass,
                     exclusion_radius=0.0, cap=cfg.cap)
    new_state = BoxState(
        step=state.step + 1, mass=result.final_mass, positions=positions, active=active
    )
    if result.added_mass == 0 and not result.exploded:
        return new_state, None
    active[result.absorbed_ids] = False
    event = TrajectoryEvent(
        time=(state.step + 1) * cfg.dt,
        kind="cap-hit" if result.exploded else "arrival",
        mass_after=result.final_mass,
        radius_after=radius_from_mass(result.final_mass),
        rounds=tuple(result.rounds),
        cap_flag=result.exploded,
        absorbed_ids=result.absorbed_ids,
    )
    return new_state, event


def _advance_box(state: BoxState, cfg: BoxConfig):
    """Step loop of run_box, vectorized over particles.

    Random-walk moves realize the per-particle Poisson(dt) jump counts by
    thinning: Poisson(n_active*dt) jumps in total, each assigned to a
    uniformly chosen active particle (rejection over the index range),
    displacements accumulated before the end-of-step entry check, exactly
    as the protocol observes only step-end positions.  Returns
    (events, stop_code) with stop codes 0 horizon, 1 cap, 3 boundary.
    """
    gen = cfg.seed.substream("engine").generator()
    pos = state.positions
    absorbed = ~state.active
    n = pos.shape[0]
    d2 = (pos**2).sum(axis=1)
    d2[absorbed] = np.inf
    n_act = int(n - absorbed.sum())
    mass = state.mass
    cap = cfg.cap
    dt = cfg.dt
    boundary_r2 = (cfg.box_side / 2.0) ** 2
    brownian = cfg.kinematics == "brownian"
    sd = math.sqrt(dt)
    events = []
    stop_code = 0

    # candidate cache: indices with d2 <= near_r^2, so sweep rounds scan a
    # thin shell instead of the whole field; refreshed as the pool grows
    near_r = radius_from_mass(mass) + 2.0
    near_idx = np.flatnonzero(d2 <= near_r * near_r)

    for step in range(1, cfg.n_steps + 1):
        if n_act == 0:
            break
        r2 = mass / math.pi
        if brownian:
            movers = np.flatnonzero(~absorbed)
            pos[movers] = wrap_periodic(
                pos[movers] + sd * gen.standard_normal((movers.size, 2)), cfg.box_side
            )
            d2[movers] = (pos[movers] ** 2).sum(axis=1)
            near_new = movers[d2[movers] <= near_r * near_r]
            if near_new.size:
                near_idx = np.concatenate((near_idx, near_new))
            entrants = movers[d2[movers] <= r2]
        else:
            k = int(gen.poisson(n_act * dt))
            if k == 0:
                continue
            idx = gen.integers(0, n, size=k)
            bad = absorbed[idx]
            while bad.any():  # uniform over active particles by rejection
                idx[bad] = gen.integers(0, n, size=int(bad.sum()))
                bad = absorbed[idx]
            disp = gen.standard_normal((k, 2))
            touched, inv = np.unique(idx, return_inverse=True)
            moved = pos[touched]
            moved[:, 0] += np.bincount(inv, weights=disp[:, 0], minlength=touched.size)
            moved[:, 1] += np.bincount(inv, weights=disp[:, 1], minlength=touched.size)
            pos[touched] = wrap_periodic(moved, cfg.box_side)
            d2[touched] = (pos[touched] ** 2).sum(axis=1)
            near_new = touched[d2[touched] <= near_r * near_r]
            if near_new.size:
                near_idx = np.concatenate((near_idx, near_new))
            entrants = touched[d2[touched] <= r2]
        if entrants.size == 0:
            continue

        # end-of-step engulf sweep: absorb, recompute radius, re-sweep
        rounds = []
        absorbed_here = []
        hit = entrants
        while True:
            rounds.append(hit.size)
            if hit.size:
                absorbed_here.append(hit)
                absorbed[hit] = True
                d2[hit] = np.inf
                n_act -= int(hit.size)
                mass += int(hit.size)
            else:
                break
            if mass > cap:
                stop_code = 1
                break
            radius = radius_from_mass(mass)
            if radius + 1.0 > near_r:
                near_r = radius + 2.0
                near_idx = np.flatnonzero(d2 <= near_r * near_r)
            cand = near_idx[d2[near_idx] <= mass / math.pi]
            hit = np.unique(cand)
        if stop_code == 0 and mass / math.pi >= boundary_r2:
            stop_code = 3

        last = stop_code != 0
        kind = {1: "cap-hit", 3: "boundary-hit"}.get(stop_code, "arrival")
        events.append(
            TrajectoryEvent(
                time=step * dt,
                kind=kind if last else "arrival",
                mass_after=mass,
                radius_after=radius_from_mass(mass),
                rounds=tuple(rounds),
                cap_flag=stop_code == 1,
                absorbed_ids=np.concatenate(absorbed_here)
                if absorbed_here
                else np.empty(0, dtype=np.int64),
            )
        )
        if last:
            break
    state.mass = mass
    state.active[:] = ~absorbed
    state.step = cfg.n_steps if stop_code == 0 else int(round(events[-1].time / dt))
    return events, stop_code


def run_box(cfg: BoxConfig) -> Trajectory:
    """Simulate one box trajectory; deterministic given cfg."""
    state, initial_event = initial_box_state(cfg)
    events = [initial_event]
    exploded_at = 0.0 if initial_event.cap_flag else None
    stop_reason = "initial-cap" if initial_event.cap_flag else None

    boundary_r2 = (cfg.box_side / 2.0) ** 2
    if state.mass / math.pi >= boundary_r2 and stop_reason is None:
        stop_reason = "boundary"

    if stop_reason is None:
        step_events, stop_code = _advance_box(state, cfg)
        events.extend(step_events)
        if stop_code == 1:
            exploded_at = events[-1].time
            stop_reason = "cap"
        elif stop_code == 3:
            stop_reason = "boundary"
        else:
            stop_reason = "horizon"

    metadata = {
        "engine": "box",
        "lambda": cfg.lam,
        "box_side": cfg.box_side,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "kinematics": cfg.kinematics,
        "cap": cfg.cap,
        "master_seed": cfg.seed.master_seed,
        "stream_index": cfg.seed.stream_index,
        "stream_tags": list(cfg.seed.tags),
        "initial_count": int(state.positions.shape[0]),
        "stop_reason": stop_reason,
    }
    return Trajectory(events=events, exploded_at=exploded_at, metadata=metadata)
