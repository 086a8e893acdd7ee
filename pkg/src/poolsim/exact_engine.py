"""Exact event-driven simulation on a truncated initial field.

Particles carry independent rate-1 exponential jump clocks and move only
at jump instants, so pool entry can only happen at a jump: between events
the configuration is frozen and the dynamics are exact.  The price of
truncating the initial field to a disk is quantified by a certified
probability bound embedded in every trajectory's metadata.

Explosion is not decidable in finite computation; a run is flagged as
exploded when a cascade pushes the total mass past the configured cap.
The cap must be reachable inside the truncated field for the flag to be
meaningful; a run whose pool reaches the truncation radius at sub-cap
mass is marked field_swept in its metadata (its certificate is void from
that point on) but is not an explosion.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy import stats as sps

from . import _kernels
from .engulf import cascade, radius_from_mass
from .field import Annulus, sample_ppp_annulus
from .streams import RngStream
from .trajectory import Trajectory, TrajectoryEvent

__all__ = [
    "ExactConfig",
    "run_exact",
    "truncation_error_bound",
    "truncation_bound",
    "choose_sim_radius",
    "JumpScheduler",
]

_MIN_RADIUS = 1.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class ExactConfig:
    lam: float
    horizon: float
    sim_radius: float
    cap: int = 10_000_000
    seed: RngStream = field(default_factory=lambda: RngStream(0))
    target_radius_hint: float = _MIN_RADIUS

    def __post_init__(self):
        errors = []
        if not (math.isfinite(self.lam) and self.lam > 0):
            errors.append(f"lam must be > 0, got {self.lam}")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            errors.append(f"horizon must be >= 0, got {self.horizon}")
        if self.cap < 1:
            errors.append(f"cap must be >= 1, got {self.cap}")
        if not (self.target_radius_hint >= _MIN_RADIUS):
            errors.append(
                f"target_radius_hint must be >= 1/sqrt(pi), got {self.target_radius_hint}"
            )
        if not (self.sim_radius > self.target_radius_hint):
            errors.append(
                f"sim_radius ({self.sim_radius}) must exceed target_radius_hint "
                f"({self.target_radius_hint})"
            )
        if errors:
            raise ValueError("; ".join(errors))


def truncation_bound(lam: float, horizon: float, sim_radius: float, target_radius: float) -> float:
    """Upper bound on P(any particle starting outside B(sim_radius) enters
    B(target_radius) by the horizon).

    A particle at distance d is allowed K(d) = K + (d - target)/2 jumps,
    K = ceil(2T + 10 sqrt(T) + 10); it fails the bound either by jumping
    more than K(d) times (Poisson tail) or by one of its first K(d)
    positions falling within target (Gaussian radial tail, union bound).
    The per-particle bound is integrated against the field intensity.
    """
    if sim_radius <= target_radius:
        raise ValueError("sim_radius must exceed target_radius")
    T = float(horizon)
    k_base = math.ceil(2.0 * T + 10.0 * math.sqrt(T) + 10.0)

    def integrand(d):
        delta = d - target_radius
        k_d = k_base + 0.5 * delta
        jump_tail = sps.poisson.sf(k_d, T) if T > 0 else 0.0
        gauss_tail = k_d * math.exp(-(delta * delta) / (2.0 * k_d))
        return lam * 2.0 * math.pi * d * min(1.0, jump_tail + gauss_tail)

    value, _ = integrate.quad(integrand, sim_radius, np.inf, limit=200)
    return min(1.0, value)


def truncation_error_bound(cfg: ExactConfig) -> float:
    return truncation_bound(cfg.lam, cfg.horizon, cfg.sim_radius, cfg.target_radius_hint)


def choose_sim_radius(
    lam: float, horizon: float, target_radius: float, tol: float = 1e-3
) -> float:
    """Smallest (to ~1%) truncation radius whose certified bound is <= tol."""
    lo = target_radius + 1.0
    hi = lo
    while truncation_bound(lam, horizon, hi, target_radius) > tol:
        hi = target_radius + 2.0 * (hi - target_radius)
        if hi - target_radius > 1e7:
            raise RuntimeError("no feasible truncation radius found")
    while hi - lo > 0.01 * (hi - target_radius):
        mid = 0.5 * (lo + hi)
        if truncation_bound(lam, horizon, mid, target_radius) <= tol:
            hi = mid
        else:
            lo = mid
    return hi


class JumpScheduler:
    """Priority queue of per-particle next-jump times.

    Exact time ties are broken toward the smaller particle id.  Popped
    particles must be rescheduled (after their jump) or dropped (after
    absorption) by the caller; stale entries of deactivated particles are
    discarded lazily.
    """

    def __init__(self):
        self._heap: list[tuple[float, int]] = []
        self._pending: dict[int, float] = {}

    def __len__(self) -> int:
        return len(self._pending)

    def schedule(self, pid: int, time: float) -> None:
        self._pending[pid] = time
        heapq.heappush(self._heap, (time, pid))

    def deactivate(self, pid: int) -> None:
        self._pending.pop(pid, None)

    def next_event(self):
        """Pop and return the earliest (time, pid), or None when no active
        particle remains (end-of-simulation signal)."""
        while self._heap:
            time, pid = heapq.heappop(self._heap)
            if self._pending.get(pid) == time:
                del self._pending[pid]
                return time, pid
        return None


def run_exact(cfg: ExactConfig, return_final_state: bool = False):
    """Simulate one trajectory; deterministic given cfg.

    With return_final_state, also returns (positions, ids) of the active
    particles at the end of the run (diagnostics; not serialized).
    """
    bound = truncation_error_bound(cfg)
    rng = cfg.seed
    positions = sample_ppp_annulus(cfg.lam, Annulus(0.0, cfg.sim_radius), rng.substream("initial-field"))
    n = positions.shape[0]
    ids = np.arange(n, dtype=np.int64)

    initial = cascade(ids, positions, initial_mass=1, exclusion_radius=0.0, cap=cfg.cap)
    mass = initial.final_mass
    exploded = initial.exploded

    events = [
        TrajectoryEvent(
            time=0.0,
            kind="initial-cascade",
            mass_after=mass,
            radius_after=radius_from_mass(mass),
            rounds=tuple(initial.rounds),
            cap_flag=exploded,
            absorbed_ids=initial.absorbed_ids,
        )
    ]
    exploded_at = 0.0 if exploded else None

    absorbed = np.zeros(n, dtype=bool)
    absorbed[initial.absorbed_ids] = True
    active_ids = ids[~absorbed]
    final_state = (positions[~absorbed].copy(), active_ids)
    if not exploded and n > 0 and cfg.horizon > 0:
        xs = np.ascontiguousarray(positions[~absorbed, 0])
        ys = np.ascontiguousarray(positions[~absorbed, 1])
        (
            ev_time,
            ev_mass,
            rounds_flat,
            rounds_off,
            abs_flat,
            abs_off,
            exploded_code,
            exploded_time,
            _jumps,
            final_pos,
            final_orig,
        ) = _kernels.exact_run(
            xs,
            ys,
            mass,
            float(cfg.horizon),
            int(cfg.cap),
            rng.substream("engine").kernel_seed(),
        )
        n_ev = ev_time.shape[0]
        for k in range(n_ev):
            capped = exploded_code != 0 and k == n_ev - 1
            events.append(
                TrajectoryEvent(
                    time=float(ev_time[k]),
                    kind="cap-hit" if capped else "arrival",
                    mass_after=int(ev_mass[k]),
                    radius_after=radius_from_mass(int(ev_mass[k])),
                    rounds=tuple(rounds_flat[rounds_off[k] : rounds_off[k + 1]]),
                    cap_flag=capped,
                    absorbed_ids=active_ids[abs_flat[abs_off[k] : abs_off[k + 1]]],
                )
            )
        if exploded_code != 0:
            exploded_at = float(exploded_time)
        final_state = (final_pos, active_ids[final_orig])

    metadata = {
        "engine": "exact",
        "lambda": cfg.lam,
        "horizon": cfg.horizon,
        "sim_radius": cfg.sim_radius,
        "cap": cfg.cap,
        "target_radius_hint": cfg.target_radius_hint,
        "master_seed": rng.master_seed,
        "stream_index": rng.stream_index,
        "stream_tags": list(rng.tags),
        "truncation_bound": bound,
        "initial_count": int(n),
        "target_exceeded": bool(events[-1].radius_after > cfg.target_radius_hint),
        "field_swept": bool(events[-1].radius_after >= cfg.sim_radius),
    }
    traj = Trajectory(events=events, exploded_at=exploded_at, metadata=metadata)
    if return_final_state:
        return traj, final_state
    return traj
