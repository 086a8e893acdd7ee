"""Galton-Watson machinery for the explosion and criticality analysis.

Poisson-offspring extinction probabilities, the Borel law of critical
total progeny, progeny samplers, and the dominating step process that
pairs critical cascade sizes with exponential waiting times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .engulf import radius_from_mass
from .streams import RngStream
from .trajectory import Trajectory, TrajectoryEvent

__all__ = [
    "GwParams",
    "DominatingConfig",
    "extinction_prob",
    "survival_lower_bound",
    "borel_pmf",
    "sample_total_progeny",
    "sample_total_progeny_batch",
    "build_dominating_trajectory",
    "dominating_trajectory",
]


@dataclass(frozen=True)
class GwParams:
    """Branching law: Poisson(offspring_mean) children, Poisson(root_mean)
    first generation."""

    offspring_mean: float
    root_mean: float

    def __post_init__(self):
        if not (math.isfinite(self.offspring_mean) and self.offspring_mean > 0):
            raise ValueError(f"offspring_mean must be > 0, got {self.offspring_mean}")
        if not (math.isfinite(self.root_mean) and self.root_mean > 0):
            raise ValueError(f"root_mean must be > 0, got {self.root_mean}")


@dataclass(frozen=True)
class DominatingConfig:
    hazard_constant: float
    step_count: int
    seed: RngStream = field(default_factory=lambda: RngStream(0))
    progeny_cap: int = 10_000_000

    def __post_init__(self):
        if not (math.isfinite(self.hazard_constant) and self.hazard_constant > 0):
            raise ValueError(f"hazard_constant must be > 0, got {self.hazard_constant}")
        if self.step_count < 0:
            raise ValueError(f"step_count must be >= 0, got {self.step_count}")


def extinction_prob(lam: float) -> float:
    """Extinction probability of the Poisson(lam) Galton-Watson process:
    the smallest fixed point of q = exp(lam*(q-1)).

    Exactly 1 for lam <= 1; otherwise solved by fixed-point iteration
    from 0 with a Newton polish, to absolute tolerance 1e-12.
    """
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError(f"lam must be > 0, got {lam}")
    if lam <= 1.0:
        return 1.0
    q = 0.0
    for _ in range(200):
        q_next = math.exp(lam * (q - 1.0))
        if abs(q_next - q) < 1e-14:
            q = q_next
            break
        q = q_next
    for _ in range(50):
        f = q - math.exp(lam * (q - 1.0))
        fp = 1.0 - lam * math.exp(lam * (q - 1.0))
        step = f / fp
        q -= step
        if abs(step) < 1e-15:
            break
    if abs(q - math.exp(lam * (q - 1.0))) > 1e-12:
        raise RuntimeError(f"extinction fixed point did not converge at lam={lam}")
    return q


def survival_lower_bound(lam: float) -> float:
    """(1 - 1/e) times the survival probability; defined for lam > 1."""
    if not (math.isfinite(lam) and lam > 1.0):
        raise ValueError(f"survival_lower_bound requires lam > 1, got {lam}")
    return (1.0 - math.exp(-1.0)) * (1.0 - extinction_prob(lam))


def borel_pmf(n: int) -> float:
    """P(total progeny of a critical Poisson GW tree, root included, = n):
    exp(-n) n^(n-1) / n!, computed in log space."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.exp(-n + (n - 1) * math.log(n) - math.lgamma(n + 1))


def sample_total_progeny(params: GwParams, cap: int, rng: RngStream):
    """Total progeny (sum of all generation sizes, root generation from
    Poisson(root_mean)); capped=True when the running total exceeded cap
    before extinction."""
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    gen = rng.generator()
    z = int(gen.poisson(params.root_mean))
    total = z
    while z > 0:
        if total > cap:
            return total, True
        z = int(gen.poisson(z * params.offspring_mean))
        total += z
    return total, False


def sample_total_progeny_batch(params: GwParams, cap: int, n: int, rng: RngStream):
    """Vectorized version of sample_total_progeny: n independent samples."""
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    gen = rng.generator()
    z = gen.poisson(params.root_mean, size=n).astype(np.int64)
    total = z.copy()
    capped = np.zeros(n, dtype=bool)
    alive = np.flatnonzero(z > 0)
    while alive.size:
        over = total[alive] > cap
        if over.any():
            capped[alive[over]] = True
            alive = alive[~over]
            if alive.size == 0:
                break
        z_new = gen.poisson(z[alive] * params.offspring_mean).astype(np.int64)
        z[alive] = z_new
        total[alive] += z_new
        alive = alive[z_new > 0]
    return total, capped


def build_dominating_trajectory(
    cascade_sizes, waiting_times, hazard_constant: float
) -> Trajectory:
    """Assemble the dominating step process from explicit inputs.

    cascade_sizes[i] >= 1 are the per-step mass increments X_i (the i-th
    critical cascade, trigger included, so pi * R_n^2 stays an integer
    mass count); waiting_times[k] > 0 are the raw exponential waits T_k,
    rescaled by 1/(hazard_constant * R_k).  Event n sits at
    tau_n = sum_{k<n} T_k / (C R_k) with radius R_n.
    """
    x = np.asarray(cascade_sizes, dtype=np.int64)
    t = np.asarray(waiting_times, dtype=float)
    if x.size != t.size + 1:
        raise ValueError("need one more cascade size than waiting times")
    if x.size == 0:
        raise ValueError("need at least the initial cascade size")
    if (x < 1).any():
        raise ValueError("cascade sizes must be >= 1")
    if t.size and (t <= 0).any():
        raise ValueError("waiting times must be > 0")
    masses = np.cumsum(x)
    radii = np.sqrt(masses / math.pi)
    waits = t / (hazard_constant * radii[:-1])
    taus = np.concatenate(([0.0], np.cumsum(waits)))
    events = [
        TrajectoryEvent(
            time=float(taus[n]),
            kind="initial-cascade" if n == 0 else "arrival",
            mass_after=int(masses[n]),
            radius_after=radius_from_mass(int(masses[n])),
            rounds=(int(x[n]),),
        )
        for n in range(x.size)
    ]
    metadata = {
        "engine": "dominating",
        "hazard_constant": hazard_constant,
        "expected_tau": [0.0] + list(np.cumsum(1.0 / (hazard_constant * radii[:-1]))),
        "sum_inv_sqrt_mass": float(np.sum(1.0 / np.sqrt(masses))),
    }
    return Trajectory(events=events, exploded_at=None, metadata=metadata)


def dominating_trajectory(cfg: DominatingConfig) -> Trajectory:
    """Sample the dominating process: X_n i.i.d. critical total progeny
    (trigger included, so X_n = 1 + Poisson(1)-root progeny) and
    T_n i.i.d. Exp(1) waits scaled by 1/(C R_n)."""
    params = GwParams(offspring_mean=1.0, root_mean=1.0)
    progeny, capped = sample_total_progeny_batch(
        params, cfg.progeny_cap, cfg.step_count + 1, cfg.seed.substream("progeny")
    )
    sizes = progeny + 1  # include the triggering particle
    waits = cfg.seed.substream("waits").generator().exponential(1.0, size=cfg.step_count)
    traj = build_dominating_trajectory(sizes, waits, cfg.hazard_constant)
    traj.metadata["capped_samples"] = int(capped.sum())
    traj.metadata["progeny_cap"] = cfg.progeny_cap
    return traj
