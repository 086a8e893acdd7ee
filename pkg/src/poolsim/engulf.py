"""The instantaneous engulfing cascade.

Given a pool of integer mass m (radius sqrt(m/pi)) and the positions of
the active particles, each round absorbs every particle inside the ball
whose area equals the current mass, the absorbed mass enlarges the ball,
and the recursion repeats until a round absorbs nothing.  A configured
mass cap stands in for the (undecidable) event that the recursion never
terminates.

Mass is the integer source of truth everywhere; radii are derived on
demand and never accumulated in floating point.  Balls are closed:
a particle exactly on a round's boundary circle is absorbed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["PoolState", "CascadeResult", "radius_from_mass", "cascade"]


def radius_from_mass(mass: int) -> float:
    """Radius of the pool of integer mass: sqrt(mass / pi)."""
    if mass < 1:
        raise ValueError(f"mass must be >= 1, got {mass}")
    return math.sqrt(mass / math.pi)


@dataclass(frozen=True)
class PoolState:
    """Pool of absorbed unit masses (including the unit seed)."""

    mass: int

    def __post_init__(self):
        if self.mass < 1:
            raise ValueError(f"mass must be >= 1, got {self.mass}")

    @property
    def radius(self) -> float:
        return radius_from_mass(self.mass)


@dataclass
class CascadeResult:
    """Outcome of one cascade.

    rounds[j] is the count absorbed in round j; unless the cap fired, the
    last entry is 0.  radii[j] is the pool radius after round j.
    absorbed_ids lists released particles in order of radial distance.
    """

    rounds: list[int]
    radii: list[float]
    final_mass: int
    exploded: bool
    absorbed_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def added_mass(self) -> int:
        return int(sum(self.rounds))


def cascade(
    ids,
    positions,
    initial_mass: int,
    exclusion_radius: float = 0.0,
    cap: int = 10_000_000,
) -> CascadeResult:
    """Run the full cascade over a static active-particle configuration.

    Round 1 counts particles with |p| in (exclusion_radius, r0] where
    r0 = sqrt(initial_mass/pi); every later round counts the annulus
    between the previous two radii.  Terminates with exploded=False when a
    round absorbs nothing, or with exploded=True once mass exceeds cap.
    The caller must deactivate the reported absorbed_ids.

    positions: (n, 2) float array; ids: n-vector of particle identifiers;
    every active particle must lie strictly outside exclusion_radius.
    """
    if initial_mass < 1:
        raise ValueError(f"initial_mass must be >= 1, got {initial_mass}")
    if cap < initial_mass:
        raise ValueError(f"cap ({cap}) must be >= initial_mass ({initial_mass})")
    if exclusion_radius < 0 or not math.isfinite(exclusion_radius):
        raise ValueError(f"exclusion_radius must be finite and >= 0, got {exclusion_radius}")

    ids = np.asarray(ids, dtype=np.int64)
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        positions = positions.reshape(0, 2)
    if positions.ndim != 2 or positions.shape[1] != 2 or positions.shape[0] != ids.shape[0]:
        raise ValueError("positions must be (n, 2) with one id per row")
    if positions.size and not np.all(np.isfinite(positions)):
        raise ValueError("positions must be finite")

    d2 = positions[:, 0] ** 2 + positions[:, 1] ** 2
    excl2 = exclusion_radius * exclusion_radius
    if d2.size and d2.min() <= excl2:
        offender = ids[int(np.argmin(d2))]
        raise ValueError(
            f"active particle {offender} is at or inside the exclusion radius"
        )

    # Sort once, then advance a cursor: each cascade is O(n log n).
    order = np.argsort(d2, kind="stable")
    d2_sorted = d2[order]

    mass = int(initial_mass)
    rounds: list[int] = []
    radii: list[float] = []
    lo = 0
    exploded = False
    while True:
        # Closed ball: |p|^2 <= mass/pi is absorbed (side="right").
        hi = int(np.searchsorted(d2_sorted, mass / math.pi, side="right"))
        xi = hi - lo
        rounds.append(xi)
        mass += xi
        radii.append(radius_from_mass(mass))
        lo = hi
        if xi == 0:
            break
        if mass > cap:
            exploded = True
            break

    return CascadeResult(
        rounds=rounds,
        radii=radii,
        final_mass=mass,
        exploded=exploded,
        absorbed_ids=ids[order[:lo]].copy(),
    )
