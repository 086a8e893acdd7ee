"""Point-process sampling and particle kinematics in the plane.

Positions are float64 arrays of shape (n, 2).  All sampling takes an
explicit :class:`~poolsim.streams.RngStream`, so every function here is a
pure function of its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .streams import RngStream

__all__ = [
    "Annulus",
    "sample_ppp_annulus",
    "sample_ppp_box",
    "gaussian_jump",
    "displacement_after_jumps",
    "jump_count",
    "wrap_periodic",
]


@dataclass(frozen=True)
class Annulus:
    """Origin-centred annulus 0 <= r_inner <= |x| <= r_outer."""

    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (math.isfinite(self.r_inner) and math.isfinite(self.r_outer)):
            raise ValueError("annulus radii must be finite")
        if self.r_inner < 0 or self.r_inner > self.r_outer:
            raise ValueError(
                f"need 0 <= r_inner <= r_outer, got ({self.r_inner}, {self.r_outer})"
            )

    @property
    def area(self) -> float:
        return math.pi * (self.r_outer**2 - self.r_inner**2)


def _uniform_in_annulus(n: int, r_inner: float, r_outer: float, gen) -> np.ndarray:
    # Inverse CDF on the radial coordinate: rejection-free and exact.
    u = gen.random(n)
    r = np.sqrt(r_inner**2 + u * (r_outer**2 - r_inner**2))
    theta = gen.random(n) * (2.0 * math.pi)
    return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


def sample_ppp_annulus(intensity: float, ann: Annulus, rng: RngStream) -> np.ndarray:
    """Homogeneous Poisson point process restricted to an annulus.

    Returns an (n, 2) array; n is Poisson(intensity * area), points are
    i.i.d. uniform on the annulus given n.
    """
    if not math.isfinite(intensity) or intensity < 0:
        raise ValueError(f"intensity must be finite and >= 0, got {intensity}")
    gen = rng.generator()
    n = int(gen.poisson(intensity * ann.area))
    return _uniform_in_annulus(n, ann.r_inner, ann.r_outer, gen)


def sample_ppp_box(intensity: float, box_side: float, rng: RngStream) -> np.ndarray:
    """PPP on the centred square [-box_side/2, box_side/2)^2."""
    if not math.isfinite(intensity) or intensity < 0:
        raise ValueError(f"intensity must be finite and >= 0, got {intensity}")
    if box_side <= 0:
        raise ValueError("box_side must be > 0")
    gen = rng.generator()
    n = int(gen.poisson(intensity * box_side**2))
    return (gen.random((n, 2)) - 0.5) * box_side


def gaussian_jump(rng: RngStream) -> np.ndarray:
    """One standard jump displacement: independent N(0,1) components."""
    return rng.generator().standard_normal(2)


def displacement_after_jumps(j: int, rng: RngStream) -> np.ndarray:
    """Net displacement after j jumps, collapsed to a single N(0, j*I) draw.

    Valid only when intermediate positions are unobserved.
    """
    if j < 0:
        raise ValueError(f"jump count must be >= 0, got {j}")
    if j == 0:
        return np.zeros(2)
    return math.sqrt(j) * rng.generator().standard_normal(2)


def jump_count(dt: float, rng: RngStream) -> int:
    """Number of rate-1 jumps in a window of length dt: Poisson(dt)."""
    if not math.isfinite(dt) or dt < 0:
        raise ValueError(f"dt must be finite and >= 0, got {dt}")
    return int(rng.generator().poisson(dt))


def wrap_periodic(p, box_side: float):
    """Wrap coordinates into the canonical box [-box_side/2, box_side/2).

    Translation by integer multiples of box_side; exactly idempotent
    (a wrapped point re-wraps to itself bit-for-bit).
    """
    if box_side <= 0:
        raise ValueError("box_side must be > 0")
    p = np.asarray(p, dtype=float)
    half = box_side / 2.0
    w = p - box_side * np.round(p / box_side)
    # np.round ties-to-even can leave a coordinate exactly on either edge.
    w = np.where(w >= half, w - box_side, w)
    w = np.where(w < -half, w + box_side, w)
    return w
