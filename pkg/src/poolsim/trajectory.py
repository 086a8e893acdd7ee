"""Cadlag pool trajectories and their on-disk formats.

A trajectory is a time-sorted list of events; between events the pool is
constant, so evaluation at an arbitrary time returns the most recent
event's state (right-continuous convention).

Two formats are emitted per run: a CSV with header
``time,kind,mass,radius,rounds,flag`` (floats in shortest round-trip
decimal, rounds joined by ``|``), and a JSONL log with one event per
line carrying the full cascade record.
"""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "EVENT_KINDS",
    "TrajectoryEvent",
    "Trajectory",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_trajectory_jsonl",
]

EVENT_KINDS = ("initial-cascade", "arrival", "cap-hit", "boundary-hit")


def _fmt(x: float) -> str:
    # repr of a Python float is the shortest decimal that round-trips.
    return repr(float(x))


@dataclass
class TrajectoryEvent:
    time: float
    kind: str
    mass_after: int
    radius_after: float
    rounds: tuple[int, ...] = ()
    cap_flag: bool = False
    absorbed_ids: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        self.rounds = tuple(int(r) for r in self.rounds)

    def to_json_dict(self) -> dict:
        record = {
            "time": float(self.time),
            "kind": self.kind,
            "mass": int(self.mass_after),
            "radius": float(self.radius_after),
            "rounds": list(self.rounds),
            "flag": int(self.cap_flag),
        }
        if self.absorbed_ids is not None:
            record["absorbed_ids"] = [int(i) for i in self.absorbed_ids]
        return record


@dataclass
class Trajectory:
    events: list[TrajectoryEvent]
    exploded_at: float | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = [e.time for e in self.events]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("event times must be strictly increasing")
        masses = [e.mass_after for e in self.events]
        if any(m2 < m1 for m1, m2 in zip(masses, masses[1:])):
            raise ValueError("mass must be nondecreasing")
        self._times = times

    def __len__(self) -> int:
        return len(self.events)

    def _index_at(self, t: float) -> int:
        i = bisect.bisect_right(self._times, t) - 1
        if i < 0:
            raise ValueError(f"trajectory is undefined before its first event ({self._times[0]})")
        return i

    def mass_at(self, t: float) -> int:
        return self.events[self._index_at(t)].mass_after

    def radius_at(self, t: float) -> float:
        return self.events[self._index_at(t)].radius_after

    @property
    def final_mass(self) -> int:
        return self.events[-1].mass_after

    @property
    def final_radius(self) -> float:
        return self.events[-1].radius_after

    @property
    def exploded(self) -> bool:
        return self.exploded_at is not None


def write_trajectory_csv(traj: Trajectory, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("time,kind,mass,radius,rounds,flag\n")
            for ev in traj.events:
                rounds = "|".join(str(r) for r in ev.rounds)
                fh.write(
                    f"{_fmt(ev.time)},{ev.kind},{ev.mass_after},"
                    f"{_fmt(ev.radius_after)},{rounds},{int(ev.cap_flag)}\n"
                )
    except OSError as exc:
        raise OSError(f"failed writing trajectory to {path}: {exc}") from exc


def read_trajectory_csv(path) -> Trajectory:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "time,kind,mass,radius,rounds,flag":
            raise ValueError(f"unexpected trajectory header in {path}: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            time_s, kind, mass_s, radius_s, rounds_s, flag_s = line.split(",")
            rounds = tuple(int(r) for r in rounds_s.split("|")) if rounds_s else ()
            events.append(
                TrajectoryEvent(
                    time=float(time_s),
                    kind=kind,
                    mass_after=int(mass_s),
                    radius_after=float(radius_s),
                    rounds=rounds,
                    cap_flag=bool(int(flag_s)),
                )
            )
    exploded_at = next((e.time for e in events if e.cap_flag), None)
    return Trajectory(events=events, exploded_at=exploded_at)


def write_trajectory_jsonl(traj: Trajectory, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for ev in traj.events:
                fh.write(json.dumps(ev.to_json_dict(), sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing event log to {path}: {exc}") from exc
