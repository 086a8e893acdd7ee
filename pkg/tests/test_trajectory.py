import math

import numpy as np
import pytest

from poolsim.engulf import radius_from_mass
from poolsim.trajectory import (
    Trajectory,
    TrajectoryEvent,
    read_trajectory_csv,
    write_trajectory_csv,
    write_trajectory_jsonl,
)


def _event(t, mass, kind="arrival", rounds=(0,), flag=False):
    return TrajectoryEvent(
        time=t, kind=kind, mass_after=mass,
        radius_after=radius_from_mass(mass), rounds=rounds, cap_flag=flag,
    )


def _sample_traj():
    events = [
        _event(0.0, 3, kind="initial-cascade", rounds=(2, 0)),
        _event(0.7071067811865476, 5, rounds=(1, 0)),
        _event(2.25, 6, rounds=(0,)),
        _event(10.125, 9, rounds=(1, 1, 0)),
    ]
    return Trajectory(events=events, exploded_at=None, metadata={"horizon": 12.0})


class TestTrajectory:
    def test_cadlag_evaluation(self):
        traj = _sample_traj()
        assert traj.mass_at(0.0) == 3
        assert traj.mass_at(0.5) == 3
        assert traj.mass_at(0.7071067811865476) == 5
        assert traj.mass_at(5.0) == 6
        assert traj.mass_at(100.0) == 9
        assert traj.radius_at(3.0) == radius_from_mass(6)

    def test_before_first_event_rejected(self):
        with pytest.raises(ValueError):
            _sample_traj().radius_at(-0.1)

    def test_time_ordering_enforced(self):
        with pytest.raises(ValueError):
            Trajectory(events=[_event(1.0, 2), _event(1.0, 3)])

    def test_mass_monotonicity_enforced(self):
        with pytest.raises(ValueError):
            Trajectory(events=[_event(0.0, 5), _event(1.0, 4)])

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            _event(0.0, 1, kind="mystery")


class TestCsvRoundTrip:
    def test_round_trip_equality(self, tmp_path):
        traj = _sample_traj()
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path)
        back = read_trajectory_csv(path)
        assert back == Trajectory(events=traj.events, exploded_at=None)

    def test_header_and_integer_mass_column(self, tmp_path):
        traj = _sample_traj()
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "time,kind,mass,radius,rounds,flag"
        for line in lines[1:]:
            mass_field = line.split(",")[2]
            assert mass_field == str(int(mass_field))

    def test_full_double_precision_times(self, tmp_path):
        traj = _sample_traj()
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path)
        back = read_trajectory_csv(path)
        for a, b in zip(traj.events, back.events):
            assert a.time == b.time
            assert a.radius_after == b.radius_after

    def test_single_event_trajectory(self, tmp_path):
        traj = Trajectory(events=[_event(0.0, 1, kind="initial-cascade")])
        path = tmp_path / "one.csv"
        write_trajectory_csv(traj, path)
        assert len(read_trajectory_csv(path).events) == 1

    def test_write_failure_carries_path(self, tmp_path):
        with pytest.raises(OSError, match="no-such-dir"):
            write_trajectory_csv(_sample_traj(), tmp_path / "no-such-dir" / "t.csv")


def test_jsonl_event_log(tmp_path):
    import json

    traj = _sample_traj()
    traj.events[0].absorbed_ids = np.array([4, 9], dtype=np.int64)
    path = tmp_path / "traj.jsonl"
    write_trajectory_jsonl(traj, path)
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(records) == len(traj.events)
    assert records[0]["kind"] == "initial-cascade"
    assert records[0]["absorbed_ids"] == [4, 9]
    assert records[1]["rounds"] == [1, 0]
    assert all(isinstance(r["mass"], int) for r in records)
