from __future__ import annotations

import json
from fractions import Fraction

import pytest

from powernap.core import (
    InstanceError,
    Interval,
    Schedule,
    laminar_decomposition,
    load_instance,
    make_instance,
    dump_instance,
    profile_cost,
    profile_of,
    runs,
    schedule_cost,
    schedule_from_dict,
    schedule_to_dict,
    validate_schedule,
    wakeups_from_profile,
)


def test_load_instance_fields():
    inst = load_instance('{"q": 2, "m": 1, "jobs": [{"r": 0, "d": 3, "p": 2}]}')
    assert (inst.n, inst.horizon, inst.total_processing) == (1, 3, 2)
    assert inst.wake_cost == 2 and inst.machines == 1


def test_load_instance_shifts_to_zero():
    inst = load_instance('{"q": 2, "m": 1, "jobs": [{"r": 5, "d": 8, "p": 2}]}')
    job = inst.jobs[0]
    assert (job.release, job.deadline, inst.horizon) == (0, 3, 3)


@pytest.mark.parametrize(
    "text",
    [
        '{"q": 1, "m": 1, "jobs": [{"r": 0, "d": 1, "p": 2}]}',
        '{"q": 1, "m": 1, "jobs": [{"r": 2, "d": 2, "p": 1}]}',
        '{"q": 0, "m": 1, "jobs": []}',
        '{"q": 1, "m": 0, "jobs": []}',
        '{"q": 1, "m": 1, "jobs": [{"r": 0, "d": 1}]}',
        '{"q": 1, "m": 1, "jobs": [{"r": 0, "d": 1.5, "p": 1}]}',
        '{"q": 1, "m": 1, "jobs": [{"id": 3, "r": 0, "d": 1, "p": 1}]}',
        '{"q": 1, "m": 1, "jobs": "none"}',
        "[]",
        "{",
    ],
)
def test_load_instance_rejects(text):
    with pytest.raises(InstanceError):
        load_instance(text)


def test_instance_round_trip():
    inst = make_instance([(0, 3, 2), (1, 5, 1)], machines=2, wake_cost=3)
    assert load_instance(dump_instance(inst)) == inst


def test_schedule_cost_examples():
    assert schedule_cost([[Interval(0, 2), Interval(5, 6)]], 2).total == 7
    assert schedule_cost([], 5).total == 0
    assert schedule_cost([[Interval(0, 1)], [Interval(0, 1)]], 3).total == 8


def test_schedule_cost_rejects_overlap_and_adjacency():
    with pytest.raises(ValueError):
        schedule_cost([[Interval(0, 2), Interval(1, 3)]], 1)
    with pytest.raises(ValueError):
        schedule_cost([[Interval(0, 2), Interval(2, 3)]], 1)


def test_wakeups_from_profile():
    assert wakeups_from_profile([0, 2, 1, 3, 0]) == 4
    assert wakeups_from_profile([1, 1, 1]) == 1
    assert wakeups_from_profile([0, 0]) == 0


def test_laminar_decomposition_preserves_cost():
    prof = [0, 2, 1, 3, 0, 1]
    machines = laminar_decomposition(prof)
    assert profile_of(machines, len(prof)) == prof
    assert schedule_cost(machines, 3) == profile_cost(prof, 3)


def test_runs():
    assert runs([3, 0, 1, 5, 4]) == [Interval(0, 2), Interval(3, 6)]
    assert runs([]) == []


def test_touches_is_closed():
    iv = Interval(2, 4)
    assert iv.touches(4, 6) and iv.touches(0, 2)
    assert not iv.touches(5, 7)


def test_validate_schedule_examples():
    e1 = make_instance([(0, 3, 2)], wake_cost=2)
    assert validate_schedule(e1, [[Interval(0, 2)]], {(0, 0): 1, (0, 1): 1}) is None
    v = validate_schedule(e1, [[Interval(0, 2)]], {(0, 0): 1})
    assert v is not None and "volume 1 < p 2" in str(v)
    two = make_instance([(0, 1, 1), (0, 1, 1)])
    v = validate_schedule(two, [[Interval(0, 1)]], {(0, 0): 1, (1, 0): 1})
    assert v is not None and "capacity exceeded at t=0" in str(v)


def test_validate_schedule_window_and_fractions():
    inst = make_instance([(1, 3, 1)])
    v = validate_schedule(inst, [[Interval(0, 3)]], {(0, 0): 1})
    assert v is not None and v.kind == "window"
    half = Fraction(1, 2)
    assert validate_schedule(inst, [[Interval(1, 3)]], {(0, 1): half, (0, 2): half}) is None


def test_schedule_json_round_trip():
    sched = Schedule.build("demo", [[Interval(0, 2)]], {(0, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)}, 2,
                           {"note": "x"})
    doc = json.loads(json.dumps(schedule_to_dict(sched)))
    back = schedule_from_dict(doc, 2)
    assert back == sched
    assert schedule_to_dict(back) == schedule_to_dict(sched)
