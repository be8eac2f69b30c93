from __future__ import annotations

import random

import pytest

from powernap.core import Interval, Job
from powernap.feasibility import (
    NoExtensiblePair,
    SupplySet,
    deficiency,
    dsi_check,
    edf_schedule,
    ext_alg_step,
    forced_volume,
)
from powernap.oracle import brute_max_deficiency, random_jobs, random_profile, supply_intervals


def jobs_of(*triples):
    return [Job(i, r, d, p) for i, (r, d, p) in enumerate(triples)]


def test_edf_examples():
    done, assignment = edf_schedule({0, 1}, jobs_of((0, 2, 1), (1, 2, 1)))
    assert done == {0: 1, 1: 1}
    assert assignment == {(0, 0): 1, (1, 1): 1}
    done, assignment = edf_schedule(set(), jobs_of((0, 2, 1), (1, 3, 2)))
    assert done == {0: 0, 1: 0} and assignment == {}
    done, assignment = edf_schedule({0, 1, 2}, jobs_of((0, 3, 3), (0, 1, 1)))
    assert done == {0: 2, 1: 1} and assignment[(1, 0)] == 1


def test_forced_volume_examples():
    assert forced_volume(Job(0, 0, 4, 3), [Interval(1, 3)]) == 1
    assert forced_volume(Job(0, 0, 4, 1), [Interval(1, 2)]) == 0
    assert forced_volume(Job(0, 0, 2, 2), [Interval(0, 2)]) == 2


def test_deficiency_examples():
    jobs = jobs_of((0, 2, 2), (0, 2, 2))
    assert deficiency(jobs, [Interval(0, 2)], [1, 1]) == 2
    assert deficiency(jobs, [], [1, 1]) == 0
    assert deficiency(jobs_of((0, 2, 2)), [Interval(0, 2)], [2, 2]) == 0


def test_dsi_check_examples():
    assert dsi_check([1, 1], jobs_of((0, 2, 1), (0, 2, 1))).feasible
    check = dsi_check([1, 1], jobs_of((0, 2, 2), (0, 2, 2)))
    assert not check.feasible
    assert check.certificate.value == 2
    assert check.certificate.intervals == (Interval(0, 2),)
    check = dsi_check([], jobs_of((0, 1, 1)))
    assert check.certificate.value == 1 and check.certificate.intervals == (Interval(0, 1),)


def test_dsi_check_accepts_supply_set():
    supply = SupplySet.of([Interval(0, 2), Interval(1, 3)])
    assert supply.profile() == [1, 2, 1]
    assert dsi_check(supply, jobs_of((0, 3, 2), (1, 2, 1))).feasible


def test_ext_alg_step_grows_into_certificate():
    jobs = jobs_of((0, 3, 3))
    supply = SupplySet.of([Interval(0, 1)])
    check = dsi_check(supply, jobs)
    assert check.certificate.value == 2
    grown, check = ext_alg_step(supply, jobs, check.certificate, 1)
    assert grown.intervals == ((Interval(0, 2), 1),)
    assert check.max_deficiency == 1


def test_ext_alg_step_without_neighbour_raises():
    jobs = jobs_of((4, 6, 2))
    supply = SupplySet.of([Interval(0, 2)])
    check = dsi_check(supply, jobs)
    with pytest.raises(NoExtensiblePair):
        ext_alg_step(supply, jobs, check.certificate, 1)


def test_ext_alg_step_repeats_until_feasible():
    jobs = jobs_of((0, 3, 2))
    supply = SupplySet.of([Interval(0, 1)])
    check = dsi_check(supply, jobs)
    steps = 0
    while not check.feasible:
        supply, check = ext_alg_step(supply, jobs, check.certificate, 1)
        steps += 1
    assert steps <= 2
    assert supply.intervals[0][0] in (Interval(0, 2), Interval(0, 3))


def test_ext_alg_step_respects_machine_limit():
    jobs = jobs_of((0, 2, 2), (0, 2, 2))
    supply = SupplySet.of([Interval(0, 2), Interval(0, 1)])
    check = dsi_check(supply, jobs)
    grown, check = ext_alg_step(supply, jobs, check.certificate, 2)
    assert check.feasible and max(grown.profile()) == 2


def test_deficiency_matches_brute_force_sample():
    rng = random.Random(5)
    for _ in range(150):
        horizon = rng.randint(1, 8)
        m = rng.randint(1, 3)
        jobs = [Job(i, *t) for i, t in enumerate(random_jobs(rng, rng.randint(0, 4), horizon))]
        prof = random_profile(rng, horizon, m)
        value, winners = brute_max_deficiency(jobs, prof)
        check = dsi_check(prof, jobs)
        assert check.max_deficiency == value
        assert check.feasible == (value == 0)
        if not check.feasible:
            slots = frozenset(t for iv in check.certificate.intervals for t in iv.slots)
            assert slots in winners
            assert deficiency(jobs, check.certificate.intervals, prof) == value


def test_supply_intervals_rebuild_profile():
    prof = [0, 2, 3, 1, 0, 2]
    assert SupplySet.of(supply_intervals(prof)).profile(len(prof)) == prof
