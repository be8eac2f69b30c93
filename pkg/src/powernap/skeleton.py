"""Single-machine skeletons.

A skeleton is a set of disjoint active intervals that comes near every job:
slot ``t`` covers job ``i`` iff ``r_i - 1 <= t <= d_i``.  Every feasible
schedule is a skeleton, so the cheapest skeleton lower-bounds OPT.

The cheapest skeleton is found as its complement: inside the frame of slots
that any skeleton must span, pick disjoint gaps (inactive runs) maximizing
``sum(|G| - q)^+`` such that no job's coverage range falls inside a gap.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .core import (
    CostBreakdown,
    InfeasibleInstance,
    Instance,
    Interval,
    InvariantError,
    Job,
    Number,
    Schedule,
    runs,
    schedule_cost,
)
from .feasibility import edf_schedule


@dataclass(frozen=True)
class Skeleton:
    """Disjoint, merged active intervals with their cost at the instance's q."""

    intervals: tuple[Interval, ...]
    cost: CostBreakdown

    @property
    def slots(self) -> set[int]:
        return {t for iv in self.intervals for t in iv.slots}

    def cost_at(self, q: Number) -> Number:
        return sum(len(iv) for iv in self.intervals) + q * len(self.intervals)


def coverage_range(job: Job, horizon: int) -> tuple[int, int]:
    """Inclusive slot range whose activity counts as touching the job."""
    return max(0, job.release - 1), min(horizon - 1, job.deadline)


def uncovered_jobs(slots: Iterable[int], jobs: Sequence[Job], horizon: int) -> list[int]:
    active = sorted(set(slots))
    missing = []
    for j in jobs:
        lo, hi = coverage_range(j, horizon)
        k = bisect.bisect_left(active, lo)
        if k == len(active) or active[k] > hi:
            missing.append(j.id)
    return missing


class _GapIndex:
    """Earliest deadline among jobs released strictly after a point."""

    def __init__(self, jobs: Sequence[Job]):
        order = sorted(jobs, key=lambda j: j.release)
        self.releases = [j.release for j in order]
        self.suffix = [0] * (len(order) + 1)
        best = None
        for k in range(len(order) - 1, -1, -1):
            d = order[k].deadline
            best = d if best is None or d < best else best
            self.suffix[k] = best
        self.suffix[len(order)] = None

    def end_after(self, x: int) -> int | None:
        k = bisect.bisect_right(self.releases, x)
        return self.suffix[k]


def right_maximal_gaps(instance: Instance) -> list[Interval]:
    """For each event point ``t``, the longest gap starting at ``t`` that no job forbids.

    The gap ends at the earliest deadline among jobs released after ``t``;
    event points with no later release yield nothing.
    """
    index = _GapIndex(instance.jobs)
    out = []
    for t in instance.event_points():
        y = index.end_after(t)
        if y is not None and y > t:
            out.append(Interval(t, y))
    return out


def min_cost_skeleton(instance: Instance, scale: Number = 1) -> Skeleton:
    """Cheapest skeleton when each wake-up is charged ``scale * q``.

    The returned ``cost`` is computed at the unscaled q.
    """
    scale = Fraction(scale)
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    q = instance.wake_cost
    jobs = instance.jobs
    if not jobs:
        return Skeleton((), CostBreakdown(0, 0, q))
    horizon = instance.horizon
    ranges = [coverage_range(j, horizon) for j in jobs]
    first = min(hi for _, hi in ranges)
    last = max(lo for lo, _ in ranges)
    if last <= first:
        ivs = (Interval(first, first + 1),)
        return Skeleton(ivs, schedule_cost([ivs], q))

    q_eff = scale * q
    index = _GapIndex(jobs)
    starts = {first + 1}
    starts.update(j.release for j in jobs)
    starts.update(j.deadline + 1 for j in jobs)
    cands = sorted(x for x in starts if first < x < last)

    def gap_end(x: int) -> int:
        y = index.end_after(x)
        return last if y is None else min(y, last)

    best: list[Fraction] = [Fraction(0)] * (len(cands) + 1)
    choice: list[tuple[int, int] | None] = [None] * (len(cands) + 1)
    for k in range(len(cands) - 1, -1, -1):
        x = cands[k]
        y = gap_end(x)
        best[k] = best[k + 1]
        gain = (y - x) - q_eff
        if gain >= 0:
            # ties go to sleeping: the extra wake-up sits next to a job, not mid-gap
            nxt = bisect.bisect_left(cands, y + 1)
            if gain + best[nxt] >= best[k]:
                best[k] = gain + best[nxt]
                choice[k] = (y, nxt)

    gaps = []
    k = 0
    while k < len(cands):
        if choice[k] is None:
            k += 1
            continue
        y, nxt = choice[k]
        gaps.append((cands[k], y))
        k = nxt
    inactive = {t for x, y in gaps for t in range(x, y)}
    ivs = tuple(runs(t for t in range(first, last + 1) if t not in inactive))
    return Skeleton(ivs, schedule_cost([ivs], q))


def is_feasible_single(instance: Instance) -> bool:
    done, _ = edf_schedule(range(instance.horizon), instance.jobs)
    return sum(done.values()) == instance.total_processing


def extend_skeleton_to_feasible(
    skeleton: Skeleton, instance: Instance, algorithm: str = "skeleton-extension"
) -> Schedule:
    """Grow a skeleton into a feasible single-machine schedule.

    Jobs are visited by deadline; each missing unit is placed next to existing
    activity around the deadline so no new interval appears.  Cost rises by at
    most ``P - P_S`` where ``P_S`` is what EDF already fits into the skeleton.
    """
    if instance.machines != 1:
        raise ValueError("single-machine routine called with m > 1")
    horizon = instance.horizon
    if not is_feasible_single(instance):
        raise InfeasibleInstance("EDF over the whole horizon misses some volume")
    active = skeleton.slots
    if uncovered_jobs(active, instance.jobs, horizon):
        raise ValueError("input is not a skeleton of this instance")
    if any(t < 0 or t >= horizon for t in active):
        raise ValueError("skeleton leaves the horizon")

    done, _ = edf_schedule(active, instance.jobs)
    base_volume = sum(done.values())
    for job in sorted(instance.jobs, key=lambda j: (j.deadline, j.id)):
        missing = job.processing - done[job.id]
        if missing <= 0:
            continue
        d = job.deadline
        if (d - 1) in active or d in active:
            _fill_left(active, d - 1, missing)
        else:
            a = max(t for t in active if t < d) + 1
            room = min(missing, d - a)
            active.update(range(a, a + room))
            if missing > room:
                _fill_left(active, d - 1, missing - room)

    done, assignment = edf_schedule(active, instance.jobs)
    if sum(done.values()) != instance.total_processing:
        raise InvariantError("extended skeleton still misses volume")
    used = {t for _, t in assignment}
    ivs = []
    for iv in runs(active):
        s, e = iv.start, iv.end
        while s < e and s not in used:
            s += 1
        while e > s and (e - 1) not in used:
            e -= 1
        if s < e:
            ivs.append(Interval(s, e))
    sched = Schedule.build(algorithm, [ivs], assignment, instance.wake_cost)
    if len(ivs) > len(skeleton.intervals):
        raise InvariantError("extension created new intervals")
    budget = skeleton.cost.total + instance.total_processing - base_volume
    if sched.cost.total > budget:
        raise InvariantError(f"extension cost {sched.cost.total} exceeds {budget}")
    return Schedule.build(
        algorithm,
        [ivs],
        assignment,
        instance.wake_cost,
        {"skeleton_cost": skeleton.cost.total, "skeleton_volume": base_volume},
    )


def _fill_left(active: set[int], start: int, count: int) -> None:
    t = start
    while count > 0:
        if t < 0:
            raise InvariantError("ran out of slots while extending leftward")
        if t not in active:
            active.add(t)
            count -= 1
        t -= 1
