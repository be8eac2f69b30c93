"""Multi-machine skeletons and the combinatorial 6-approximation.

For an event-point pair ``(a, b)`` the blackout level ``l(a, b)`` is the
largest number of machines that can sleep throughout ``[a, b)`` with the
instance still feasible.  Any feasible schedule therefore has at least
``m - l(a, b)`` machines' worth of activity near ``[a, b]``; turning each
such requirement into a unit job on levels ``1 .. m - l(a, b)`` splits the
multi-machine skeleton problem into ``m`` single-machine ones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

from .core import (
    CostBreakdown,
    InfeasibleInstance,
    Instance,
    Interval,
    InvariantError,
    Job,
    Schedule,
    laminar_decomposition,
)
from .feasibility import NoExtensiblePair, SupplySet, dsi_check, ext_alg_step
from .skeleton import Skeleton, min_cost_skeleton


def blackout_profile(instance: Instance, a: int, b: int, level: int) -> list[int]:
    m = instance.machines
    return [m - level if a <= t < b else m for t in range(instance.horizon)]


def blackout_level(instance: Instance, a: int, b: int) -> int:
    """Most machines that can be off throughout ``[a, b)`` keeping the instance feasible."""
    if not a < b:
        raise ValueError(f"need a < b, got ({a}, {b})")
    jobs = instance.jobs
    if not dsi_check(blackout_profile(instance, a, b, 0), jobs).feasible:
        raise InfeasibleInstance("instance is infeasible even with every machine on")
    lo, hi = 0, instance.machines
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if dsi_check(blackout_profile(instance, a, b, mid), jobs).feasible:
            lo = mid
        else:
            hi = mid - 1
    return lo


@dataclass(frozen=True)
class BlackoutTable:
    """``l(a, b)`` for every pair of event points ``a < b``."""

    machines: int
    levels: Mapping[tuple[int, int], int]

    def __getitem__(self, pair: tuple[int, int]) -> int:
        return self.levels[pair]

    def demand(self, a: int, b: int) -> int:
        """Machines that must show activity near ``[a, b]``."""
        return self.machines - self.levels[(a, b)]

    def monotonicity_violations(self) -> list[tuple[tuple[int, int], tuple[int, int]]]:
        """Pairs where a sub-window has a lower blackout level than its super-window."""
        out = []
        for (a, b), l_out in self.levels.items():
            for (c, d), l_in in self.levels.items():
                if a <= c and d <= b and (a, b) != (c, d) and l_in < l_out:
                    out.append(((a, b), (c, d)))
        return out


def blackout_table(instance: Instance) -> BlackoutTable:
    points = instance.event_points()
    levels = {(a, b): blackout_level(instance, a, b) for a, b in itertools.combinations(points, 2)}
    return BlackoutTable(instance.machines, levels)


def level_instances(instance: Instance, table: BlackoutTable) -> list[Instance]:
    """Level ``k`` (1-based) gets a unit job ``(a, b, 1)`` for each pair needing ``>= k`` machines."""
    out = []
    for k in range(1, instance.machines + 1):
        pairs = sorted(p for p in table.levels if table.demand(*p) >= k)
        jobs = tuple(Job(i, a, b, 1) for i, (a, b) in enumerate(pairs))
        out.append(Instance(jobs, 1, instance.wake_cost, instance.horizon))
    return out


@dataclass(frozen=True)
class MultiSkeleton:
    """One single-machine skeleton per level."""

    levels: tuple[Skeleton, ...]
    wake_cost: int

    @property
    def cost(self) -> CostBreakdown:
        active = sum(s.cost.active for s in self.levels)
        wakeups = sum(s.cost.wakeups for s in self.levels)
        return CostBreakdown(active, wakeups, self.wake_cost)

    @property
    def intervals(self) -> list[Interval]:
        return [iv for s in self.levels for iv in s.intervals]

    def profile(self, horizon: int) -> list[int]:
        prof = [0] * horizon
        for iv in self.intervals:
            for t in iv.slots:
                prof[t] += 1
        return prof

    def overlap_shortfalls(self, table: BlackoutTable) -> list[tuple[int, int]]:
        """Pairs touched by fewer than ``m - l(a, b)`` intervals (must be empty)."""
        ivs = self.intervals
        return [
            (a, b)
            for (a, b) in sorted(table.levels)
            if sum(iv.touches(a, b) for iv in ivs) < table.demand(a, b)
        ]

    def single_slot_shortfalls(self, table: BlackoutTable, horizon: int) -> list[tuple[int, int]]:
        """Pairs with no slot in ``[a, b)`` where ``m - l(a, b)`` levels are active at once."""
        prof = self.profile(horizon)
        return [
            (a, b)
            for (a, b) in sorted(table.levels)
            if table.demand(a, b) > 0 and max(prof[a:b]) < table.demand(a, b)
        ]


def multi_skeleton(instance: Instance, table: BlackoutTable | None = None) -> MultiSkeleton:
    """Cheapest skeleton per level; the sum lower-bounds OPT."""
    if table is None:
        table = blackout_table(instance)
    levels = tuple(min_cost_skeleton(inst) for inst in level_instances(instance, table))
    skel = MultiSkeleton(levels, instance.wake_cost)
    missing = skel.overlap_shortfalls(table)
    if missing:
        raise InvariantError(f"multi-skeleton misses pairs {missing}")
    return skel


def check_feasible(instance: Instance) -> None:
    if not dsi_check([instance.machines] * instance.horizon, instance.jobs).feasible:
        raise InfeasibleInstance("jobs do not fit even with every machine always on")


def six_approx(instance: Instance) -> Schedule:
    """Extend the multi-skeleton one slot at a time, then triple capacity if still short."""
    check_feasible(instance)
    m, q, jobs, horizon = instance.machines, instance.wake_cost, instance.jobs, instance.horizon
    table = blackout_table(instance)
    skel = multi_skeleton(instance, table)
    supply = SupplySet.of(skel.intervals)
    check = dsi_check(supply.profile(horizon), jobs)
    steps = 0
    while not check.feasible:
        try:
            supply, check = ext_alg_step(supply, jobs, check.certificate, m)
        except NoExtensiblePair:
            break
        steps += 1
    profile = supply.profile(horizon)
    tripled = False
    if not check.feasible:
        tripled = True
        profile = [min(3 * v, m) for v in profile]
        check = dsi_check(profile, jobs)
        if not check.feasible:
            raise InvariantError("tripled supply is still infeasible")
    if max(profile, default=0) > m:
        raise InvariantError("profile exceeds machine count")
    details = {
        "skeleton_cost": skel.cost.total,
        "extension_steps": steps,
        "tripled": tripled,
        "single_slot_shortfalls": len(skel.single_slot_shortfalls(table, horizon)),
    }
    return Schedule.build("six-approx", laminar_decomposition(profile), check.assignment, q, details)
