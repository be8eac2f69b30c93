"""Exhaustive ground truth for small instances, plus instance generators.

Nothing here shares code paths with the algorithms it audits: single-machine
feasibility of a slot set is decided by the interval (Hall) condition, and
larger single-machine instances and all multi-machine instances are solved by
a memoized search over slots.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .core import (
    InfeasibleInstance,
    Instance,
    Interval,
    Job,
    Schedule,
    TooLarge,
    make_instance,
    runs,
)

MASK_LIMIT = 16
SEARCH_LIMIT = 64


@dataclass(frozen=True)
class OracleResult:
    """Optimal cost, a witness attaining it, and the fewest wake-ups among all optima."""

    opt_cost: int
    witness: Schedule
    min_wakeups: int
    wake_cost: int

    @property
    def q_min(self) -> int:
        return self.wake_cost * self.min_wakeups


def _masks(horizon: int) -> np.ndarray:
    return np.arange(1 << horizon, dtype=np.int64)


def _range_mask(lo: int, hi: int) -> int:
    """Bits ``lo .. hi-1``."""
    return ((1 << hi) - 1) ^ ((1 << lo) - 1) if hi > lo else 0


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def _mask_costs(masks: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    active = _popcount(masks)
    wakeups = _popcount(masks & ~(masks << 1))
    return active + q * wakeups, wakeups


def _slots_of(mask: int) -> list[int]:
    return [t for t in range(mask.bit_length()) if mask >> t & 1]


def _edf_witness(slots: Sequence[int], jobs: Sequence[Job]) -> dict[tuple[int, int], int]:
    """Plain EDF used only to attach an assignment to an oracle optimum."""
    remaining = {j.id: j.processing for j in jobs}
    out = {}
    for t in sorted(slots):
        live = [j for j in jobs if j.release <= t < j.deadline and remaining[j.id] > 0]
        if live:
            j = min(live, key=lambda j: (j.deadline, j.id))
            remaining[j.id] -= 1
            out[(j.id, t)] = 1
    return out


def brute_opt_single(instance: Instance) -> OracleResult:
    """Exact single-machine optimum.

    Horizons up to 16 enumerate every slot subset; longer ones (up to 64)
    use a memoized search that follows EDF inside the chosen slots.
    """
    if instance.machines != 1:
        raise ValueError("brute_opt_single needs m = 1")
    if instance.horizon > SEARCH_LIMIT:
        raise TooLarge(f"horizon {instance.horizon} > {SEARCH_LIMIT}")
    if instance.horizon > MASK_LIMIT:
        return _search_opt(instance)
    q, jobs, horizon = instance.wake_cost, instance.jobs, instance.horizon
    if not jobs:
        return OracleResult(0, Schedule.build("brute", [], {}, q), 0, q)
    masks = _masks(horizon)
    ok = np.ones(len(masks), dtype=bool)
    points = instance.event_points()
    for a, b in itertools.combinations(points, 2):
        demand = sum(j.processing for j in jobs if a <= j.release and j.deadline <= b)
        if demand:
            ok &= _popcount(masks & _range_mask(a, b)) >= demand
    cost, wakeups = _mask_costs(masks, q)
    feasible = np.flatnonzero(ok)
    if len(feasible) == 0:
        raise InfeasibleInstance("no slot subset satisfies every interval demand")
    order = feasible[np.lexsort((wakeups[feasible], cost[feasible]))]
    best = int(order[0])
    slots = _slots_of(best)
    assignment = _edf_witness(slots, jobs)
    witness = Schedule.build("brute", [runs(slots)], assignment, q)
    return OracleResult(int(cost[best]), witness, int(wakeups[best]), q)


def _search_opt(instance: Instance) -> OracleResult:
    return _state_search(instance, single=True)


def brute_opt_multi(instance: Instance) -> OracleResult:
    """Exact optimum on ``m`` machines by memoized search over slots.

    State: slot, machines active in the previous slot, remaining volume of each
    job.  Each slot picks a level ``k`` and the set of jobs it runs; running
    ``min(k, live)`` jobs is never worse than idling an active machine.
    """
    if instance.horizon > MASK_LIMIT or instance.machines > 4 or instance.n > 8:
        raise TooLarge(f"D={instance.horizon}, m={instance.machines}, n={instance.n}")
    return _state_search(instance, single=False)


def _state_search(instance: Instance, single: bool) -> OracleResult:
    q, m, jobs, horizon = instance.wake_cost, instance.machines, instance.jobs, instance.horizon
    if not jobs:
        return OracleResult(0, Schedule.build("brute", [], {}, q), 0, q)
    inf = (float("inf"), float("inf"))

    def options(t: int, rem: tuple[int, ...]):
        live = [j.id for j in jobs if j.release <= t < j.deadline and rem[j.id] > 0]
        if single:
            yield 0, ()
            if live:
                yield 1, (min(live, key=lambda i: (jobs[i].deadline, i)),)
            else:
                yield 1, ()
            return
        for k in range(m + 1):
            for chosen in itertools.combinations(live, min(k, len(live))):
                yield k, chosen

    @lru_cache(maxsize=None)
    def best(t: int, prev: int, rem: tuple[int, ...]) -> tuple[float, float]:
        for j in jobs:
            if rem[j.id] > max(0, j.deadline - t):
                return inf
        if t == horizon:
            return (0, 0)
        result = inf
        for k, chosen in options(t, rem):
            nxt = list(rem)
            for i in chosen:
                nxt[i] -= 1
            up = max(0, k - prev)
            c, w = best(t + 1, k, tuple(nxt))
            cand = (c + k + q * up, w + up)
            if cand < result:
                result = cand
        return result

    start = tuple(j.processing for j in jobs)
    cost, wakeups = best(0, 0, start)
    if cost == float("inf"):
        raise InfeasibleInstance("no schedule completes every job")

    profile, assignment = [], {}
    prev, rem = 0, start
    for t in range(horizon):
        target = best(t, prev, rem)
        for k, chosen in options(t, rem):
            nxt = list(rem)
            for i in chosen:
                nxt[i] -= 1
            up = max(0, k - prev)
            c, w = best(t + 1, k, tuple(nxt))
            if (c + k + q * up, w + up) == target:
                break
        profile.append(k)
        for i in chosen:
            assignment[(i, t)] = 1
        prev, rem = k, tuple(nxt)
    best.cache_clear()
    witness = Schedule.from_profile("brute", profile, assignment, q)
    return OracleResult(int(cost), witness, int(wakeups), q)


def brute_min_skeleton(instance: Instance) -> int:
    """Cheapest slot set with an active slot in ``[r_i - 1, d_i]`` for every job."""
    horizon = instance.horizon
    if horizon > MASK_LIMIT:
        raise TooLarge(f"horizon {horizon} > {MASK_LIMIT}")
    if not instance.jobs:
        return 0
    masks = _masks(horizon)
    ok = np.ones(len(masks), dtype=bool)
    for j in instance.jobs:
        lo, hi = max(0, j.release - 1), min(horizon - 1, j.deadline)
        ok &= (masks & _range_mask(lo, hi + 1)) != 0
    cost, _ = _mask_costs(masks, instance.wake_cost)
    return int(cost[ok].min())


def brute_max_deficiency(
    jobs: Sequence[Job], profile: Sequence[int]
) -> tuple[int, list[frozenset[int]]]:
    """Largest deficiency over all slot sets, and every slot set attaining it."""
    horizon = max([len(profile)] + [j.deadline for j in jobs])
    if horizon > 12:
        raise TooLarge(f"horizon {horizon} > 12")
    prof = list(profile) + [0] * (horizon - len(profile))
    masks = _masks(horizon)
    value = np.zeros(len(masks), dtype=np.int64)
    for j in jobs:
        inside = _popcount(masks & _range_mask(j.release, j.deadline))
        slack = (j.deadline - j.release) - inside
        value += np.maximum(0, j.processing - slack)
    for t in range(horizon):
        value -= prof[t] * ((masks >> t) & 1)
    value = np.maximum(value, 0)
    top = int(value.max())
    winners = [frozenset(_slots_of(int(s))) for s in np.flatnonzero(value == top)]
    return top, winners


# --- generators ----------------------------------------------------------

def gap_instance(q: int) -> Instance:
    """Integrality-gap family: q unit jobs spaced 2q+1 apart plus q-1 long bridging jobs."""
    if q < 2:
        raise ValueError(f"gap instance needs q >= 2, got {q}")
    units = [(2 * (i - 1) * q + i - 1, 2 * (i - 1) * q + i, 1) for i in range(1, q + 1)]
    longs = [(units[i - 1][0], units[i][1], q) for i in range(1, q)]
    return make_instance(units + longs, machines=1, wake_cost=q)


def random_jobs(rng: random.Random, n: int, horizon: int) -> list[tuple[int, int, int]]:
    out = []
    for _ in range(n):
        r = rng.randint(0, horizon - 1)
        length = rng.randint(1, horizon - r)
        out.append((r, r + length, rng.randint(1, length)))
    return out


def random_instance(
    seed: int | random.Random, n: int, horizon: int, q: int, machines: int = 1, tries: int = 200
) -> Instance:
    """Random feasible instance; infeasible draws are rejected and redrawn.

    Releases are uniform in ``[0, D-1]``, window lengths uniform in
    ``[1, D-r]``, processing uniform in ``[1, window]``.  Times are shifted so
    the earliest release is 0.
    """
    from .feasibility import dsi_check

    if n < 0 or horizon < 1 or q < 1 or machines < 1:
        raise ValueError("need n >= 0, D >= 1, q >= 1, m >= 1")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    for _ in range(tries):
        triples = random_jobs(rng, n, horizon)
        shift = min((r for r, _, _ in triples), default=0)
        inst = make_instance([(r - shift, d - shift, p) for r, d, p in triples], machines, q)
        if dsi_check([machines] * inst.horizon, inst.jobs).feasible:
            return inst
    raise ValueError(f"no feasible instance after {tries} draws")


def random_profile(rng: random.Random, horizon: int, machines: int) -> list[int]:
    return [rng.randint(0, machines) for _ in range(horizon)]


def supply_intervals(profile: Sequence[int]) -> list[Interval]:
    """One interval per maximal run of each level ``v > k``."""
    out = []
    for level in range(max(profile, default=0)):
        out.extend(runs(t for t, v in enumerate(profile) if v > level))
    return out


def random_integral_skeleton(
    rng: random.Random, jobs: Sequence[Job], horizon: int, extra: float = 0.2
) -> list[Interval]:
    """A random slot set touching every job window, as maximal runs."""
    slots = {rng.randint(max(0, j.release - 1), min(horizon - 1, j.deadline)) for j in jobs}
    slots |= {t for t in range(horizon) if rng.random() < extra}
    return runs(slots)


def random_fractional_skeleton(
    rng: random.Random, jobs: Sequence[Job], horizon: int, q: int, parts: int = 3, denominator: int = 12
) -> dict[Interval, Fraction]:
    """A feasible point of the single-machine skeleton LP.

    Convex combination, with random rational weights, of random integral
    skeletons and (with probability 1/2) an LP vertex under a random objective.
    """
    from .lp_round import solve_skeleton_lp

    pieces: list[dict[Interval, Fraction]] = []
    for _ in range(parts):
        pieces.append({iv: Fraction(1) for iv in random_integral_skeleton(rng, jobs, horizon)})
    if jobs and rng.random() < 0.5:
        weights = {
            Interval(a, b): rng.randint(1, 3 * horizon) + q
            for a in range(horizon)
            for b in range(a + 1, horizon + 1)
        }
        pieces.append(solve_skeleton_lp(jobs, horizon, q, weights))
    raw = [rng.randint(1, denominator) for _ in pieces]
    total = sum(raw)
    out: dict[Interval, Fraction] = {}
    for w, piece in zip(raw, pieces):
        for iv, v in piece.items():
            out[iv] = out.get(iv, Fraction(0)) + Fraction(w, total) * v
    return out
