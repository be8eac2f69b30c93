"""LP relaxation with skeleton constraints and its rounding to a 2-approximation.

The relaxation picks a weight ``x_I`` for every interval ``I`` of ``[0, D]``;
``m_t`` is the weight covering slot ``t`` and ``f(i, t)`` the fractional
assignment.  Each event pair ``(a, b)`` contributes the cut
``sum_{I touching [a, b]} x_I >= m - l(a, b)``.  A second solve keeps the
optimal cost and maximizes ``sum_t min(m_t, 1)``.

Rounding, in weight units of ``eps = gcd(x)``:
  F1  add each non-block holding a slot with ``m_t > 1`` as a whole interval;
  F2  keep the copies of depth < 1/eps (per-slot weight ``min(m_t, 1)``) and
      replace the deeper ones plus the F1 additions by the cheapest integer
      profile ``g`` with ``ceil(m_t - 1) <= g_t <= m - 1`` on non-blocks;
  F3  round the depth < 1/eps part to an integral skeleton by round robin;
then grow supply one slot at a time until the jobs fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

from .core import (
    CostBreakdown,
    InfeasibleInstance,
    Instance,
    Interval,
    InvariantError,
    Job,
    Schedule,
    fraction_text,
    laminar_decomposition,
    profile_cost,
    runs,
)
from .exact_lp import LinearProgram, LPInfeasible
from .feasibility import NoExtensiblePair, SupplySet, dsi_check, ext_alg_step
from .multi import BlackoutTable, blackout_table, check_feasible
from .skeleton import Skeleton


# --- the relaxation ------------------------------------------------------

def skeleton_cuts(table: BlackoutTable) -> dict[tuple[int, int], int]:
    """Event-pair demands ``m - l(a, b) > 0``, minus pairs implied by a sub-pair."""
    demand = {p: table.demand(*p) for p in table.levels if table.demand(*p) > 0}
    kept = {}
    for (a, b), need in demand.items():
        implied = any(
            (c, d) != (a, b) and a <= c and d <= b and other >= need
            for (c, d), other in demand.items()
        )
        if not implied:
            kept[(a, b)] = need
    return kept


@dataclass(frozen=True)
class FractionalSolution:
    """Optimal LP point after the second stage; all numbers exact."""

    x: Mapping[Interval, Fraction]
    f: Mapping[tuple[int, int], Fraction]
    m: tuple[Fraction, ...]
    y: tuple[Fraction, ...]
    value: Fraction
    wake_cost: int
    cuts: Mapping[tuple[int, int], int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "lp_value": fraction_text(self.value),
            "x": [
                {"start": iv.start, "end": iv.end, "weight": fraction_text(w)}
                for iv, w in sorted(self.x.items())
            ],
            "m": [fraction_text(v) for v in self.m],
            "y": [fraction_text(v) for v in self.y],
            "f": [
                {"job": i, "slot": t, "amount": fraction_text(a)}
                for (i, t), a in sorted(self.f.items())
            ],
        }


def _interval_vars(lp: LinearProgram, horizon: int, machines: int, q: int) -> dict[Interval, int]:
    return {
        Interval(s, e): lp.add_var(cost=(e - s) + q, lower=0, upper=machines)
        for s in range(horizon)
        for e in range(s + 1, horizon + 1)
    }


def build_and_solve_lp(instance: Instance, table: BlackoutTable | None = None) -> FractionalSolution:
    """Two-stage exact solve: minimum cost, then maximum ``sum_t min(m_t, 1)``."""
    q, m, horizon = instance.wake_cost, instance.machines, instance.horizon
    if not instance.jobs:
        return FractionalSolution({}, {}, (), (), Fraction(0), q)
    if table is None:
        table = blackout_table(instance)
    lp = LinearProgram()
    xs = _interval_vars(lp, horizon, m, q)
    fs = {(j.id, t): lp.add_var(0, 0, 1) for j in instance.jobs for t in j.window}
    covering: dict[int, list[int]] = {t: [] for t in range(horizon)}
    for iv, v in xs.items():
        for t in iv.slots:
            covering[t].append(v)
    for t in range(horizon):
        row = {v: -1 for v in covering[t]}
        row.update({fs[(j.id, t)]: 1 for j in instance.jobs if t in j.window})
        lp.add_row(row, upper=0)
        lp.add_row({v: 1 for v in covering[t]}, upper=m)
    for j in instance.jobs:
        lp.add_row({fs[(j.id, t)]: 1 for t in j.window}, lower=j.processing, upper=j.processing)
    cuts = skeleton_cuts(table)
    for (a, b), need in sorted(cuts.items()):
        lp.add_row({v: 1 for iv, v in xs.items() if iv.touches(a, b)}, lower=need)
    try:
        first = lp.solve()
    except LPInfeasible as exc:
        raise InfeasibleInstance("LP relaxation is infeasible") from exc

    second = lp.copy()
    second.add_row({v: iv.end - iv.start + q for iv, v in xs.items()}, lower=first.value, upper=first.value)
    ys = [second.add_var(0, 0, 1) for _ in range(horizon)]
    for t in range(horizon):
        row = {v: -1 for v in covering[t]}
        row[ys[t]] = 1
        second.add_row(row, upper=0)
    second.set_objective({v: 1 for v in ys})
    sol = second.solve(maximize=True)
    vals = sol.values
    x = {iv: vals[v] for iv, v in xs.items() if vals[v]}
    f = {key: vals[v] for key, v in fs.items() if vals[v]}
    prof = tuple(sum((vals[v] for v in covering[t]), Fraction(0)) for t in range(horizon))
    y = tuple(vals[v] for v in ys)
    value = sum((w * (len(iv) + q) for iv, w in x.items()), Fraction(0))
    if value != first.value:
        raise InvariantError(f"second stage changed the cost {first.value} -> {value}")
    return FractionalSolution(x, f, prof, y, value, q, cuts)


def solve_skeleton_lp(
    jobs: Sequence[Job], horizon: int, q: int, weights: Mapping[Interval, int] | None = None
) -> dict[Interval, Fraction]:
    """Single-machine skeleton relaxation: slot weight <= 1, each job touched by weight >= 1.

    ``weights`` optionally replaces the objective coefficient ``|I| + q``.
    """
    lp = LinearProgram()
    xs = {}
    for s in range(horizon):
        for e in range(s + 1, horizon + 1):
            iv = Interval(s, e)
            c = (e - s) + q if weights is None else weights[iv]
            xs[iv] = lp.add_var(cost=c, lower=0)
    for t in range(horizon):
        lp.add_row({v: 1 for iv, v in xs.items() if t in iv}, upper=1)
    for j in jobs:
        lp.add_row({v: 1 for iv, v in xs.items() if iv.touches(j.release, j.deadline)}, lower=1)
    sol = lp.solve()
    return {iv: sol.values[v] for iv, v in xs.items() if sol.values[v]}


# --- laminar normalization -------------------------------------------------

def weight_unit(weights: Sequence[Fraction]) -> Fraction:
    """Largest ``eps`` dividing every weight and 1, so ``1/eps`` is an integer."""
    vals = [Fraction(w) for w in weights] + [Fraction(1)]
    den = math.lcm(*(v.denominator for v in vals))
    num = math.gcd(*(v.numerator * (den // v.denominator) for v in vals))
    return Fraction(num, den)


@dataclass(frozen=True)
class Laminar:
    """Interval multiset in units of ``eps``: ``counts[I]`` copies of weight ``eps`` each."""

    eps: Fraction
    counts: Mapping[Interval, int]

    @property
    def copies_per_unit(self) -> int:
        return int(1 / self.eps)

    def weights(self) -> dict[Interval, Fraction]:
        return {iv: c * self.eps for iv, c in self.counts.items()}


def _crossing(a: Interval, b: Interval) -> bool:
    return a.start < b.start < a.end < b.end


def normalize_noncrossing(x: Mapping[Interval, Fraction]) -> Laminar:
    """Split into ``eps``-copies and uncross until any two copies are nested or disjoint.

    A crossing pair ``[a, b), [c, d)`` with ``a < c < b < d`` becomes
    ``[a, d), [c, b)``: slot totals, total length and interval count are unchanged.
    """
    eps = weight_unit(list(x.values()))
    counts = {iv: int(w / eps) for iv, w in x.items() if w}
    while True:
        ivs = sorted(iv for iv, c in counts.items() if c)
        pair = next(((a, b) for a in ivs for b in ivs if _crossing(a, b)), None)
        if pair is None:
            break
        a, b = pair
        k = min(counts[a], counts[b])
        counts[a] -= k
        counts[b] -= k
        for iv in (Interval(a.start, b.end), Interval(b.start, a.end)):
            counts[iv] = counts.get(iv, 0) + k
    return Laminar(eps, {iv: c for iv, c in sorted(counts.items()) if c})


def slot_totals(counts: Mapping[Interval, int | Fraction], horizon: int) -> list:
    out = [0] * horizon
    for iv, c in counts.items():
        for t in iv.slots:
            out[t] += c
    return out


# --- blocks ----------------------------------------------------------------

@dataclass(frozen=True)
class BlockStructure:
    """Maximal runs with ``m_t < 1`` (blocks) and ``m_t >= 1`` (non-blocks)."""

    blocks: tuple[Interval, ...]
    non_blocks: tuple[Interval, ...]
    block_volume: Fraction
    non_block_volume: Fraction
    wake_volume: Fraction

    def is_block_slot(self, t: int) -> bool:
        return any(t in iv for iv in self.blocks)


def classify_blocks(
    profile: Sequence[Fraction], x: Mapping[Interval, Fraction] | None = None, q: int = 0
) -> BlockStructure:
    low = [t for t, v in enumerate(profile) if v < 1]
    high = [t for t, v in enumerate(profile) if v >= 1]
    pb = sum((Fraction(profile[t]) for t in low), Fraction(0))
    pn = sum((Fraction(profile[t]) for t in high), Fraction(0))
    qf = q * sum((Fraction(w) for w in (x or {}).values()), Fraction(0))
    return BlockStructure(tuple(runs(low)), tuple(runs(high)), pb, pn, qf)


# --- round robin -------------------------------------------------------------

@dataclass(frozen=True)
class RoundRobin:
    skeleton: Skeleton
    candidates: tuple[tuple[Interval, ...], ...]
    eps: Fraction
    fractional_cost: Fraction


def _touch_weight(x: Mapping[Interval, Fraction], a: int, b: int) -> Fraction:
    return sum((w for iv, w in x.items() if iv.touches(a, b)), Fraction(0))


def uncross_to_proper(counts: Mapping[Interval, int]) -> list[tuple[Interval, int]]:
    """Pair the sorted starts with the sorted ends: no copy strictly inside another.

    Slot totals, total length and count are preserved, as is the number of
    copies touching any window.
    """
    starts = sorted((iv.start, c) for iv, c in counts.items())
    ends = sorted((iv.end, c) for iv, c in counts.items())
    out: list[tuple[Interval, int]] = []
    i = j = 0
    si, sj = (starts[0][1], ends[0][1]) if starts else (0, 0)
    while i < len(starts):
        k = min(si, sj)
        iv = Interval(starts[i][0], ends[j][0])
        if out and out[-1][0] == iv:
            out[-1] = (iv, out[-1][1] + k)
        else:
            out.append((iv, k))
        si -= k
        sj -= k
        if si == 0:
            i += 1
            si = starts[i][1] if i < len(starts) else 0
        if sj == 0:
            j += 1
            sj = ends[j][1] if j < len(ends) else 0
    return out


def round_robin_skeleton(
    x: Mapping[Interval, Fraction], jobs: Sequence[Job], horizon: int, q: int
) -> RoundRobin:
    """Deal ``eps``-copies of a fractional skeleton into ``1/eps`` integral ones; keep the cheapest."""
    x = {iv: Fraction(w) for iv, w in x.items() if w}
    if any(w < 0 for w in x.values()):
        raise ValueError("negative interval weight")
    load = slot_totals(x, horizon)
    for t, v in enumerate(load):
        if v > 1:
            raise ValueError(f"slot {t} carries weight {v} > 1")
    for j in jobs:
        if _touch_weight(x, j.release, j.deadline) < 1:
            raise ValueError(f"job {j.id} is touched by weight < 1")
    frac_cost = sum((w * (len(iv) + q) for iv, w in x.items()), Fraction(0))
    if not x:
        return RoundRobin(Skeleton((), CostBreakdown(0, 0, q)), ((),), Fraction(1), frac_cost)
    eps = weight_unit(list(x.values()))
    k_total = int(1 / eps)
    proper = uncross_to_proper({iv: int(w / eps) for iv, w in x.items()})
    dealt: list[list[Interval]] = [[] for _ in range(k_total)]
    index = 0
    for iv, c in proper:
        if c > k_total:
            raise InvariantError("more identical copies than candidates")
        for off in range(c):
            dealt[(index + off) % k_total].append(iv)
        index += c
    candidates = []
    best = None
    for ivs in dealt:
        ivs.sort()
        for a, b in zip(ivs, ivs[1:]):
            if b.start < a.end:
                raise InvariantError(f"dealt candidate has overlapping {a}, {b}")
        merged = tuple(runs(t for iv in ivs for t in iv.slots))
        for j in jobs:
            if not any(iv.touches(j.release, j.deadline) for iv in merged):
                raise InvariantError(f"dealt candidate misses job {j.id}")
        cost = sum(len(iv) for iv in merged) + q * len(merged)
        candidates.append(merged)
        if best is None or cost < best[0]:
            best = (cost, merged)
    if best[0] > frac_cost:
        raise InvariantError(f"integral skeleton {best[0]} costs more than fractional {frac_cost}")
    skel = Skeleton(best[1], CostBreakdown(sum(len(iv) for iv in best[1]), len(best[1]), q))
    return RoundRobin(skel, tuple(candidates), eps, frac_cost)


# --- the 2-approximation -----------------------------------------------------

def split_by_depth(lam: Laminar) -> tuple[dict[Interval, int], dict[Interval, int]]:
    """Copies at nesting depth < 1/eps, and the rest.

    In a laminar family the copies through a slot form a chain, so they carry
    depths 0, 1, ..., c_t - 1 and the shallow part has ``min(c_t, 1/eps)`` there.
    """
    k_total = lam.copies_per_unit
    ivs = sorted(lam.counts, key=lambda iv: (iv.start, -iv.end))
    shallow, deep = {}, {}
    for iv in ivs:
        above = sum(c for jv, c in lam.counts.items() if jv != iv and jv.start <= iv.start and iv.end <= jv.end)
        c = lam.counts[iv]
        keep = min(c, max(0, k_total - above))
        if keep:
            shallow[iv] = keep
        if c - keep:
            deep[iv] = c - keep
    return shallow, deep


def cheapest_profile(lower: Sequence[int], upper: Sequence[int], q: int) -> list[int]:
    """Integer profile within bounds minimizing ``sum g + q * sum (g_t - g_{t-1})^+``."""
    if not lower:
        return []
    top = max(upper)
    inf = float("inf")
    cost = [0] + [inf] * top
    back: list[list[int]] = []
    for lo, hi in zip(lower, upper):
        nxt = [inf] * (top + 1)
        arg = [0] * (top + 1)
        for v in range(lo, hi + 1):
            for u in range(top + 1):
                c = cost[u] + v + q * max(0, v - u)
                if c < nxt[v]:
                    nxt[v], arg[v] = c, u
        cost = nxt
        back.append(arg)
    v = min(range(top + 1), key=lambda k: (cost[k], k))
    out = []
    for arg in reversed(back):
        out.append(v)
        v = arg[v]
    return out[::-1]


def round_two_approx(instance: Instance) -> Schedule:
    """Round the strengthened LP; cost at most twice the LP value."""
    check_feasible(instance)
    q, m, jobs, horizon = instance.wake_cost, instance.machines, instance.jobs, instance.horizon
    table = blackout_table(instance)
    sol = build_and_solve_lp(instance, table)
    if not jobs:
        return Schedule.build("lp-two-approx", [], {}, q, {"lp_value": "0/1"})
    lam = normalize_noncrossing(sol.x)
    if slot_totals(lam.weights(), horizon) != list(sol.m):
        raise InvariantError("uncrossing changed slot totals")
    blocks = classify_blocks(sol.m, sol.x, q)
    cost_f = sol.value
    if cost_f != blocks.block_volume + blocks.non_block_volume + blocks.wake_volume:
        raise InvariantError("LP cost does not split into P_B + P_N + Q_F")

    triggered = [n for n in blocks.non_blocks if any(sol.m[t] > 1 for t in n.slots)]
    weights = []
    for n in triggered:
        weights.append(_touch_weight(sol.x, n.start, n.end))
    cost_f1 = cost_f + sum(len(n) + q for n in triggered)
    bound_f1 = cost_f + blocks.non_block_volume + blocks.wake_volume
    if cost_f1 > bound_f1:
        raise InvariantError(f"Cost(F1) {cost_f1} > {bound_f1}")

    shallow, deep = split_by_depth(lam)
    eps = lam.eps
    rho = [c * eps for c in slot_totals(deep, horizon)]
    non_block = [not blocks.is_block_slot(t) for t in range(horizon)]
    if any(r and not nb for r, nb in zip(rho, non_block)):
        raise InvariantError("deep copies reach into a block")
    lower = [math.ceil(r) if nb else 0 for r, nb in zip(rho, non_block)]
    upper = [m - 1 if nb else 0 for nb in non_block]
    g = cheapest_profile(lower, upper, q)
    shallow_x = {iv: c * eps for iv, c in shallow.items()}
    cost_shallow = sum((w * (len(iv) + q) for iv, w in shallow_x.items()), Fraction(0))
    cost_f2 = cost_shallow + profile_cost(g, q).total
    if cost_f2 > cost_f1:
        raise InvariantError(f"Cost(F2) {cost_f2} > Cost(F1) {cost_f1}")

    block_jobs = [j for j in jobs if all(blocks.is_block_slot(t) for t in j.window)]
    slot_jobs = [t for t in range(horizon) if non_block[t]]
    js = [Job(k, j.release, j.deadline, 1) for k, j in enumerate(block_jobs)]
    js += [Job(len(js) + k, t, t + 1, 1) for k, t in enumerate(slot_jobs)]
    rr = round_robin_skeleton(shallow_x, js, horizon, q)
    cost_f3 = rr.skeleton.cost.total + profile_cost(g, q).total
    if cost_f3 > cost_f2:
        raise InvariantError(f"Cost(F3) {cost_f3} > Cost(F2) {cost_f2}")

    supply = SupplySet.of(list(rr.skeleton.intervals) + [iv for lvl in laminar_decomposition(g) for iv in lvl])
    m3 = supply.profile(horizon)
    for t in range(horizon):
        if m3[t] > m or (non_block[t] and m3[t] < sol.m[t]):
            raise InvariantError(f"F3 capacity {m3[t]} at slot {t} vs LP {sol.m[t]}")

    check = dsi_check(m3, jobs)
    steps = 0
    while not check.feasible:
        try:
            supply, check = ext_alg_step(supply, jobs, check.certificate, m)
        except NoExtensiblePair as exc:
            raise InvariantError("extension phase got stuck") from exc
        steps += 1
    if steps > blocks.block_volume:
        raise InvariantError(f"{steps} extension steps > P_B = {blocks.block_volume}")
    final = supply.profile(horizon)
    details = {
        "lp_value": fraction_text(sol.value),
        "epsilon": fraction_text(eps),
        "P_B": fraction_text(blocks.block_volume),
        "P_N": fraction_text(blocks.non_block_volume),
        "Q_F": fraction_text(blocks.wake_volume),
        "cost_F": fraction_text(cost_f),
        "cost_F1": fraction_text(cost_f1),
        "cost_F2": fraction_text(cost_f2),
        "cost_F3": fraction_text(cost_f3),
        "extension_steps": steps,
        "non_block_weights": [fraction_text(v) for v in weights],
    }
    sched = Schedule.build("lp-two-approx", laminar_decomposition(final), check.assignment, q, details)
    if sched.cost.total > 2 * sol.value:
        raise InvariantError(f"cost {sched.cost.total} exceeds twice the LP value {sol.value}")
    return sched
