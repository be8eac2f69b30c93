"""Feasibility engines: EDF, max-flow checks, forced volume and deficiency.

A supply profile ``m_t`` is feasible for a job set iff the flow network

    source -> job i (cap p_i) -> slot t in [r_i, d_i) (cap 1) -> sink (cap m_t)

saturates every job.  When it does not, the slots left on the source side of
the minimal minimum cut form the unique smallest slot set of maximum
deficiency; its maximal runs are returned as the certificate.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx

from .core import Interval, InvariantError, Job, runs


class NoExtensiblePair(Exception):
    """No supply interval borders a slot of the deficiency certificate."""


@dataclass(frozen=True)
class SupplySet:
    """Active intervals with multiplicities; they may overlap.

    ``intervals`` is kept sorted and free of zero multiplicities.
    """

    intervals: tuple[tuple[Interval, int], ...] = ()

    @classmethod
    def of(cls, items: Iterable[Interval | tuple[Interval, int]]) -> SupplySet:
        counts: dict[Interval, int] = {}
        for item in items:
            iv, k = (item, 1) if isinstance(item, Interval) else item
            if k < 0:
                raise ValueError(f"negative multiplicity for {iv}")
            counts[iv] = counts.get(iv, 0) + k
        return cls(tuple(sorted((iv, k) for iv, k in counts.items() if k)))

    @property
    def end(self) -> int:
        return max((iv.end for iv, _ in self.intervals), default=0)

    @property
    def count(self) -> int:
        return sum(k for _, k in self.intervals)

    @property
    def length(self) -> int:
        return sum(len(iv) * k for iv, k in self.intervals)

    def profile(self, horizon: int | None = None) -> list[int]:
        size = max(self.end, horizon or 0)
        prof = [0] * size
        for iv, k in self.intervals:
            for t in iv.slots:
                prof[t] += k
        return prof

    def with_added(self, iv: Interval, copies: int = 1) -> SupplySet:
        return SupplySet.of([*self.intervals, (iv, copies)])

    def without(self, iv: Interval) -> SupplySet:
        out, removed = [], False
        for jv, k in self.intervals:
            if jv == iv and not removed:
                k, removed = k - 1, True
            out.append((jv, k))
        if not removed:
            raise KeyError(iv)
        return SupplySet.of(out)


# --- single machine ------------------------------------------------------

def edf_schedule(
    active_slots: Iterable[int], jobs: Sequence[Job]
) -> tuple[dict[int, int], dict[tuple[int, int], int]]:
    """Earliest deadline first over the given slots (ties: smallest id).

    Returns processed volume per job and the unit assignment ``(job, slot) -> 1``.
    """
    pending = sorted(jobs, key=lambda j: (j.release, j.id))
    remaining = {j.id: j.processing for j in jobs}
    done = {j.id: 0 for j in jobs}
    assignment: dict[tuple[int, int], int] = {}
    heap: list[tuple[int, int]] = []
    k = 0
    for t in sorted(set(active_slots)):
        while k < len(pending) and pending[k].release <= t:
            heapq.heappush(heap, (pending[k].deadline, pending[k].id))
            k += 1
        while heap and (heap[0][0] <= t or remaining[heap[0][1]] == 0):
            heapq.heappop(heap)
        if not heap:
            continue
        _, i = heap[0]
        assignment[(i, t)] = 1
        done[i] += 1
        remaining[i] -= 1
    return done, assignment


# --- deficiency ----------------------------------------------------------

def _overlap(job: Job, intervals: Iterable[Interval]) -> int:
    return sum(max(0, min(job.deadline, iv.end) - max(job.release, iv.start)) for iv in intervals)


def forced_volume(job: Job, intervals: Sequence[Interval]) -> int:
    """Volume of ``job`` that must run inside the disjoint ``intervals``."""
    slack = (job.deadline - job.release) - _overlap(job, intervals)
    return max(0, job.processing - slack)


def _as_profile(supply: SupplySet | Sequence[int]) -> Sequence[int]:
    return supply.profile() if isinstance(supply, SupplySet) else supply


def deficiency(
    jobs: Sequence[Job], intervals: Sequence[Interval], supply: SupplySet | Sequence[int]
) -> int:
    """Forced volume inside ``intervals`` minus the capacity they offer (floored at 0)."""
    prof = _as_profile(supply)
    demand = sum(forced_volume(j, intervals) for j in jobs)
    capacity = sum(prof[t] for iv in intervals for t in iv.slots if t < len(prof))
    return max(0, demand - capacity)


@dataclass(frozen=True)
class DeficiencyCertificate:
    """Disjoint intervals whose forced volume exceeds their capacity by ``value``."""

    intervals: tuple[Interval, ...]
    value: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "intervals": [{"start": iv.start, "end": iv.end} for iv in self.intervals],
        }


@dataclass(frozen=True)
class FlowCheck:
    """Outcome of :func:`dsi_check`.  ``certificate`` is None iff feasible."""

    max_flow: int
    demand: int
    assignment: dict[tuple[int, int], int]
    certificate: DeficiencyCertificate | None

    @property
    def feasible(self) -> bool:
        return self.certificate is None

    @property
    def max_deficiency(self) -> int:
        return self.demand - self.max_flow


def dsi_check(supply: SupplySet | Sequence[int], jobs: Sequence[Job]) -> FlowCheck:
    """Decide whether ``jobs`` fit into the capacity profile ``supply``."""
    prof = list(_as_profile(supply))
    horizon = max([len(prof)] + [j.deadline for j in jobs])
    prof += [0] * (horizon - len(prof))
    demand = sum(j.processing for j in jobs)
    if demand == 0:
        return FlowCheck(0, 0, {}, None)

    g = nx.DiGraph()
    src, sink = ("s",), ("k",)
    used = sorted({t for j in jobs for t in j.window})
    for j in jobs:
        g.add_edge(src, ("j", j.id), capacity=j.processing)
        for t in j.window:
            g.add_edge(("j", j.id), ("t", t), capacity=1)
    for t in used:
        g.add_edge(("t", t), sink, capacity=prof[t])
    value, flow = nx.maximum_flow(g, src, sink)

    assignment = {
        (j.id, t): 1 for j in jobs for t in j.window if flow[("j", j.id)][("t", t)] > 0
    }
    if value == demand:
        return FlowCheck(value, demand, assignment, None)

    # Residual reachability from the source gives the minimal minimum cut.
    seen = {src}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v, attrs in g.succ[u].items():
            if v not in seen and flow[u][v] < attrs["capacity"]:
                seen.add(v)
                queue.append(v)
        for v in g.pred[u]:
            if v not in seen and flow[v][u] > 0:
                seen.add(v)
                queue.append(v)
    slots = sorted(node[1] for node in seen if node[0] == "t")
    cert = _shrink(jobs, runs(slots), prof, demand - value)
    return FlowCheck(value, demand, assignment, cert)


def _shrink(
    jobs: Sequence[Job], intervals: list[Interval], prof: Sequence[int], value: int
) -> DeficiencyCertificate:
    kept = list(intervals)
    if deficiency(jobs, kept, prof) != value:
        raise InvariantError(f"cut slots have deficiency {deficiency(jobs, kept, prof)} != {value}")
    k = 0
    while k < len(kept):
        trial = kept[:k] + kept[k + 1:]
        if deficiency(jobs, trial, prof) == value:
            kept = trial
        else:
            k += 1
    return DeficiencyCertificate(tuple(kept), value)


def max_deficiency(supply: SupplySet | Sequence[int], jobs: Sequence[Job]) -> int:
    return dsi_check(supply, jobs).max_deficiency


# --- extension -----------------------------------------------------------

def extension_candidates(
    supply: SupplySet, certificate: DeficiencyCertificate, machines: int
) -> list[tuple[Interval, Interval]]:
    """``(old, new)`` pairs growing one supply interval by a certificate slot.

    Ordered by the old interval (start, end), leftward growth before rightward.
    """
    inside = {t for iv in certificate.intervals for t in iv.slots}
    prof = supply.profile(max([supply.end] + [iv.end for iv in certificate.intervals]))
    out = []
    for iv, _ in supply.intervals:
        for t, new in ((iv.start - 1, Interval(iv.start - 1, iv.end)), (iv.end, Interval(iv.start, iv.end + 1))):
            if t in inside and prof[t] < machines:
                out.append((iv, new))
    return out


def ext_alg_step(
    supply: SupplySet,
    jobs: Sequence[Job],
    certificate: DeficiencyCertificate,
    machines: int,
) -> tuple[SupplySet, FlowCheck]:
    """Grow the first eligible supply interval by one slot into the certificate.

    The grown slot lies in every maximum-deficiency slot set, so the maximum
    deficiency drops by exactly one; this is rechecked and enforced.
    """
    if certificate.value <= 0:
        raise ValueError("certificate has no deficiency to remove")
    candidates = extension_candidates(supply, certificate, machines)
    if not candidates:
        raise NoExtensiblePair("no supply interval borders the deficiency certificate")
    old, new = candidates[0]
    grown = supply.without(old).with_added(new)
    check = dsi_check(grown, jobs)
    if check.max_deficiency != certificate.value - 1:
        raise InvariantError(
            f"extending {old} to {new} moved deficiency {certificate.value} -> {check.max_deficiency}"
        )
    return grown, check
