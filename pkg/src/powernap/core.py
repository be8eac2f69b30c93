"""Domain types, cost accounting, serialization and schedule validation.

Time is integral.  Slot ``t`` is the half-open unit interval ``[t, t+1)`` and an
interval ``[s, e)`` covers slots ``s .. e-1``.  Every active interval costs its
length plus one wake-up of cost ``q``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Mapping, Sequence

Number = int | Fraction


class InstanceError(ValueError):
    """Malformed or trivially infeasible instance document."""


class InfeasibleInstance(Exception):
    """No schedule processes every job inside its window."""


class TooLarge(Exception):
    """Input exceeds what an exhaustive oracle is willing to enumerate."""


class InvariantError(AssertionError):
    """A proven inequality failed at runtime: an implementation bug, never an input problem."""


@dataclass(frozen=True, order=True)
class Job:
    """A preemptive job: ``processing`` unit slots somewhere in ``[release, deadline)``.

    Invariants: 0 <= release < deadline, 1 <= processing <= deadline - release.
    """

    id: int
    release: int
    deadline: int
    processing: int

    def __post_init__(self) -> None:
        if self.release < 0:
            raise InstanceError(f"job {self.id}: negative release {self.release}")
        if self.deadline <= self.release:
            raise InstanceError(f"job {self.id}: deadline {self.deadline} <= release {self.release}")
        if not 1 <= self.processing <= self.deadline - self.release:
            raise InstanceError(
                f"job {self.id}: p {self.processing} outside [1, {self.deadline - self.release}]"
            )

    @property
    def window(self) -> range:
        return range(self.release, self.deadline)


@dataclass(frozen=True)
class Instance:
    """Jobs plus machine count ``m`` and wake-up cost ``q``.

    ``horizon`` defaults to the largest deadline.  Job ids are 0..n-1 and
    ``jobs[i].id == i``.
    """

    jobs: tuple[Job, ...]
    machines: int = 1
    wake_cost: int = 1
    horizon: int = -1

    def __post_init__(self) -> None:
        jobs = tuple(sorted(self.jobs, key=lambda j: j.id))
        if [j.id for j in jobs] != list(range(len(jobs))):
            raise InstanceError("job ids must be exactly 0..n-1")
        if self.machines < 1:
            raise InstanceError(f"m must be >= 1, got {self.machines}")
        if self.wake_cost < 1:
            raise InstanceError(f"q must be >= 1, got {self.wake_cost}")
        latest = max((j.deadline for j in jobs), default=0)
        horizon = latest if self.horizon < 0 else self.horizon
        if horizon < latest:
            raise InstanceError(f"horizon {horizon} before last deadline {latest}")
        object.__setattr__(self, "jobs", jobs)
        object.__setattr__(self, "horizon", horizon)

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def total_processing(self) -> int:
        return sum(j.processing for j in self.jobs)

    def event_points(self) -> list[int]:
        return sorted({j.release for j in self.jobs} | {j.deadline for j in self.jobs})

    def with_machines(self, machines: int) -> Instance:
        return Instance(self.jobs, machines, self.wake_cost, self.horizon)


def make_instance(
    triples: Iterable[tuple[int, int, int]], machines: int = 1, wake_cost: int = 1
) -> Instance:
    """Build an instance from ``(r, d, p)`` triples, numbering jobs in order."""
    jobs = tuple(Job(i, r, d, p) for i, (r, d, p) in enumerate(triples))
    return Instance(jobs, machines, wake_cost)


@dataclass(frozen=True, order=True)
class Interval:
    """Half-open ``[start, end)`` with ``start < end``."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError(f"empty interval [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    @property
    def slots(self) -> range:
        return range(self.start, self.end)

    def __contains__(self, slot: object) -> bool:
        return isinstance(slot, int) and self.start <= slot < self.end

    def touches(self, a: int, b: int) -> bool:
        """Closed-interval overlap with ``[a, b]``: shares a point, adjacency included."""
        return self.start <= b and self.end >= a


@dataclass(frozen=True)
class CostBreakdown:
    active: Number
    wakeups: Number
    wake_cost: Number

    @property
    def total(self) -> Number:
        return self.active + self.wake_cost * self.wakeups


def runs(slots: Iterable[int]) -> list[Interval]:
    """Maximal runs of consecutive slots, as merged intervals."""
    out: list[Interval] = []
    start = prev = None
    for t in sorted(set(slots)):
        if prev is not None and t == prev + 1:
            prev = t
            continue
        if start is not None:
            out.append(Interval(start, prev + 1))
        start = prev = t
    if start is not None:
        out.append(Interval(start, prev + 1))
    return out


def merge_intervals(intervals: Iterable[Interval]) -> list[Interval]:
    """Union of intervals with adjacent pieces merged."""
    out: list[Interval] = []
    for iv in sorted(intervals):
        if out and iv.start <= out[-1].end:
            if iv.end > out[-1].end:
                out[-1] = Interval(out[-1].start, iv.end)
        else:
            out.append(iv)
    return out


def schedule_cost(machines: Sequence[Sequence[Interval]], q: Number) -> CostBreakdown:
    """Total active length plus ``q`` per interval, summed over machines."""
    active = 0
    count = 0
    for k, ivs in enumerate(machines):
        ordered = sorted(ivs)
        for a, b in zip(ordered, ordered[1:]):
            if b.start < a.end:
                raise ValueError(f"machine {k}: {a} overlaps {b}")
            if b.start == a.end:
                raise ValueError(f"machine {k}: {a} and {b} are adjacent and must be merged")
        active += sum(len(iv) for iv in ordered)
        count += len(ordered)
    return CostBreakdown(active, count, q)


def wakeups_from_profile(profile: Sequence[int]) -> int:
    """Fewest intervals realizing an integer profile: sum of positive steps."""
    prev = 0
    total = 0
    for level in profile:
        total += max(0, level - prev)
        prev = level
    return total


def laminar_decomposition(profile: Sequence[int]) -> list[list[Interval]]:
    """Machine ``k`` is active at ``t`` iff ``profile[t] >= k + 1``."""
    height = max(profile, default=0)
    return [runs(t for t, level in enumerate(profile) if level > k) for k in range(height)]


def profile_of(machines: Iterable[Iterable[Interval]], horizon: int) -> list[int]:
    prof = [0] * horizon
    for ivs in machines:
        for iv in ivs:
            for t in iv.slots:
                prof[t] += 1
    return prof


def profile_cost(profile: Sequence[int], q: Number) -> CostBreakdown:
    return CostBreakdown(sum(profile), wakeups_from_profile(profile), q)


Assignment = Mapping[tuple[int, int], Number]


@dataclass(frozen=True)
class Violation:
    """First condition a schedule breaks, with where it happens."""

    kind: str
    message: str
    job: int | None = None
    slot: int | None = None

    def __str__(self) -> str:
        return self.message


def validate_schedule(
    instance: Instance,
    machines: Sequence[Sequence[Interval]],
    assignment: Assignment,
) -> Violation | None:
    """Return None when the schedule is complete and consistent."""
    if len(machines) > instance.machines:
        return Violation("machines", f"{len(machines)} machines used, only {instance.machines} available")
    horizon = max([instance.horizon] + [iv.end for ivs in machines for iv in ivs])
    for k, ivs in enumerate(machines):
        ordered = sorted(ivs)
        for a, b in zip(ordered, ordered[1:]):
            if b.start < a.end:
                return Violation("overlap", f"machine {k}: {a} overlaps {b}", slot=b.start)
        if ordered and ordered[0].start < 0:
            return Violation("range", f"machine {k}: interval before time 0", slot=ordered[0].start)
    capacity = profile_of(machines, horizon)
    jobs = {j.id: j for j in instance.jobs}
    volume: dict[int, Number] = {j: 0 for j in jobs}
    load: dict[int, Number] = {}
    for (i, t), amount in sorted(assignment.items()):
        if i not in jobs:
            return Violation("job", f"unknown job {i}", job=i, slot=t)
        if amount < 0 or amount > 1:
            return Violation("amount", f"job {i} gets {amount} at t={t}; must lie in [0,1]", job=i, slot=t)
        if amount and t not in jobs[i].window:
            return Violation("window", f"job {i} runs at t={t} outside its window", job=i, slot=t)
        volume[i] += amount
        load[t] = load.get(t, 0) + amount
    for t in sorted(load):
        cap = capacity[t] if 0 <= t < horizon else 0
        if load[t] > cap:
            return Violation("capacity", f"capacity exceeded at t={t}: load {load[t]} > {cap}", slot=t)
    for i, job in sorted(jobs.items()):
        if volume[i] != job.processing:
            rel = "<" if volume[i] < job.processing else ">"
            return Violation("volume", f"job {i}: volume {volume[i]} {rel} p {job.processing}", job=i)
    return None


@dataclass(frozen=True)
class Schedule:
    """Per-machine active intervals, a job assignment, and the resulting cost.

    ``details`` carries algorithm-specific numbers for reports (LP value,
    stage costs, certificates).
    """

    algorithm: str
    machines: tuple[tuple[Interval, ...], ...]
    assignment: Mapping[tuple[int, int], Number] | None
    cost: CostBreakdown
    details: Mapping[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def build(
        cls,
        algorithm: str,
        machines: Iterable[Iterable[Interval]],
        assignment: Mapping[tuple[int, int], Number] | None,
        q: Number,
        details: Mapping[str, Any] | None = None,
    ) -> Schedule:
        ms = tuple(tuple(sorted(ivs)) for ivs in machines)
        ms = tuple(m for m in ms if m)
        return cls(algorithm, ms, assignment, schedule_cost(ms, q), dict(details or {}))

    @classmethod
    def from_profile(
        cls,
        algorithm: str,
        profile: Sequence[int],
        assignment: Mapping[tuple[int, int], Number] | None,
        q: Number,
        details: Mapping[str, Any] | None = None,
    ) -> Schedule:
        return cls.build(algorithm, laminar_decomposition(profile), assignment, q, details)

    def profile(self, horizon: int) -> list[int]:
        return profile_of(self.machines, horizon)

    def violation(self, instance: Instance) -> Violation | None:
        if self.assignment is None:
            return Violation("assignment", "schedule carries no assignment")
        return validate_schedule(instance, self.machines, self.assignment)


# --- serialization -------------------------------------------------------

def _int_field(doc: Mapping[str, Any], key: str, where: str) -> int:
    if key not in doc:
        raise InstanceError(f"{where}: missing field {key!r}")
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(f"{where}: field {key!r} must be an integer, got {value!r}")
    return value


def instance_from_dict(doc: Any) -> Instance:
    """Validate a decoded document and normalize so the earliest release is 0."""
    if not isinstance(doc, Mapping):
        raise InstanceError("instance document must be an object")
    q = _int_field(doc, "q", "instance")
    m = _int_field(doc, "m", "instance")
    raw = doc.get("jobs")
    if not isinstance(raw, list):
        raise InstanceError("instance: 'jobs' must be a list")
    parsed = []
    for k, item in enumerate(raw):
        if not isinstance(item, Mapping):
            raise InstanceError(f"job #{k} must be an object")
        jid = _int_field(item, "id", f"job #{k}") if "id" in item else k
        r, d, p = (_int_field(item, f, f"job #{k}") for f in ("r", "d", "p"))
        if d <= r or not 1 <= p <= d - r:
            raise InstanceError(f"job #{k}: need r < d and 1 <= p <= d - r, got r={r} d={d} p={p}")
        parsed.append((r, d, p, jid))
    shift = min((r for r, _, _, _ in parsed), default=0)
    jobs = tuple(Job(jid, r - shift, d - shift, p) for r, d, p, jid in parsed)
    return Instance(jobs, m, q)


def load_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"not valid JSON: {exc}") from exc
    return instance_from_dict(doc)


def instance_to_dict(instance: Instance) -> dict[str, Any]:
    return {
        "q": instance.wake_cost,
        "m": instance.machines,
        "jobs": [
            {"id": j.id, "r": j.release, "d": j.deadline, "p": j.processing} for j in instance.jobs
        ],
    }


def dump_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), sort_keys=True) + "\n"


def fraction_text(value: Number) -> str:
    v = Fraction(value)
    return f"{v.numerator}/{v.denominator}"


def parse_fraction(text: str | int) -> Fraction:
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    return Fraction(text)


def _num_out(value: Number) -> int | str:
    v = Fraction(value)
    return v.numerator if v.denominator == 1 else fraction_text(v)


def schedule_to_dict(schedule: Schedule) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "algorithm": schedule.algorithm,
        "cost": {
            "active": _num_out(schedule.cost.active),
            "wakeups": _num_out(schedule.cost.wakeups),
            "total": _num_out(schedule.cost.total),
        },
        "machines": [[{"start": iv.start, "end": iv.end} for iv in ivs] for ivs in schedule.machines],
        "assignment": None
        if schedule.assignment is None
        else [
            {"job": i, "slot": t, "amount": fraction_text(a)}
            for (i, t), a in sorted(schedule.assignment.items())
            if a
        ],
    }
    doc.update(schedule.details)
    return doc


def schedule_from_dict(doc: Mapping[str, Any], q: Number) -> Schedule:
    """Inverse of :func:`schedule_to_dict` for the core fields; extras land in ``details``."""
    machines = [[Interval(iv["start"], iv["end"]) for iv in ivs] for ivs in doc["machines"]]
    raw = doc.get("assignment")
    assignment = None
    if raw is not None:
        assignment = {(e["job"], e["slot"]): parse_fraction(e["amount"]) for e in raw}
    core_keys = {"algorithm", "cost", "machines", "assignment"}
    details = {k: v for k, v in doc.items() if k not in core_keys}
    return Schedule.build(doc["algorithm"], machines, assignment, q, details)
