"""Single-machine approximation algorithms and their guarantee checks.

All four algorithms compute a cheapest skeleton (possibly with an inflated
wake-up cost) and grow it into a feasible schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .core import Instance, Number, Schedule
from .skeleton import extend_skeleton_to_feasible, min_cost_skeleton

ALPHA_BITS = 20


def _require_single(instance: Instance) -> None:
    if instance.machines != 1:
        raise ValueError(f"single-machine algorithm called with m = {instance.machines}")


def opt_plus_p(instance: Instance) -> Schedule:
    """Cheapest skeleton, extended.  Cost <= OPT + P."""
    _require_single(instance)
    return extend_skeleton_to_feasible(min_cost_skeleton(instance), instance, "opt-plus-p")


def scaled_algorithm(instance: Instance, alpha: Number) -> Schedule:
    """Skeleton priced at wake-up cost ``alpha * q``, extended.

    Cost <= OPT + 2(alpha + 1)Q + P/(alpha - 1) for any optimum with wake-up cost Q.
    """
    _require_single(instance)
    alpha = Fraction(alpha)
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    sched = extend_skeleton_to_feasible(min_cost_skeleton(instance, alpha), instance, "scaled")
    return Schedule(sched.algorithm, sched.machines, sched.assignment, sched.cost,
                    {**sched.details, "alpha": str(alpha)})


def sqrt_alpha(total: int, i: int, q: int) -> Fraction:
    """``sqrt(total / (i q))`` rounded down to a multiple of 2**-20."""
    scale = 1 << ALPHA_BITS
    return Fraction(math.isqrt(total * scale * scale // (i * q)), scale)


def near_optimal_indices(instance: Instance) -> list[int]:
    """Powers of two up to ``2^ceil(log2 n)``, continued while ``alpha_i > 1``."""
    n, total, q = instance.n, instance.total_processing, instance.wake_cost
    limit = 1 << max(0, (n - 1).bit_length()) if n else 0
    out, i = [], 1
    while i <= limit or (total and sqrt_alpha(total, i, q) > 1):
        out.append(i)
        i *= 2
    return out


def near_optimal(instance: Instance) -> Schedule:
    """Best of OPT+P and the scaled runs with alpha = sqrt(P/(iq)), alpha > 1 only."""
    _require_single(instance)
    best = opt_plus_p(instance)
    chosen: dict[str, Any] = {"index": 0}
    total, q = instance.total_processing, instance.wake_cost
    for i in near_optimal_indices(instance):
        alpha = sqrt_alpha(total, i, q)
        if alpha <= 1:
            continue
        cand = scaled_algorithm(instance, alpha)
        if cand.cost.total < best.cost.total:
            best, chosen = cand, {"index": i, "alpha": str(alpha)}
    return Schedule("near-opt", best.machines, best.assignment,
                    best.cost, {**best.details, **chosen})


def approx_35_18(instance: Instance) -> Schedule:
    """Cheaper of OPT+P and the alpha = 3 scaled run.  Cost <= 35/18 OPT."""
    _require_single(instance)
    a = opt_plus_p(instance)
    b = scaled_algorithm(instance, 3)
    best = a if a.cost.total <= b.cost.total else b
    return Schedule("a35-18", best.machines, best.assignment, best.cost,
                    {**best.details, "branch": "opt-plus-p" if best is a else "alpha=3"})


@dataclass(frozen=True)
class GuaranteeReport:
    """An algorithm's cost against its proven bound, instantiated with oracle numbers.

    ``bound`` is exact except for ``near-opt``, whose bound involves a square
    root; there the comparison is done exactly and ``bound`` is for display.
    """

    algorithm: str
    cost: Number
    opt: int
    total_processing: int
    q_min: int
    bound: Fraction | float
    satisfied: bool
    alpha: Fraction | None = None
    t: Fraction | None = None
    lp_value: Fraction | None = None

    def to_dict(self) -> dict[str, Any]:
        def num(v):
            if v is None:
                return None
            if isinstance(v, float):
                return v
            v = Fraction(v)
            return v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}"

        return {
            "algorithm": self.algorithm,
            "cost": num(self.cost),
            "OPT": self.opt,
            "P": self.total_processing,
            "Q_min": self.q_min,
            "alpha": num(self.alpha),
            "t": num(self.t),
            "lp_value": num(self.lp_value),
            "bound": num(self.bound),
            "satisfied": self.satisfied,
        }


def guarantee(
    algorithm: str,
    cost: Number,
    opt: int,
    total_processing: int,
    q_min: int,
    alpha: Number | None = None,
    lp_value: Number | None = None,
) -> GuaranteeReport:
    """Instantiate the bound proven for ``algorithm`` and compare ``cost`` to it."""
    p, big_q = total_processing, q_min
    extra: dict[str, Any] = {}
    if algorithm == "opt-plus-p":
        bound = Fraction(opt + p)
    elif algorithm == "scaled":
        a = Fraction(alpha)
        bound = opt + 2 * (a + 1) * big_q + Fraction(p) / (a - 1)
        extra["alpha"] = a
    elif algorithm == "a35-18":
        bound = Fraction(35, 18) * opt
    elif algorithm == "near-opt":
        if p == 0 or big_q == 0:
            t = None
            bound, ok = Fraction(opt), cost <= opt
        else:
            t = max(Fraction(p, big_q), Fraction(big_q, p))
            excess = Fraction(cost) - opt
            ok = excess <= 0 or excess * excess * t <= 64 * opt * opt
            bound = opt * (1 + 8 / math.sqrt(t))
        return GuaranteeReport(algorithm, cost, opt, p, big_q, bound, ok, t=t)
    elif algorithm == "six-approx":
        bound = Fraction(6 * opt)
    elif algorithm == "lp-two-approx":
        bound = 2 * Fraction(lp_value if lp_value is not None else opt)
        extra["lp_value"] = None if lp_value is None else Fraction(lp_value)
    elif algorithm in ("multi-skeleton",):
        bound = Fraction(opt)
    elif algorithm == "brute":
        bound = Fraction(opt)
    else:
        raise KeyError(f"no bound known for {algorithm!r}")
    return GuaranteeReport(algorithm, cost, opt, p, big_q, bound, cost <= bound, **extra)
