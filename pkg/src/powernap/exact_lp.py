"""Exact rational linear programming.

Rows are ``lo <= a.x <= hi`` and columns ``lo <= x_j <= hi``.  Internally each
row gets a logical variable ``s_i = a_i.x`` carrying the row bounds, so the
equality system is ``[A | -I] z = 0`` and every variable is simply bounded.

The float solver HiGHS proposes a basis; the basis is then re-solved in exact
rational arithmetic (python-flint) and, if it is not exactly optimal, a
bounded-variable primal simplex with Bland's rule finishes the job.  When
the proposed basis is not even exactly primal feasible, the exact simplex
starts from scratch with an artificial phase one.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import flint
import highspy
import numpy as np

Rational = int | Fraction


class LPError(Exception):
    """The LP could not be solved."""


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


@dataclass(frozen=True)
class LPSolution:
    value: Fraction
    values: tuple[Fraction, ...]
    certified_by: str
    pivots: int


def _q(v: Rational) -> flint.fmpq:
    v = Fraction(v)
    return flint.fmpq(v.numerator, v.denominator)


def _frac(v: flint.fmpq) -> Fraction:
    return Fraction(int(v.p), int(v.q))


class LinearProgram:
    """A small LP with exact rational data."""

    def __init__(self) -> None:
        self.cost: list[Fraction] = []
        self.lower: list[Fraction | None] = []
        self.upper: list[Fraction | None] = []
        self.rows: list[tuple[dict[int, Fraction], Fraction | None, Fraction | None]] = []

    @property
    def num_vars(self) -> int:
        return len(self.cost)

    def add_var(self, cost: Rational = 0, lower: Rational | None = 0, upper: Rational | None = None) -> int:
        self.cost.append(Fraction(cost))
        self.lower.append(None if lower is None else Fraction(lower))
        self.upper.append(None if upper is None else Fraction(upper))
        return len(self.cost) - 1

    def add_row(
        self, coeffs: Mapping[int, Rational], lower: Rational | None = None, upper: Rational | None = None
    ) -> int:
        row = {j: Fraction(a) for j, a in coeffs.items() if a}
        self.rows.append((row, None if lower is None else Fraction(lower),
                          None if upper is None else Fraction(upper)))
        return len(self.rows) - 1

    def set_objective(self, coeffs: Mapping[int, Rational]) -> None:
        self.cost = [Fraction(coeffs.get(j, 0)) for j in range(self.num_vars)]

    def copy(self) -> LinearProgram:
        lp = LinearProgram()
        lp.cost, lp.lower, lp.upper = list(self.cost), list(self.lower), list(self.upper)
        lp.rows = [(dict(r), lo, hi) for r, lo, hi in self.rows]
        return lp

    def objective(self, values) -> Fraction:
        return sum((c * v for c, v in zip(self.cost, values) if c), Fraction(0))

    def check(self, values) -> str | None:
        """Name the first violated bound or row, exactly."""
        for j, v in enumerate(values):
            if self.lower[j] is not None and v < self.lower[j]:
                return f"x{j} = {v} below {self.lower[j]}"
            if self.upper[j] is not None and v > self.upper[j]:
                return f"x{j} = {v} above {self.upper[j]}"
        for i, (row, lo, hi) in enumerate(self.rows):
            act = sum((a * values[j] for j, a in row.items()), Fraction(0))
            if (lo is not None and act < lo) or (hi is not None and act > hi):
                return f"row {i}: activity {act} outside [{lo}, {hi}]"
        return None

    def solve(self, maximize: bool = False, method: str = "auto") -> LPSolution:
        """Optimal solution with exact values; ``method="exact"`` skips HiGHS."""
        sign = -1 if maximize else 1
        solver = _Exact(self, sign)
        if method == "auto":
            basis = _highs_basis(self, sign)
            if basis is not None:
                result = solver.from_basis(*basis)
                if result is not None:
                    return result
        elif method != "exact":
            raise ValueError(f"unknown method {method!r}")
        return solver.cold()


def _highs_basis(lp: LinearProgram, sign: int):
    inf = highspy.kHighsInf
    n, rows = lp.num_vars, lp.rows
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    fl = lambda v, d: d if v is None else float(v)
    h.addCols(
        n,
        np.array([sign * float(c) for c in lp.cost]),
        np.array([fl(v, -inf) for v in lp.lower]),
        np.array([fl(v, inf) for v in lp.upper]),
        0, np.array([], dtype=np.int32), np.array([], dtype=np.int32), np.array([]),
    )
    if rows:
        starts, idx, vals = [], [], []
        for row, _, _ in rows:
            starts.append(len(idx))
            for j, a in sorted(row.items()):
                idx.append(j)
                vals.append(float(a))
        h.addRows(
            len(rows),
            np.array([fl(lo, -inf) for _, lo, _ in rows]),
            np.array([fl(hi, inf) for _, _, hi in rows]),
            len(idx),
            np.array(starts, dtype=np.int32),
            np.array(idx, dtype=np.int32),
            np.array(vals, dtype=np.float64),
        )
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kInfeasible:
        raise LPInfeasible("LP is infeasible")
    if status != highspy.HighsModelStatus.kOptimal:
        return None
    basis = h.getBasis()
    bs = highspy.HighsBasisStatus
    statuses = list(basis.col_status) + list(basis.row_status)
    basic = [j for j, s in enumerate(statuses) if s == bs.kBasic]
    nonbasic = {}
    for j, s in enumerate(statuses):
        if s == bs.kBasic:
            continue
        nonbasic[j] = "U" if s == bs.kUpper else "L" if s == bs.kLower else "Z"
    return basic, nonbasic


class _Exact:
    """Bounded-variable revised simplex over the rationals (minimization of sign*cost)."""

    def __init__(self, lp: LinearProgram, sign: int):
        self.lp = lp
        self.sign = sign
        n, m = lp.num_vars, len(lp.rows)
        self.n, self.m = n, m
        cols: list[list[tuple[int, flint.fmpq]]] = [[] for _ in range(n)]
        for i, (row, _, _) in enumerate(lp.rows):
            for j, a in row.items():
                cols[j].append((i, _q(a)))
        cols += [[(i, flint.fmpq(-1))] for i in range(m)]
        self.cols = cols
        self.lo = [None if v is None else _q(v) for v in lp.lower] + [
            None if lo is None else _q(lo) for _, lo, _ in lp.rows]
        self.hi = [None if v is None else _q(v) for v in lp.upper] + [
            None if hi is None else _q(hi) for _, _, hi in lp.rows]
        self.cost = [_q(sign * c) for c in lp.cost] + [flint.fmpq(0)] * m

    # -- helpers ---------------------------------------------------------
    @staticmethod
    def _value(j: int, st: str, lo, hi):
        if st == "L":
            return lo[j]
        if st == "U":
            return hi[j]
        return flint.fmpq(0)

    def _normalize_status(self, nonbasic: dict[int, str]) -> dict[int, str]:
        """Point every nonbasic variable at a finite bound when it has one."""
        out = {}
        for j, st in nonbasic.items():
            has_lo, has_hi = self.lo[j] is not None, self.hi[j] is not None
            if st == "U" and not has_hi or st == "L" and not has_lo or st == "Z":
                st = "L" if has_lo else "U" if has_hi else "Z"
            out[j] = st
        return out

    def _basis_matrix(self, basic, cols, m):
        entries = [0] * (m * m)
        for k, j in enumerate(basic):
            for i, a in cols[j]:
                entries[i * m + k] = a
        return flint.fmpq_mat(m, m, entries)

    def _primal(self, basic, status, cols, m, lo, hi):
        rhs = [flint.fmpq(0)] * m
        for j, st in status.items():
            v = self._value(j, st, lo, hi)
            if v:
                for i, a in cols[j]:
                    rhs[i] -= a * v
        B = self._basis_matrix(basic, cols, m)
        zb = B.solve(flint.fmpq_mat(m, 1, rhs)) if m else flint.fmpq_mat(0, 1, [])
        return B, [zb[k, 0] for k in range(m)]

    def _feasible(self, basic, zb, lo, hi) -> bool:
        for k, j in enumerate(basic):
            if lo[j] is not None and zb[k] < lo[j]:
                return False
            if hi[j] is not None and zb[k] > hi[j]:
                return False
        return True

    def _run(self, basic, status, cols, cost, lo, hi, m, limit=100000):
        """Primal simplex from a primal feasible basis; returns pivot count."""
        pivots = 0
        while True:
            try:
                B, zb = self._primal(basic, status, cols, m, lo, hi)
            except ZeroDivisionError as exc:
                raise LPError("singular basis") from exc
            cb = flint.fmpq_mat(m, 1, [cost[j] for j in basic])
            pi = B.transpose().solve(cb) if m else cb
            pis = [pi[k, 0] for k in range(m)]
            entering = None
            for j in sorted(status):
                st = status[j]
                if lo[j] is not None and hi[j] is not None and lo[j] == hi[j]:
                    continue
                d = cost[j] - sum((pis[i] * a for i, a in cols[j]), flint.fmpq(0))
                if (st == "L" and d < 0) or (st == "Z" and d < 0):
                    entering = (j, 1)
                elif (st == "U" and d > 0) or (st == "Z" and d > 0):
                    entering = (j, -1)
                if entering:
                    break
            if entering is None:
                return pivots
            j, sigma = entering
            col = [flint.fmpq(0)] * m
            for i, a in cols[j]:
                col[i] = a
            w = B.solve(flint.fmpq_mat(m, 1, col)) if m else None
            cur = self._value(j, status[j], lo, hi)
            theta, leave, leave_to = None, None, None
            if sigma > 0 and hi[j] is not None:
                theta = hi[j] - cur
            if sigma < 0 and lo[j] is not None:
                theta = cur - lo[j]
            flip = theta is not None
            for k in range(m):
                delta = -sigma * w[k, 0]
                var = basic[k]
                if delta < 0 and lo[var] is not None:
                    r, to = (zb[k] - lo[var]) / (-delta), "L"
                elif delta > 0 and hi[var] is not None:
                    r, to = (hi[var] - zb[k]) / delta, "U"
                else:
                    continue
                if theta is None or r < theta or (r == theta and not flip and var < basic[leave]):
                    theta, leave, leave_to, flip = r, k, to, False
            if theta is None:
                raise LPUnbounded("objective unbounded")
            if flip:
                status[j] = "U" if sigma > 0 else "L"
            else:
                out = basic[leave]
                basic[leave] = j
                del status[j]
                status[out] = leave_to
            pivots += 1
            if pivots > limit:
                raise LPError("pivot limit reached")

    def _finish(self, basic, status, how, pivots) -> LPSolution:
        _, zb = self._primal(basic, status, self.cols, self.m, self.lo, self.hi)
        z = [flint.fmpq(0)] * (self.n + self.m)
        for j, st in status.items():
            z[j] = self._value(j, st, self.lo, self.hi)
        for k, j in enumerate(basic):
            z[j] = zb[k]
        values = tuple(_frac(v) for v in z[: self.n])
        problem = self.lp.check(values)
        if problem:
            raise LPError(f"exact solution violates the LP: {problem}")
        return LPSolution(self.lp.objective(values), values, how, pivots)

    # -- entry points ----------------------------------------------------
    def from_basis(self, basic, nonbasic) -> LPSolution | None:
        if len(basic) != self.m:
            return None
        status = self._normalize_status(nonbasic)
        try:
            _, zb = self._primal(basic, status, self.cols, self.m, self.lo, self.hi)
        except ZeroDivisionError:
            return None
        if not self._feasible(basic, zb, self.lo, self.hi):
            return None
        basic = list(basic)
        pivots = self._run(basic, status, self.cols, self.cost, self.lo, self.hi, self.m)
        return self._finish(basic, status, "highs-basis" if pivots == 0 else "exact-simplex", pivots)

    def cold(self) -> LPSolution:
        """Phase one with one artificial per row violated by the starting point."""
        n, m = self.n, self.m
        cols = [list(c) for c in self.cols]
        lo, hi = list(self.lo), list(self.hi)
        status = {}
        for j in range(n):
            status[j] = "L" if lo[j] is not None else ("U" if hi[j] is not None else "Z")
        act = [flint.fmpq(0)] * m
        for j in range(n):
            v = self._value(j, status[j], lo, hi)
            if v:
                for i, a in cols[j]:
                    act[i] += a * v
        basic = []
        phase1 = [flint.fmpq(0)] * (n + m)
        for i in range(m):
            s = n + i
            if (lo[s] is None or act[i] >= lo[s]) and (hi[s] is None or act[i] <= hi[s]):
                basic.append(s)
                continue
            target = lo[s] if lo[s] is not None and act[i] < lo[s] else hi[s]
            status[s] = "L" if target == lo[s] else "U"
            # a.x - s + sign * art = 0 with art = |target - act| >= 0
            sign = 1 if target > act[i] else -1
            cols.append([(i, flint.fmpq(sign))])
            lo.append(flint.fmpq(0))
            hi.append(None)
            phase1.append(flint.fmpq(1))
            basic.append(len(cols) - 1)
        pivots = self._run(basic, status, cols, phase1, lo, hi, m)
        _, zb = self._primal(basic, status, cols, m, lo, hi)
        infeas = sum((zb[k] for k, j in enumerate(basic) if j >= n + m), flint.fmpq(0))
        if infeas > 0:
            raise LPInfeasible("LP is infeasible")
        for j in range(n + m, len(cols)):
            hi[j] = flint.fmpq(0)
        cost = self.cost + [flint.fmpq(0)] * (len(cols) - n - m)
        pivots += self._run(basic, status, cols, cost, lo, hi, m)
        # Artificials left in the basis sit at zero; drop their columns from the answer.
        _, zb = self._primal(basic, status, cols, m, lo, hi)
        z = [flint.fmpq(0)] * len(cols)
        for j, st in status.items():
            z[j] = lo[j] if st == "L" else hi[j] if st == "U" else flint.fmpq(0)
        for k, j in enumerate(basic):
            z[j] = zb[k]
        values = tuple(_frac(v) for v in z[:n])
        problem = self.lp.check(values)
        if problem:
            raise LPError(f"exact solution violates the LP: {problem}")
        return LPSolution(self.lp.objective(values), values, "exact-simplex", pivots)
