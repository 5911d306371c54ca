"""Brute-force grid dynamic programs used to verify the closed form.

The inner supremum over all mean-constrained demand laws is computed as the
upper concave envelope of the integrand over a finite set of demand points,
evaluated at the conditional mean.  The controller minimizes over a finite
set of order-up-to levels.  On the breakpoint-closure grid both restrictions
are harmless and the grid value equals the exact optimum.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .closed_form import thresholds_for
from .model import DiscreteMeasure, ProblemInstance, stage_cost

_ZERO = Fraction(0)

MAX_CLOSURE_HORIZON = 12
MAX_CLOSURE_POINTS = 20_000


class GuardError(RuntimeError):
    """Raised when an enumeration or grid would exceed its size guard."""


@dataclass(frozen=True)
class Grid:
    demand_points: tuple[Fraction, ...]
    order_points: tuple[Fraction, ...]

    @classmethod
    def make(cls, U: Fraction, demand_points, order_points) -> "Grid":
        U = Fraction(U)
        demand = {Fraction(p) for p in demand_points} | {_ZERO, U}
        order = {Fraction(p) for p in order_points}
        for p in demand | order:
            if not 0 <= p <= U:
                raise ValueError(f"grid point {p} outside [0, {U}]")
        if not order:
            raise ValueError("order grid is empty")
        return cls(tuple(sorted(demand)), tuple(sorted(order)))


@dataclass(frozen=True)
class EnvelopeResult:
    value: Fraction
    left: tuple[Fraction, Fraction]
    right: tuple[Fraction, Fraction]
    weights: tuple[Fraction, Fraction]

    @property
    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure([(self.left[0], self.weights[0]), (self.right[0], self.weights[1])])


def _cross(o, a, p) -> Fraction:
    return (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0])


def upper_hull(points: Sequence[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    """Vertices of the least concave majorant of finitely many points, left to right.

    Collinear vertices are dropped.  Points sharing an abscissa keep the
    largest ordinate.
    """
    best: dict[Fraction, Fraction] = {}
    for q, f in points:
        if q not in best or f > best[q]:
            best[q] = f
    hull: list[tuple[Fraction, Fraction]] = []
    for p in sorted(best.items()):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) >= 0:
            hull.pop()
        hull.append(p)
    return hull


def evaluate_hull(hull: Sequence[tuple[Fraction, Fraction]], mean: Fraction) -> EnvelopeResult:
    if not hull or not hull[0][0] <= mean <= hull[-1][0]:
        raise ValueError(f"mean {mean} outside the support range of the points")
    i = bisect_left(hull, (mean,))
    if i < len(hull) and hull[i][0] == mean:
        v = hull[i]
        return EnvelopeResult(v[1], v, v, (Fraction(1), _ZERO))
    left, right = hull[i - 1], hull[i]
    w_right = (mean - left[0]) / (right[0] - left[0])
    w_left = 1 - w_right
    return EnvelopeResult(w_left * left[1] + w_right * right[1], left, right, (w_left, w_right))


def upper_concave_envelope(points: Sequence[tuple[Fraction, Fraction]], mean: Fraction) -> EnvelopeResult:
    """Largest expectation of f over laws supported on the given points with the given mean."""
    return evaluate_hull(upper_hull(points), Fraction(mean))


# ---------------------------------------------------------------------------
# martingale DP


@dataclass
class DPTables:
    """ghat[s][(z, m)] and the suffix minima that give vhat[s](y, m)."""

    order_points: tuple[Fraction, ...]
    ghat: dict[int, dict[tuple[Fraction, Fraction], Fraction]] = field(default_factory=dict)
    suffix_min: dict[int, dict[Fraction, list[Fraction]]] = field(default_factory=dict)

    def vhat(self, s: int, y: Fraction, m: Fraction) -> Fraction:
        """min over grid levels z >= y of ghat[s](z, m)."""
        i = bisect_left(self.order_points, y)
        row = self.suffix_min[s][m]
        if i >= len(row):
            raise ValueError(f"no order level >= {y} on the grid")
        return row[i]

    def set_stage(self, s: int, values: dict[tuple[Fraction, Fraction], Fraction], means) -> None:
        self.ghat[s] = values
        rows = {}
        for m in means:
            acc = [_ZERO] * len(self.order_points)
            cur = None
            for i in range(len(self.order_points) - 1, -1, -1):
                v = values[(self.order_points[i], m)]
                cur = v if cur is None or v < cur else cur
                acc[i] = cur
            rows[m] = acc
        self.suffix_min[s] = rows


def _solve(inst: ProblemInstance, grid: Grid, continuation: Callable, means: list[Fraction]) -> DPTables:
    tables = DPTables(grid.order_points)
    b = inst.b
    D = grid.demand_points
    for s in range(1, inst.T + 1):
        stage: dict[tuple[Fraction, Fraction], Fraction] = {}
        for z in grid.order_points:
            pts = []
            for q in D:
                f = stage_cost(z, q, b)
                if s > 1:
                    f += continuation(tables, s - 1, z - q, q)
                pts.append((q, f))
            hull = upper_hull(pts)
            for m in means:
                stage[(z, m)] = evaluate_hull(hull, m).value
        tables.set_stage(s, stage, means)
    return tables


def solve_martingale_dp(inst: ProblemInstance, grid: Grid) -> tuple[Fraction, DPTables]:
    """Grid value of the martingale-demand problem at (x0, mu), with its tables.

    State is (periods left, order level, conditional mean = previous demand).
    Levels below zero impose no constraint because every grid level is >= 0.
    """
    means = sorted(set(grid.demand_points) | {inst.mu})
    tables = _solve(inst, grid, lambda t, s, y, q: t.vhat(s, y, q), means)
    return tables.vhat(inst.T, inst.x0, inst.mu), tables


def solve_independent_dp(inst: ProblemInstance, grid: Grid) -> Fraction:
    """Grid value of the independent-demand problem: every period has mean mu."""
    mu = inst.mu
    tables = _solve(inst, grid, lambda t, s, y, q: t.vhat(s, y, mu), [mu])
    return tables.vhat(inst.T, inst.x0, mu)


# ---------------------------------------------------------------------------
# grids


def threshold_demand_points(inst: ProblemInstance) -> list[Fraction]:
    th = thresholds_for(inst)
    pts = {_ZERO, inst.U}
    for s in range(1, inst.T + 1):
        pts.update(a for a in th.A_row(s) if a <= inst.U)
    return sorted(pts)


def breakpoint_closure_grid(inst: ProblemInstance) -> Grid:
    """Grid on which the grid DP reproduces the exact optimum.

    Demand points are 0, U and every threshold A[s][j] (s <= T) within
    [0, U]; these carry every worst-case law.  Order points are 0, U, the
    B[s][j] and every level the optimal policy reaches from x0 when demand
    may take any grid value.
    """
    if inst.T > MAX_CLOSURE_HORIZON:
        raise GuardError(f"closure grid guarded at T <= {MAX_CLOSURE_HORIZON}, got T={inst.T}")
    th = thresholds_for(inst)
    demand = threshold_demand_points(inst)
    order = {_ZERO, inst.U}
    for s in range(1, inst.T + 1):
        order.update(th.B_row(s)[1:])
    level = {max(inst.x0, th.beta(inst.T, inst.mu))}
    order |= level
    for s in range(inst.T - 1, 0, -1):
        level = {max(x - d, th.beta(s, d)) for x in level for d in demand}
        order |= level
        if len(order) > MAX_CLOSURE_POINTS:
            raise GuardError(f"closure grid exceeds {MAX_CLOSURE_POINTS} order points")
    return Grid.make(inst.U, demand, order)


def uniform_grid(inst: ProblemInstance, n: int) -> Grid:
    """n + 1 equispaced points on [0, U] for both demand and order levels (plus x0)."""
    if n < 1:
        raise ValueError("uniform grid needs n >= 1")
    pts = [inst.U * Fraction(k, n) for k in range(n + 1)]
    return Grid.make(inst.U, pts, pts + [inst.x0])
