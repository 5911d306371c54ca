"""Closed-form solution of the robust newsvendor with martingale demand.

Index conventions: ``s`` is the number of periods remaining.  The threshold
rows are

    A[s][j] = U * prod_{k=j+1}^{s-1} k / (b + k)     for j in [-1, s-1]
    A[s][s] = (b + s) / s * U
    B[s][j] = j / (b + s) * A[s][j]

Interval membership follows the half-open conventions exactly: the order
index ``gamma`` uses ``(A_j, A_{j+1}]`` and the inventory index ``upsilon``
uses ``[B_j, B_{j+1})``.  All arithmetic is exact.
"""

from __future__ import annotations

import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .model import DiscreteMeasure, ProblemInstance, fmt_rational

_ZERO = Fraction(0)


class Thresholds:
    """Lazily built, memoized A/B threshold rows for fixed (U, b).

    Rows are computed on first access and cached; the cache is guarded by a
    lock so one instance can be shared between threads.
    """

    def __init__(self, U: Fraction, b: Fraction):
        self.U = Fraction(U)
        self.b = Fraction(b)
        self._rows: dict[int, tuple[tuple[Fraction, ...], tuple[Fraction, ...]]] = {}
        self._lock = threading.Lock()

    def _row(self, s: int):
        row = self._rows.get(s)
        if row is not None:
            return row
        if s < 1:
            raise ValueError(f"threshold rows start at s=1, got {s}")
        U, b = self.U, self.b
        # a[i] holds A[s][i-1], i.e. index shifted by one so j = -1 sits at 0
        a = [_ZERO] * (s + 2)
        a[s] = U  # j = s - 1
        for j in range(s - 2, -1, -1):
            a[j + 1] = a[j + 2] * (j + 1) / (b + j + 1)
        a[0] = _ZERO
        a[s + 1] = (b + s) / s * U
        bb = [Fraction(j - 1) / (b + s) * a[j] for j in range(s + 2)]
        row = (tuple(a), tuple(bb))
        with self._lock:
            self._rows.setdefault(s, row)
        return row

    def A(self, s: int, j: int) -> Fraction:
        if not -1 <= j <= s:
            raise IndexError(f"A[{s}][{j}] out of range")
        return self._row(s)[0][j + 1]

    def B(self, s: int, j: int) -> Fraction:
        if not -1 <= j <= s:
            raise IndexError(f"B[{s}][{j}] out of range")
        return self._row(s)[1][j + 1]

    def A_row(self, s: int) -> tuple[Fraction, ...]:
        """(A[s][-1], ..., A[s][s])."""
        return self._row(s)[0]

    def B_row(self, s: int) -> tuple[Fraction, ...]:
        """(B[s][-1], ..., B[s][s])."""
        return self._row(s)[1]

    def gamma(self, s: int, mu: Fraction) -> int:
        """Order index: 0 at mu = 0, else j + 1 where mu in (A[s+1][j], A[s+1][j+1]]."""
        if mu == 0:
            return 0
        # first position whose A value is >= mu; position p holds A[s+1][p-1]
        return bisect_left(self.A_row(s + 1), mu) - 1

    def upsilon(self, s: int, x: Fraction) -> int:
        """Inventory index: s at x = U, else j where x in [B[s+1][j], B[s+1][j+1])."""
        if x == self.U:
            return s
        return bisect_right(self.B_row(s + 1), x) - 2

    def beta(self, s: int, d: Fraction) -> Fraction:
        return self.B(s, self.gamma(s, d))


_CACHE: dict[tuple[Fraction, Fraction], Thresholds] = {}
_CACHE_LOCK = threading.Lock()


def thresholds_for(inst: ProblemInstance) -> Thresholds:
    key = (inst.U, inst.b)
    with _CACHE_LOCK:
        th = _CACHE.get(key)
        if th is None:
            th = _CACHE[key] = Thresholds(inst.U, inst.b)
    return th


@dataclass(frozen=True)
class ThresholdTable:
    """Eager snapshot of all rows s in [1, T]; ``A[s][j]`` indexing with j in [-1, s]."""

    horizon: int
    A: dict[int, dict[int, Fraction]]
    B: dict[int, dict[int, Fraction]]


def build_thresholds(inst: ProblemInstance) -> ThresholdTable:
    th = thresholds_for(inst)
    A: dict[int, dict[int, Fraction]] = {}
    B: dict[int, dict[int, Fraction]] = {}
    for s in range(1, inst.T + 1):
        A[s] = {j: th.A(s, j) for j in range(-1, s + 1)}
        B[s] = {j: th.B(s, j) for j in range(-1, s + 1)}
        _check_row(inst, A[s], B[s], s)
    for s in range(1, inst.T):
        for j in range(0, s - 1):
            if not A[s][j] < A[s + 1][j + 1] < A[s][j + 1]:
                raise AssertionError(f"interlacing fails at s={s}, j={j}")
    return ThresholdTable(inst.T, A, B)


def _check_row(inst, a, bb, s) -> None:
    if not (a[-1] == bb[-1] == bb[0] == 0 and a[s - 1] == bb[s] == inst.U):
        raise AssertionError(f"boundary convention fails in row {s}")
    for j in range(-1, s):
        if not a[j] < a[j + 1]:
            raise AssertionError(f"A row {s} not increasing at {j}")
    for j in range(0, s):
        if not bb[j] < bb[j + 1]:
            raise AssertionError(f"B row {s} not increasing at {j}")


# ---------------------------------------------------------------------------
# indices and thresholds as functions of the instance


def gamma_index(inst: ProblemInstance, s: int, mu: Fraction) -> int:
    return thresholds_for(inst).gamma(s, Fraction(mu))


def upsilon_index(inst: ProblemInstance, s: int, x: Fraction) -> int:
    return thresholds_for(inst).upsilon(s, Fraction(x))


def chi_mar(inst: ProblemInstance, s: int, d: Fraction) -> Fraction:
    """Optimal order-up-to level with s periods left and previous demand d."""
    return thresholds_for(inst).beta(s, Fraction(d))


# ---------------------------------------------------------------------------
# linear pieces


def G_piece(inst: ProblemInstance, s: int, j: int, x: Fraction, mu: Fraction) -> Fraction:
    th = thresholds_for(inst)
    b = inst.b
    return (s - (b + s) / th.A(s, j) * mu) * x + (s - j) * b * mu


def F_piece(inst: ProblemInstance, s: int, j: int, x: Fraction, mu: Fraction) -> Fraction:
    th = thresholds_for(inst)
    b = inst.b
    return -b * x + (b + s) * th.B(s, j + 1) + (s * b - (b + 1) * (j + 1)) * mu


def Fbar_piece(inst: ProblemInstance, s: int, j: int, x: Fraction, d: Fraction) -> Fraction:
    th = thresholds_for(inst)
    b = inst.b
    slope = (b + s) / th.A(s, j)
    return s * x + ((b - 1) * s - b * j - slope * x) * d + slope * d * d


def Gbar_piece(inst: ProblemInstance, s: int, j: int, d: Fraction) -> Fraction:
    th = thresholds_for(inst)
    b = inst.b
    return s * th.B(s, j + 1) + (s * b - (b + 1) * (j + 1)) * d


# ---------------------------------------------------------------------------
# value functions


def g_frak(inst: ProblemInstance, s: int, x: Fraction, mu: Fraction) -> Fraction:
    """Expected cost-to-go with s periods left, order level x and conditional mean mu."""
    th = thresholds_for(inst)
    x, mu = Fraction(x), Fraction(mu)
    j = th.gamma(s - 1, mu)
    if x < th.B(s, j):
        return F_piece(inst, s, j - 1, x, mu)
    return G_piece(inst, s, th.upsilon(s - 1, x), x, mu)


def g_bar(inst: ProblemInstance, s: int, x: Fraction, d: Fraction) -> Fraction:
    """Cost-to-go after a period that started at level x and saw demand d."""
    th = thresholds_for(inst)
    x, d = Fraction(x), Fraction(d)
    return g_frak(inst, s, max(th.beta(s, d), x - d), d)


def g_bar_piecewise(inst: ProblemInstance, s: int, x: Fraction, d: Fraction) -> Fraction:
    """Same quantity as :func:`g_bar`, evaluated through the quadratic/linear pieces."""
    th = thresholds_for(inst)
    x, d = Fraction(x), Fraction(d)
    if d < z_cross(inst, s, x):
        return Fbar_piece(inst, s, th.upsilon(s - 1, x - d), x, d)
    return Gbar_piece(inst, s, th.gamma(s, d) - 1, d)


def f_frak(inst: ProblemInstance, s: int, x: Fraction, d: Fraction) -> Fraction:
    """Integrand of the inner maximization: stage cost plus continuation."""
    if s < 2:
        raise ValueError("f_frak needs s >= 2; with one period left the integrand is the stage cost")
    x, d = Fraction(x), Fraction(d)
    cost = inst.b * (d - x) if d >= x else x - d
    return cost + g_bar(inst, s - 1, x, d)


def z_cross(inst: ProblemInstance, s: int, x: Fraction) -> Fraction:
    """Infimum of demands d >= 0 with beta_d >= x - d.

    beta is a step function equal to B[s][j] on (A[s+1][j-1], A[s+1][j]]; the
    segments are scanned in ascending order.
    """
    th = thresholds_for(inst)
    x = Fraction(x)
    if x == 0:
        return _ZERO
    for j in range(0, s + 1):
        lo, hi = th.A(s + 1, j - 1), th.A(s + 1, j)
        cand = max(x - th.B(s, j), lo)
        if cand <= hi:
            return cand
    raise AssertionError("z_cross scan exhausted")  # beta_U = U >= x - U always


# ---------------------------------------------------------------------------
# worst case and policy


def worst_case_measure(inst: ProblemInstance, s: int, x: Fraction, mu: Fraction) -> DiscreteMeasure:
    """Two-point adversarial conditional demand law at level x and mean mu."""
    th = thresholds_for(inst)
    x, mu = Fraction(x), Fraction(mu)
    U = inst.U
    if mu == 0 or x == U:
        return DiscreteMeasure.two_point(_ZERO, U, mu)
    j = th.gamma(s - 1, mu) - 1
    if x < th.B(s, j + 1):
        return DiscreteMeasure.two_point(th.A(s, j), th.A(s, j + 1), mu)
    k = th.upsilon(s - 1, x)
    return DiscreteMeasure.two_point(_ZERO, th.A(s, k), mu)


def policy_order_level(inst: ProblemInstance, s: int, y: Fraction, prev_d: Fraction) -> Fraction:
    """Order-up-to level with s periods left, pre-order level y, previous demand prev_d."""
    y = min(max(Fraction(y), _ZERO), inst.U)
    return max(y, chi_mar(inst, s, prev_d))


def opt_mar(inst: ProblemInstance) -> Fraction:
    th = thresholds_for(inst)
    g = th.gamma(inst.T, inst.mu)
    return G_piece(inst, inst.T, g, th.B(inst.T, g), inst.mu)


def demand_ladder(inst: ProblemInstance) -> list[Fraction]:
    """(D_0 = mu, D_1, ..., D_Lambda): the worst-case demand ramp."""
    th = thresholds_for(inst)
    T = inst.T
    g = th.gamma(T, inst.mu)
    lam = max(T - g, 1)
    return [inst.mu] + [th.A(T + 1 - t, min(g, T - 1)) for t in range(1, lam + 1)]


@dataclass(frozen=True)
class PolicyReport:
    chi: Fraction
    opt: Fraction
    value_at_x0: Fraction
    first_order_level: Fraction
    support_points: tuple[Fraction, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "chi": fmt_rational(self.chi),
            "opt": fmt_rational(self.opt),
            "value_at_x0": fmt_rational(self.value_at_x0),
            "first_order_level": fmt_rational(self.first_order_level),
            "support_points": [fmt_rational(p) for p in self.support_points],
        }


def value(inst: ProblemInstance) -> PolicyReport:
    th = thresholds_for(inst)
    chi = th.beta(inst.T, inst.mu)
    first = max(inst.x0, chi)
    return PolicyReport(
        chi=chi,
        opt=opt_mar(inst),
        value_at_x0=g_frak(inst, inst.T, first, inst.mu),
        first_order_level=first,
        support_points=tuple(demand_ladder(inst)),
    )


# ---------------------------------------------------------------------------
# region constants (used by the structural property checks)


@dataclass(frozen=True)
class RegionIndex:
    gamma: int
    upsilon: int
    z_cross: Fraction
    zeta: int
    aleph: Fraction
    calA: Fraction
    alphax: Fraction


def region_index(inst: ProblemInstance, s: int, x: Fraction) -> RegionIndex:
    """Region constants of the integrand in d for s >= 2 periods left and level x."""
    if s < 2:
        raise ValueError("region constants are defined for s >= 2")
    th = thresholds_for(inst)
    x = Fraction(x)
    z_prev = z_cross(inst, s - 1, x)
    z = z_cross(inst, s, x)
    return RegionIndex(
        gamma=th.gamma(s, x),
        upsilon=th.upsilon(s, x),
        z_cross=z,
        zeta=th.gamma(s, z),
        aleph=th.A(s, th.upsilon(s - 1, x)),
        calA=th.A(s, th.gamma(s - 1, z_prev)),
        alphax=th.A(s, th.gamma(s - 1, x)),
    )
