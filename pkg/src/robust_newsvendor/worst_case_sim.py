"""Enumeration and Monte Carlo rollout of the optimal policy against the worst-case martingale."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .closed_form import chi_mar, policy_order_level, thresholds_for, value, worst_case_measure
from .dp_oracle import GuardError
from .model import DiscreteMeasure, ProblemInstance, Step, Trajectory, fmt_rational, stage_cost, to_rational

_ZERO = Fraction(0)

CHAIN_GUARD = 16
TREE_GUARD = 12


@dataclass(frozen=True)
class ChainSchedule:
    """Deterministic ramp of the worst-case chain: D[0] = mu, X[0] as defined, then t = 1..lambda."""

    lam: int
    gamma: int
    D: tuple[Fraction, ...]
    X: tuple[Fraction, ...]
    mu: Fraction
    U: Fraction


@dataclass(frozen=True)
class StoppingLaw:
    z_pmf: DiscreteMeasure  # over integers 1..lambda
    y_pmf: DiscreteMeasure  # over {0, U}


@dataclass(frozen=True)
class CostEstimate:
    mean: float
    stderr: float
    runs: int
    exact: Optional[Fraction] = None

    def to_dict(self) -> dict:
        out = {"mean": self.mean, "stderr": self.stderr, "runs": self.runs}
        out["exact"] = None if self.exact is None else fmt_rational(self.exact)
        return out


def chain_schedule(inst: ProblemInstance) -> ChainSchedule:
    """Ramp levels of the worst-case Markov chain.

    The rows A[T+1-t][g] are generated by peeling one factor per step, so the
    cost is linear in T even for long horizons.
    """
    th = thresholds_for(inst)
    T, mu, b, U = inst.T, inst.mu, inst.b, inst.U
    g = th.gamma(T, mu)
    lam = max(T - g, 1)
    D = [mu]
    X = [Fraction(g) / (b + T + 1) * mu]
    if g == T:
        D.append(U)
        X.append(U)
    else:
        # A[T][g] directly, then A[s-1][g] = A[s][g] * (b + s - 1) / (s - 1)
        a = th.A(T, g)
        for t in range(1, lam + 1):
            s = T + 1 - t
            if t > 1:
                a = a * (b + s) / s
            D.append(a)
            X.append(Fraction(g) / (b + s) * a)
    sched = ChainSchedule(lam, g, tuple(D), tuple(X), mu, U)
    _check_schedule(sched)
    return sched


def _check_schedule(sc: ChainSchedule) -> None:
    if sc.D[sc.lam] != sc.U:
        raise AssertionError("ramp must reach U at lambda")
    for t in range(1, sc.lam + 1):
        if sc.X[t] > sc.D[t]:
            raise AssertionError(f"X exceeds D at t={t}")
        if t > 1 and not (sc.D[t - 1] < sc.D[t] and sc.X[t - 1] <= sc.X[t]):
            raise AssertionError(f"ramp not increasing at t={t}")


def stopping_law(sched: ChainSchedule) -> StoppingLaw:
    """Law of the obsolescence time Z and terminal jump Y."""
    D, lam, U = sched.D, sched.lam, sched.U
    if sched.mu == 0:
        return StoppingLaw(DiscreteMeasure([(1, 1)]), DiscreteMeasure([(0, 1)]))
    z = [((1 - D[t - 1] / D[t]) * sched.mu / D[t - 1]) for t in range(1, lam)]
    z.append(sched.mu / D[lam - 1])
    y_up = D[lam - 1] / U
    return StoppingLaw(
        DiscreteMeasure([(t, m) for t, m in zip(range(1, lam + 1), z)]),
        DiscreteMeasure([(0, 1 - y_up), (U, y_up)]),
    )


# ---------------------------------------------------------------------------
# exact enumeration


def _chain_paths(inst: ProblemInstance) -> list[tuple[Fraction, list[Fraction], list[Fraction]]]:
    """(weight, levels, demands) for each distinguishable (Z, Y) outcome."""
    sc = chain_schedule(inst)
    law = stopping_law(sc)
    T, U, lam = inst.T, inst.U, sc.lam
    out = []
    for z, wz in law.z_pmf.atoms:
        z = int(z)
        head_x = list(sc.X[1:z])
        head_d = list(sc.D[1:z])
        if z < lam:
            xs = head_x + [sc.X[z]] * (T - z + 1)
            ds = head_d + [_ZERO] * (T - z + 1)
            out.append((wz, xs, ds))
            continue
        for y, wy in law.y_pmf.atoms:
            if y == U:
                xs = head_x + [sc.X[lam]] + [U] * (T - lam)
                ds = head_d + [U] * (T - lam + 1)
            else:
                xs = head_x + [sc.X[lam]] * (T - lam + 1)
                ds = head_d + [_ZERO] * (T - lam + 1)
            out.append((wz * wy, xs, ds))
    return out


def _trajectory(inst: ProblemInstance, xs, ds, weight: Fraction) -> Trajectory:
    steps = []
    y = inst.x0
    for t, (x, d) in enumerate(zip(xs, ds), start=1):
        steps.append(Step(t, y, x, d, stage_cost(x, d, inst.b)))
        y = x - d
    return Trajectory(steps, weight)


def enumerate_chain(inst: ProblemInstance) -> list[Trajectory]:
    """Trajectories from the stopping-time representation; needs x0 <= chi."""
    if inst.T > CHAIN_GUARD:
        raise GuardError(f"chain enumeration guarded at T <= {CHAIN_GUARD}")
    if inst.x0 > chi_mar(inst, inst.T, inst.mu):
        raise ValueError("chain representation requires x0 <= chi")
    return [_trajectory(inst, xs, ds, w) for w, xs, ds in _chain_paths(inst)]


def enumerate_tree(inst: ProblemInstance) -> list[Trajectory]:
    """All positive-probability paths of the policy against the worst-case conditional laws."""
    if inst.T > TREE_GUARD:
        raise GuardError(f"tree enumeration guarded at T <= {TREE_GUARD}")
    T, b = inst.T, inst.b
    out: list[Trajectory] = []

    def walk(t: int, y: Fraction, prev_d: Fraction, weight: Fraction, steps: list[Step]) -> None:
        s = T - t + 1
        x = policy_order_level(inst, s, y, prev_d)
        for d, w in worst_case_measure(inst, s, x, prev_d).atoms:
            step = Step(t, y, x, d, stage_cost(x, d, b))
            if t == T:
                out.append(Trajectory(steps + [step], weight * w))
            else:
                walk(t + 1, x - d, d, weight * w, steps + [step])

    walk(1, inst.x0, inst.mu, Fraction(1), [])
    return out


def enumerate_exact(inst: ProblemInstance) -> tuple[list[Trajectory], Fraction]:
    """Exact trajectory distribution and expected cost of the saddle point.

    The stopping-time chain is used when x0 <= chi (it only holds there);
    otherwise the conditional laws are expanded as a binary tree.
    """
    if inst.x0 <= chi_mar(inst, inst.T, inst.mu):
        paths = enumerate_chain(inst)
    else:
        paths = enumerate_tree(inst)
    total = sum((p.weight * p.total_cost for p in paths), _ZERO)
    if sum((p.weight for p in paths), _ZERO) != 1:
        raise AssertionError("trajectory weights do not sum to one")
    return paths, total


def path_distribution(paths: Iterable[Trajectory]) -> dict[tuple, Fraction]:
    """Probability of each (levels, demands) sequence, merging duplicates."""
    dist: dict[tuple, Fraction] = {}
    for p in paths:
        key = (p.levels, p.demands)
        dist[key] = dist.get(key, _ZERO) + p.weight
    return dist


# ---------------------------------------------------------------------------
# Monte Carlo


def _make_sampler(inst: ProblemInstance):
    @lru_cache(maxsize=None)
    def transition(s: int, y: Fraction, prev_d: Fraction):
        x = policy_order_level(inst, s, y, prev_d)
        q = worst_case_measure(inst, s, x, prev_d)
        cum = []
        acc = _ZERO
        for d, w in q.atoms:
            acc += w
            cum.append((acc, d, stage_cost(x, d, inst.b)))
        return x, tuple(cum)

    return transition


def uniform_streams(seed: int, runs: int, horizon: int) -> np.ndarray:
    """Uniforms for every (run, period); row r is run r's stream.

    Drawn from a counter-based Philox generator keyed by the seed, so row r is
    fixed by (seed, r) regardless of how runs are later scheduled.
    """
    gen = np.random.Generator(np.random.Philox(key=seed))
    return gen.random((runs, horizon))


def simulate(
    inst: ProblemInstance,
    runs: int,
    seed: int,
    sink: Optional[list] = None,
    sample_paths: int = 0,
) -> tuple[CostEstimate, np.ndarray]:
    """Sample-path costs of the optimal policy against the worst-case martingale.

    Returns the cost estimate and the (runs, T) array of sampled demands as
    floats.  When ``sink`` is a list, the first ``sample_paths`` trajectories
    are appended to it.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    T = inst.T
    u = uniform_streams(seed, runs, T)
    transition = _make_sampler(inst)
    costs = np.empty(runs)
    demands = np.empty((runs, T))
    for r in range(runs):
        y, prev_d = inst.x0, inst.mu
        total = _ZERO
        steps = [] if sink is not None and r < sample_paths else None
        for t in range(T):
            x, cum = transition(T - t, y, prev_d)
            ur = Fraction(float(u[r, t]))  # exact binary64 value
            for acc, d, c in cum:
                if ur < acc:
                    break
            total += c
            if steps is not None:
                steps.append(Step(t + 1, y, x, d, c))
            demands[r, t] = float(d)
            y, prev_d = x - d, d
        costs[r] = float(total)
        if steps is not None:
            sink.append(Trajectory(steps, Fraction(1)))
    std = float(costs.std(ddof=1)) if runs > 1 else 0.0
    est = CostEstimate(float(costs.mean()), std / math.sqrt(runs), runs, None)
    return est, demands


def simulate_under(inst: ProblemInstance, demand_stream: Iterable) -> Trajectory:
    """Roll the optimal policy forward against an externally supplied demand path."""
    T, U = inst.T, inst.U
    steps = []
    y, prev_d = inst.x0, inst.mu
    it = iter(demand_stream)
    for t in range(1, T + 1):
        try:
            d = to_rational(next(it))
        except StopIteration:
            raise ValueError(f"demand stream ended after {t - 1} of {T} periods") from None
        if not 0 <= d <= U:
            raise ValueError(f"demand {d} at t={t} outside [0, {U}]")
        x = policy_order_level(inst, T - t + 1, y, prev_d)
        steps.append(Step(t, y, x, d, stage_cost(x, d, inst.b)))
        y, prev_d = x - d, d
    return Trajectory(steps, Fraction(1))


def expected_value(inst: ProblemInstance) -> Fraction:
    return value(inst).value_at_x0


# ---------------------------------------------------------------------------
# CSV


CSV_COLUMNS = ("run", "t", "y", "x", "d", "cost", "weight")


def trajectories_to_csv(paths: Iterable[Trajectory], sampled: bool = False) -> str:
    """Rows run,t,y,x,d,cost,weight; exact rationals as p/q, or decimals for sampled runs."""
    fmt = (lambda v: repr(float(v))) if sampled else fmt_rational
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for run, p in enumerate(paths):
        for s in p.steps:
            w.writerow([run, s.t, fmt(s.y), fmt(s.x), fmt(s.d), fmt(s.cost), fmt_rational(p.weight)])
    return buf.getvalue()


def read_demand_csv(text: str) -> list[Fraction]:
    """One demand per line (first column); blank lines and a non-numeric header are skipped."""
    out = []
    for i, row in enumerate(csv.reader(io.StringIO(text))):
        if not row or not row[0].strip():
            continue
        try:
            out.append(to_rational(row[0]))
        except ValueError:
            if i == 0 and not out:
                continue
            raise
    return out
