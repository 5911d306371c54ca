"""Large-horizon limits of the worst-case dynamics and of the price of correlations.

Everything here is binary64: the limits involve gamma ** (1/b), which is
irrational in general.  Finite-T inputs come from the exact chain schedule
and are converted to floats only at the end.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import ProblemInstance, to_rational
from .worst_case_sim import chain_schedule, stopping_law


@dataclass(frozen=True)
class LimitLaw:
    mu: float
    U: float
    b: float
    gamma: float
    lambda_inf: float
    atom: float

    @classmethod
    def of(cls, mu, U, b) -> "LimitLaw":
        mu, U, b = (float(to_rational(v)) if not isinstance(v, float) else v for v in (mu, U, b))
        if not 0 < mu < U:
            raise ValueError("limit law needs 0 < mu < U")
        if b <= 0:
            raise ValueError("b must be positive")
        g = mu / U
        return cls(mu, U, b, g, 1.0 - g ** (1.0 / b), g)

    def continuous_mass(self) -> float:
        return 1.0 - (1.0 - self.lambda_inf) ** self.b


def limit_paths(law: LimitLaw, alpha: float) -> tuple[float, float]:
    """Limiting demand and order-up-to level at rescaled time alpha."""
    if not 0.0 <= alpha <= law.lambda_inf:
        raise ValueError(f"alpha={alpha} outside [0, {law.lambda_inf}]")
    if alpha == law.lambda_inf:
        return law.U, law.U
    d = law.mu * (1.0 - alpha) ** (-law.b)
    x = law.mu * law.gamma ** (1.0 / law.b) * (1.0 - alpha) ** (-(law.b + 1.0))
    return d, x


def z_inf_density(law: LimitLaw, alpha: float) -> float:
    return law.b * (1.0 - alpha) ** (law.b - 1.0)


def z_inf_cdf(law: LimitLaw, alpha: float) -> float:
    """CDF of the limiting obsolescence time: continuous on [0, lambda_inf), atom gamma at lambda_inf."""
    if alpha < 0:
        return 0.0
    if alpha >= law.lambda_inf:
        return 1.0
    return 1.0 - (1.0 - alpha) ** law.b


def ratio_limit(mu, U, b) -> float:
    """Limit of Opt_MAR / Opt_IND as T grows."""
    mu, U, b = to_rational(mu), to_rational(U), to_rational(b)
    if not 0 < mu < U:
        raise ValueError("ratio limit needs 0 < mu < U")
    root = 1.0 - float(mu / U) ** (1.0 / float(b))
    if mu <= U / (b + 1):
        return root
    return root * float(b * mu / (U - mu))


def large_b_ratio_limit(gamma: float) -> float:
    """Limit of ratio_limit as b grows: ln(1/gamma) / (1/gamma - 1)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    return -math.log1p(gamma - 1.0) * gamma / (1.0 - gamma)


@dataclass(frozen=True)
class ConvergenceReport:
    T: int
    sup_dX: float
    sup_dD: float
    sup_dZ: float
    sup_dZ_interior: float
    gamma_frac: float
    lambda_frac: float
    ks: float

    def to_dict(self) -> dict:
        return asdict(self)


def _clamp(law: LimitLaw, alpha: float) -> float:
    return min(alpha, law.lambda_inf)


def kolmogorov_distance(atoms: Sequence[tuple[float, float]], law: LimitLaw) -> float:
    """sup |F_T - F_inf| for a discrete law (atoms sorted by location) against the limit CDF.

    Between atoms the empirical CDF is flat and the limit CDF is monotone, so
    the supremum is attained at an atom or at the limit's jump, taking left
    limits into account.
    """
    def left_limit(a: float) -> float:
        if a <= 0:
            return 0.0
        if a > law.lambda_inf:
            return 1.0
        return 1.0 - (1.0 - a) ** law.b

    cum = 0.0
    worst = 0.0
    for a, m in atoms:
        worst = max(worst, abs(cum - left_limit(a)))
        cum += m
        worst = max(worst, abs(cum - z_inf_cdf(law, a)))
    jump = law.lambda_inf
    below = sum(m for a, m in atoms if a < jump)
    upto = sum(m for a, m in atoms if a <= jump)
    worst = max(worst, abs(below - left_limit(jump)), abs(upto - 1.0))
    return worst


def convergence_report(base: ProblemInstance, horizons: Iterable[int]) -> list[ConvergenceReport]:
    """Distances between the exact horizon-T chain and its rescaled limit.

    Rescaled times beyond lambda_inf are evaluated at lambda_inf, where the
    limiting paths have already reached U.
    """
    law = LimitLaw.of(base.mu, base.U, base.b)
    out = []
    for T in horizons:
        inst = base.replace(T=int(T), x0=Fraction(0))
        sc = chain_schedule(inst)
        zl = stopping_law(sc)
        dX = dD = 0.0
        for t in range(1, sc.lam + 1):
            d_inf, x_inf = limit_paths(law, _clamp(law, t / T))
            dX = max(dX, abs(float(sc.X[t]) - x_inf))
            dD = max(dD, abs(float(sc.D[t]) - d_inf))
        # the first period carries an O(1) error from rounding the index Gamma,
        # so the interior sup (t >= 2) is reported separately
        dZ = dZ_in = 0.0
        for t in range(1, sc.lam):
            err = abs(T * float(zl.z_pmf.mass(t)) - z_inf_density(law, t / T))
            dZ = max(dZ, err)
            if t >= 2:
                dZ_in = max(dZ_in, err)
        atoms = [(float(t) / T, float(m)) for t, m in zl.z_pmf.atoms]
        out.append(
            ConvergenceReport(
                T=T,
                sup_dX=dX,
                sup_dD=dD,
                sup_dZ=dZ,
                sup_dZ_interior=dZ_in,
                gamma_frac=sc.gamma / T,
                lambda_frac=sc.lam / T,
                ks=kolmogorov_distance(atoms, law),
            )
        )
    return out


def path_table(base: ProblemInstance, T: int) -> list[tuple[float, float, float, float, float]]:
    """(alpha, D_T, D_inf, X_T, X_inf) along the chain's own grid t/T, t = 1..lambda."""
    law = LimitLaw.of(base.mu, base.U, base.b)
    sc = chain_schedule(base.replace(T=T, x0=Fraction(0)))
    rows = []
    for t in range(1, sc.lam + 1):
        a = t / T
        d_inf, x_inf = limit_paths(law, _clamp(law, a))
        rows.append((a, float(sc.D[t]), d_inf, float(sc.X[t]), x_inf))
    return rows
