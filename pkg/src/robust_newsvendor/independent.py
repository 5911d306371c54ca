"""Independent-demand baseline and comparisons against the martingale model."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .closed_form import opt_mar
from .model import DiscreteMeasure, ProblemInstance, fmt_rational


class DegenerateRatioError(ValueError):
    """The MAR/IND ratio is 0/0 (mu = 0 or mu = U)."""


def chi_ind(inst: ProblemInstance) -> Fraction:
    # the knife edge mu = U/(b+1) belongs to the order-nothing branch
    return Fraction(0) if inst.mu <= inst.U / (inst.b + 1) else inst.U


def opt_ind(inst: ProblemInstance) -> Fraction:
    if inst.mu <= inst.U / (inst.b + 1):
        return inst.T * inst.b * inst.mu
    return inst.T * (inst.U - inst.mu)


def worst_marginal(inst: ProblemInstance) -> DiscreteMeasure:
    """Per-period worst case: mass mu/U at U, the rest at 0."""
    w = inst.mu / inst.U
    return DiscreteMeasure([(0, 1 - w), (inst.U, w)])


@dataclass(frozen=True)
class IndReport:
    chi_ind: Fraction
    opt_ind: Fraction
    worst_marginal: DiscreteMeasure
    ratio_mar_over_ind: Optional[Fraction]
    opt_is_value_at_x0: bool

    def to_dict(self) -> dict:
        ratio = self.ratio_mar_over_ind
        return {
            "chi_ind": fmt_rational(self.chi_ind),
            "opt_ind": fmt_rational(self.opt_ind),
            "worst_marginal": self.worst_marginal.to_list(),
            "ratio_mar_over_ind": None if ratio is None else fmt_rational(ratio),
            "opt_is_value_at_x0": self.opt_is_value_at_x0,
        }


def ind_policy_value(inst: ProblemInstance) -> IndReport:
    chi = chi_ind(inst)
    try:
        ratio = finite_ratio(inst.replace(x0=Fraction(0)))
    except DegenerateRatioError:
        ratio = None
    return IndReport(chi, opt_ind(inst), worst_marginal(inst), ratio, inst.x0 <= chi)


def full_inventory_value(inst: ProblemInstance) -> Fraction:
    """Independent-demand minimax value when the horizon starts with x0 = U.

    Valid for 0 < mu/U < 1/(b+1), where the optimal policy never orders above 0.
    """
    mu, U, b, T = inst.mu, inst.U, inst.b, inst.T
    if inst.x0 != U:
        raise ValueError("full_inventory_value requires x0 = U")
    if mu == 0:
        raise ValueError("full_inventory_value is undefined at mu = 0")
    if mu / U >= 1 / (b + 1):
        raise ValueError("full_inventory_value requires mu/U < 1/(b+1)")
    return b * mu * T + U * U / mu - (b + 1) * U + (1 - mu / U) ** T * (1 + b - U / mu) * U


def martingale_full_inventory_value(inst: ProblemInstance) -> Fraction:
    """Martingale-demand value at x0 = U: demand is U forever or 0 forever."""
    return (inst.U - inst.mu) * inst.T


def finite_ratio(inst: ProblemInstance) -> Fraction:
    """Opt_MAR / Opt_IND at x0 = 0."""
    if inst.x0 != 0:
        raise ValueError("finite_ratio compares optimal values at x0 = 0")
    if inst.mu == 0 or inst.mu == inst.U:
        raise DegenerateRatioError("both optimal values vanish at mu in {0, U}")
    return opt_mar(inst) / opt_ind(inst)
