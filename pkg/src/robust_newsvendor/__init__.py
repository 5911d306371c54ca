"""Minimax multi-stage newsvendor with martingale or independent demand, in exact rationals."""

from .closed_form import PolicyReport, opt_mar, value
from .model import DiscreteMeasure, InstanceError, ProblemInstance, Trajectory, to_rational

__all__ = [
    "DiscreteMeasure",
    "InstanceError",
    "PolicyReport",
    "ProblemInstance",
    "Trajectory",
    "opt_mar",
    "to_rational",
    "value",
]
