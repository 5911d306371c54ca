"""Shared vocabulary: exact rationals, problem instances, discrete measures, stage cost.

Holding cost is normalized to 1 throughout; ``b`` is the backorder cost per
unit measured in holding-cost units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]


class InstanceError(ValueError):
    """Raised when problem primitives violate their range invariants."""


def to_rational(value: RationalLike) -> Fraction:
    """Convert ints, Fractions or ``"p/q"`` strings to a Fraction.

    Floats and decimal strings are rejected: every primitive must be an exact
    rational.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if any(ch in text for ch in ".eE"):
            raise InstanceError(f"decimal input {value!r} rejected; use p/q form")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InstanceError(f"not a rational: {value!r}") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def fmt_rational(value: Fraction) -> str:
    """Canonical ``"p/q"`` string (``"p"`` when q = 1)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class ProblemInstance:
    """Primitives (mu, U, b, T, x0) of the robust multi-stage newsvendor."""

    mu: Fraction
    U: Fraction
    b: Fraction
    T: int
    x0: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        for name in ("mu", "U", "b", "x0"):
            object.__setattr__(self, name, to_rational(getattr(self, name)))
        if isinstance(self.T, bool) or not isinstance(self.T, int):
            raise InstanceError(f"horizon T must be an integer, got {self.T!r}")
        if self.U <= 0:
            raise InstanceError("U > 0 violated")
        if self.b <= 0:
            raise InstanceError("b > 0 violated")
        if self.T < 1:
            raise InstanceError("T >= 1 violated")
        if not 0 <= self.mu <= self.U:
            raise InstanceError("0 <= mu <= U violated")
        if not 0 <= self.x0 <= self.U:
            raise InstanceError("0 <= x0 <= U violated")

    def replace(self, **changes) -> "ProblemInstance":
        fields = {"mu": self.mu, "U": self.U, "b": self.b, "T": self.T, "x0": self.x0}
        fields.update(changes)
        return ProblemInstance(**fields)

    def to_dict(self) -> dict:
        return {
            "mu": fmt_rational(self.mu),
            "U": fmt_rational(self.U),
            "b": fmt_rational(self.b),
            "T": self.T,
            "x0": fmt_rational(self.x0),
        }


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure with exact rational masses.

    Coincident points are merged and zero-mass atoms dropped on construction,
    so a degenerate two-point law collapses to a point mass.
    """

    atoms: tuple[tuple[Fraction, Fraction], ...]

    def __init__(self, atoms: Iterable[tuple[RationalLike, RationalLike]]):
        merged: dict[Fraction, Fraction] = {}
        for point, mass in atoms:
            point, mass = to_rational(point), to_rational(mass)
            if mass < 0:
                raise ValueError(f"negative mass {mass} at {point}")
            if mass == 0:
                continue
            merged[point] = merged.get(point, Fraction(0)) + mass
        if sum(merged.values(), Fraction(0)) != 1:
            raise ValueError("masses must sum to exactly 1")
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))

    @classmethod
    def two_point(cls, left: Fraction, right: Fraction, mean: Fraction) -> "DiscreteMeasure":
        """The unique law on {left, right} with the given mean."""
        if left == right:
            return cls([(left, 1)])
        w_right = (mean - left) / (right - left)
        return cls([(left, 1 - w_right), (right, w_right)])

    @property
    def points(self) -> tuple[Fraction, ...]:
        return tuple(p for p, _ in self.atoms)

    @property
    def masses(self) -> tuple[Fraction, ...]:
        return tuple(m for _, m in self.atoms)

    def mass(self, point: RationalLike) -> Fraction:
        point = to_rational(point)
        for p, m in self.atoms:
            if p == point:
                return m
        return Fraction(0)

    def mean(self) -> Fraction:
        return measure_mean(self)

    def expect(self, func) -> Fraction:
        return sum((m * func(p) for p, m in self.atoms), Fraction(0))

    def within(self, lo: Fraction, hi: Fraction) -> bool:
        return all(lo <= p <= hi for p in self.points)

    def to_list(self) -> list[list[str]]:
        return [[fmt_rational(p), fmt_rational(m)] for p, m in self.atoms]


def measure_mean(m: DiscreteMeasure) -> Fraction:
    return sum((p * w for p, w in m.atoms), Fraction(0))


def stage_cost(x: RationalLike, d: RationalLike, b: RationalLike) -> Fraction:
    """Newsvendor period cost ``b*(d-x)_+ + (x-d)_+`` with unit holding cost."""
    x, d, b = to_rational(x), to_rational(d), to_rational(b)
    if d >= x:
        return b * (d - x)
    return x - d


@dataclass(frozen=True)
class Step:
    t: int
    y: Fraction  # pre-order inventory level
    x: Fraction  # order-up-to level
    d: Fraction
    cost: Fraction


@dataclass
class Trajectory:
    """One demand path with the policy's levels and costs; ``weight`` is its probability."""

    steps: list[Step] = field(default_factory=list)
    weight: Fraction = Fraction(1)

    @property
    def total_cost(self) -> Fraction:
        return sum((s.cost for s in self.steps), Fraction(0))

    @property
    def demands(self) -> tuple[Fraction, ...]:
        return tuple(s.d for s in self.steps)

    @property
    def levels(self) -> tuple[Fraction, ...]:
        return tuple(s.x for s in self.steps)

    def check(self, U: Fraction, b: Fraction) -> None:
        """Assert the nonnegative-ordering, range and cost invariants."""
        for prev, cur in zip(self.steps, self.steps[1:]):
            if cur.x < prev.x - prev.d:
                raise AssertionError(f"negative order at t={cur.t}")
        for s in self.steps:
            if not (0 <= s.x <= U and 0 <= s.d <= U):
                raise AssertionError(f"level or demand out of [0, U] at t={s.t}")
            if s.cost != stage_cost(s.x, s.d, b):
                raise AssertionError(f"cost mismatch at t={s.t}")


def sorted_unique(values: Sequence[Fraction]) -> list[Fraction]:
    return sorted(set(values))
