from fractions import Fraction

import pytest

from robust_newsvendor.model import (
    DiscreteMeasure,
    InstanceError,
    ProblemInstance,
    Step,
    Trajectory,
    fmt_rational,
    stage_cost,
    to_rational,
)


def test_to_rational_accepts_exact_forms():
    assert to_rational("3/4") == Fraction(3, 4)
    assert to_rational(2) == 2
    assert to_rational(Fraction(1, 3)) == Fraction(1, 3)


@pytest.mark.parametrize("bad", ["0.5", "1e-3", "1E2"])
def test_to_rational_rejects_decimals(bad):
    with pytest.raises(InstanceError):
        to_rational(bad)


def test_to_rational_rejects_floats_and_bools():
    with pytest.raises(TypeError):
        to_rational(0.5)
    with pytest.raises(TypeError):
        to_rational(True)


def test_fmt_rational():
    assert fmt_rational(Fraction(6, 4)) == "3/2"
    assert fmt_rational(Fraction(4, 2)) == "2"
    assert fmt_rational(Fraction(-1, 3)) == "-1/3"


@pytest.mark.parametrize(
    "kwargs, message",
    [
        (dict(mu=0, U=0, b=1, T=1), "U > 0"),
        (dict(mu=0, U=1, b=0, T=1), "b > 0"),
        (dict(mu=0, U=1, b=1, T=0), "T >= 1"),
        (dict(mu=2, U=1, b=1, T=1), "mu <= U"),
        (dict(mu=0, U=1, b=1, T=1, x0=-1), "x0 <= U"),
    ],
)
def test_instance_invariants(kwargs, message):
    with pytest.raises(InstanceError, match=message):
        ProblemInstance(**kwargs)


def test_instance_round_trip():
    inst = ProblemInstance("1/2", 1, "5/2", 3, "1/3")
    assert inst.to_dict() == {"mu": "1/2", "U": "1", "b": "5/2", "T": 3, "x0": "1/3"}
    assert inst.replace(T=4).T == 4
    assert inst.replace(T=4).mu == Fraction(1, 2)


def test_measure_merges_and_drops():
    m = DiscreteMeasure([(1, Fraction(1, 4)), (0, Fraction(1, 2)), (1, Fraction(1, 4)), (2, 0)])
    assert m.points == (0, 1)
    assert m.masses == (Fraction(1, 2), Fraction(1, 2))
    assert m.mean() == Fraction(1, 2)
    assert m.mass(2) == 0


def test_measure_requires_unit_mass():
    with pytest.raises(ValueError):
        DiscreteMeasure([(0, Fraction(1, 2))])


def test_two_point_collapses_at_endpoint():
    m = DiscreteMeasure.two_point(Fraction(0), Fraction(1), Fraction(1))
    assert m.points == (1,)
    m = DiscreteMeasure.two_point(Fraction(1, 4), Fraction(1), Fraction(1, 2))
    assert m.mean() == Fraction(1, 2)
    assert m.mass(Fraction(1, 4)) == Fraction(2, 3)


def test_stage_cost():
    assert stage_cost(Fraction(1, 3), 1, 2) == Fraction(4, 3)
    assert stage_cost(1, Fraction(1, 4), 2) == Fraction(3, 4)
    assert stage_cost(1, 1, 5) == 0


def test_trajectory_accessors():
    steps = [Step(1, 0, Fraction(1, 3), 1, Fraction(2, 3)), Step(2, Fraction(-2, 3), 1, 1, 0)]
    p = Trajectory(steps, Fraction(1))
    assert p.total_cost == Fraction(2, 3)
    assert p.demands == (1, 1)
    assert p.levels == (Fraction(1, 3), 1)
    p.check(Fraction(1), Fraction(1))
