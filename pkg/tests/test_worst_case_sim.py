from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings

from robust_newsvendor import closed_form as cf
from robust_newsvendor.dp_oracle import GuardError
from robust_newsvendor.model import ProblemInstance
from robust_newsvendor.worst_case_sim import (
    CSV_COLUMNS,
    chain_schedule,
    enumerate_chain,
    enumerate_exact,
    enumerate_tree,
    path_distribution,
    read_demand_csv,
    simulate,
    simulate_under,
    stopping_law,
    trajectories_to_csv,
    uniform_streams,
)

from .conftest import instances

settings.load_profile("props")

UNIT3 = ProblemInstance(Fr(1, 2), 1, 1, 3)


def test_chain_schedule_examples():
    sc = chain_schedule(UNIT3)
    assert sc.lam == 2
    assert sc.D == (Fr(1, 2), Fr(2, 3), 1)
    assert sc.X[1:] == (Fr(1, 6), Fr(1, 3))
    sc = chain_schedule(ProblemInstance(Fr(1, 4), 1, 1, 2))
    assert (sc.gamma, sc.lam, sc.D[1:], sc.X[1:]) == (0, 2, (Fr(1, 2), 1), (0, 0))
    sc = chain_schedule(ProblemInstance(1, 1, 2, 4))
    assert (sc.gamma, sc.lam, sc.D[1], sc.X[1]) == (4, 1, 1, 1)


def test_chain_ramp_matches_demand_ladder():
    for T in range(1, 9):
        inst = ProblemInstance(Fr(1, 3), 2, Fr(5, 2), T)
        assert list(chain_schedule(inst).D) == cf.demand_ladder(inst)


def test_stopping_law_examples():
    law = stopping_law(chain_schedule(UNIT3))
    assert law.z_pmf.to_list() == [["1", "1/4"], ["2", "3/4"]]
    assert law.y_pmf.mass(1) == Fr(2, 3)
    law = stopping_law(chain_schedule(ProblemInstance(1, 1, 1, 3)))
    assert law.z_pmf.mass(1) == 1 and law.y_pmf.mass(1) == 1
    law = stopping_law(chain_schedule(ProblemInstance(Fr(1, 4), 1, 1, 2)))
    assert law.z_pmf.masses == (Fr(1, 2), Fr(1, 2))
    assert law.y_pmf.mass(1) == Fr(1, 2)


def test_b_equal_one_stopping_law_is_uniform_then_atom():
    T = 9
    for k in range(1, T + 1):
        law = stopping_law(chain_schedule(ProblemInstance(Fr(k, T + 1), 1, 1, T)))
        assert law.z_pmf.atoms == tuple([(t, Fr(1, T + 1)) for t in range(1, T - k + 1)] + [(T + 1 - k, Fr(k + 1, T + 1))])
        assert law.y_pmf.mass(1) == 1 - Fr(1, k + 1)


def test_three_period_decomposition():
    paths, total = enumerate_exact(UNIT3)
    assert total == 1
    outcomes = sorted((p.weight, p.total_cost) for p in paths)
    assert outcomes == [(Fr(1, 4), Fr(1, 2)), (Fr(1, 4), Fr(7, 6)), (Fr(1, 2), Fr(7, 6))]


def test_full_inventory_two_outcomes():
    paths, total = enumerate_exact(ProblemInstance(Fr(1, 4), 1, 2, 5, x0=1))
    assert total == Fr(15, 4)
    assert sorted((p.weight, p.total_cost) for p in paths) == [(Fr(1, 4), 0), (Fr(3, 4), 5)]


def test_trivial_full_demand():
    paths, total = enumerate_exact(ProblemInstance(1, 1, 3, 4, x0=Fr(1, 3)))
    assert len(paths) == 1 and total == 0


def test_guards():
    with pytest.raises(GuardError):
        enumerate_tree(UNIT3.replace(T=13))
    with pytest.raises(GuardError):
        enumerate_chain(UNIT3.replace(T=17))
    with pytest.raises(ValueError):
        enumerate_chain(UNIT3.replace(x0=1))


@given(instances(max_T=6))
def test_enumeration_agrees_with_closed_form(inst):
    paths, total = enumerate_exact(inst)
    assert total == cf.value(inst).value_at_x0
    for p in paths:
        p.check(inst.U, inst.b)


@given(instances(max_T=6))
def test_chain_and_tree_give_same_path_law(inst):
    inst = inst.replace(x0=min(inst.x0, cf.chi_mar(inst, inst.T, inst.mu)))
    assert path_distribution(enumerate_chain(inst)) == path_distribution(enumerate_tree(inst))


@given(instances(max_T=6))
def test_tree_nodes_are_martingales(inst):
    paths = enumerate_tree(inst)
    children: dict = {}
    for p in paths:
        for t in range(inst.T):
            prefix = p.demands[:t]
            parent = prefix[-1] if prefix else inst.mu
            node = children.setdefault(prefix, [parent, {}])
            node[1][p.demands[t]] = node[1].get(p.demands[t], Fr(0)) + p.weight
    for parent, kids in children.values():
        mass = sum(kids.values())
        assert sum(d * w for d, w in kids.items()) == parent * mass


@given(instances(max_T=6))
def test_absorption(inst):
    for p in enumerate_tree(inst):
        steps = p.steps
        for i, s in enumerate(steps):
            if s.d == 0:
                assert all(r.d == 0 and r.x == s.x for r in steps[i:])
            if s.d == inst.U:
                assert all(r.d == inst.U and r.x == inst.U and r.cost == 0 for r in steps[i + 1 :])


def test_monte_carlo_matches_value():
    est, demands = simulate(UNIT3, 20_000, seed=11)
    assert abs(est.mean - 1) <= 4 * est.stderr
    sd = demands.std(axis=0, ddof=1) / np.sqrt(len(demands))
    assert np.all(np.abs(demands.mean(axis=0) - 0.5) <= 4 * sd)


def test_monte_carlo_zero_mean_is_free():
    est, demands = simulate(UNIT3.replace(mu=0), 100, seed=1)
    assert est.mean == 0 and est.stderr == 0 and not demands.any()


def test_monte_carlo_is_reproducible():
    a, da = simulate(UNIT3, 500, seed=3)
    b, db = simulate(UNIT3, 500, seed=3)
    c, _ = simulate(UNIT3, 500, seed=4)
    assert a == b and np.array_equal(da, db)
    assert a.mean != c.mean
    assert np.array_equal(uniform_streams(3, 10, 3), uniform_streams(3, 20, 3)[:10])


def test_sampled_paths_go_to_sink():
    sink: list = []
    simulate(UNIT3, 50, seed=0, sink=sink, sample_paths=5)
    assert len(sink) == 5
    for p in sink:
        p.check(UNIT3.U, UNIT3.b)


def test_simulate_under_examples():
    inst = ProblemInstance(Fr(1, 4), 1, 1, 2)
    assert simulate_under(inst, [0, 0]).total_cost == 0
    path = simulate_under(ProblemInstance(Fr(1, 2), 1, 1, 2), [1, 1])
    assert path.levels == (Fr(1, 3), 1)
    assert path.total_cost == Fr(2, 3)


def test_simulate_under_reproduces_chain_path():
    sc = chain_schedule(UNIT3)
    stream = list(sc.D[1 : sc.lam + 1]) + [UNIT3.U] * (UNIT3.T - sc.lam)
    paths, _ = enumerate_exact(UNIT3)
    match = [p for p in paths if p.demands == tuple(stream)]
    assert len(match) == 1
    assert simulate_under(UNIT3, stream).total_cost == match[0].total_cost


def test_simulate_under_validates_stream():
    with pytest.raises(ValueError):
        simulate_under(UNIT3, [0])
    with pytest.raises(ValueError):
        simulate_under(UNIT3, [0, 2, 0])


def test_csv_round_trip():
    paths, _ = enumerate_exact(UNIT3)
    text = trajectories_to_csv(paths)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 3 * len(paths)
    assert lines[1].split(",")[3] == "1/6"
    assert read_demand_csv("d\n1/2\n\n1\n0\n") == [Fr(1, 2), 1, 0]
    with pytest.raises(ValueError):
        read_demand_csv("1/2\nabc\n")
