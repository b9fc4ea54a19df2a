import random

import pytest

from helpers import ANALYTIC_GAS_2NODE, random_network, sample_feasible_states
from pcnf.errors import InfeasibleError
from pcnf.factorgraph import CallableCost, FactorGraph, LinearEq, VariableNode, build_gm
from pcnf.intervals import Interval
from pcnf.network import load_network
from pcnf.tighten import BoundsState, initial_bounds, tighten_all, tighten_once


def equality_chain_gm(n=5, pinned=(2.0, 3.0)):
    names = [f"x{i}" for i in range(n)]
    variables = {}
    for i, v in enumerate(names):
        dom = Interval(*pinned) if i == n - 1 else Interval(0.0, 10.0)
        variables[v] = VariableNode(v, None, dom)
    constraints = {}
    for i in range(n - 1):
        cid = f"eq{i}"
        constraints[cid] = LinearEq(cid, (names[i], names[i + 1]), (1.0, -1.0), 0.0)
    cost = CallableCost("f", (names[0],), lambda x: x, lambda b: b.lo)
    return FactorGraph(variables=variables, cost_factors={"f": cost}, constraints=constraints)


def test_equality_propagates_one_step():
    gm = equality_chain_gm(n=2)
    state = initial_bounds(gm)
    new = tighten_once(gm, state, "x0")
    assert new == Interval(2.0, 3.0)


def test_gas_inversion_example():
    # edge-law boxes set up exactly as documented: phi in [1,2], pi_j in [0,1]
    gm = build_gm(load_network(ANALYTIC_GAS_2NODE))
    state = initial_bounds(gm)
    state.bounds["pi:n1:n0:0"] = Interval(0.0, 10.0)
    state.bounds["pi:n0:n1:0"] = Interval(0.0, 1.0)
    state.bounds["phi:n1:n0:0"] = Interval(1.0, 2.0)
    state.bounds["phi:n0:n1:0"] = Interval(-2.0, -1.0)
    state.bounds["q:n1:0"] = Interval(-5.0, 5.0)
    new = tighten_once(gm, state, "pi:n1:n0:0")
    assert new == Interval(1.0, 5.0)


def test_chain_propagation_within_n_sweeps():
    gm = equality_chain_gm(n=5)
    state = tighten_all(gm, max_sweeps=5, tol=1e-12)
    for v in gm.variables:
        assert state.bounds[v] == Interval(2.0, 3.0)


def test_fixed_point_single_sweep_no_change():
    gm = equality_chain_gm(n=3)
    first = tighten_all(gm, max_sweeps=10, tol=1e-12)
    again = tighten_all(gm, state=BoundsState(bounds=dict(first.bounds)),
                        max_sweeps=10, tol=1e-12)
    assert again.sweeps == 1
    assert again.bounds == first.bounds


def test_nesting_and_soundness_on_random_networks():
    rng = random.Random(50)
    for _ in range(5):
        doc = random_network(rng, rng.randint(3, 5), kind="gas")
        net = load_network(doc)
        gm = build_gm(net)
        state = tighten_all(gm, max_sweeps=10)
        for vid, var in gm.variables.items():
            assert state.bounds[vid].lo >= var.domain.lo - 1e-12
            assert state.bounds[vid].hi <= var.domain.hi + 1e-12
        for sample in sample_feasible_states(net, rng, 5):
            for vid, value in sample.items():
                assert state.bounds[vid].contains(value, tol=1e-9), vid


def test_jacobi_gauss_seidel_agree_at_fixed_point():
    rng = random.Random(51)
    doc = random_network(rng, 4, kind="gas")
    gm = build_gm(load_network(doc))
    jac = tighten_all(gm, max_sweeps=60, tol=1e-10, schedule="jacobi")
    gs = tighten_all(gm, max_sweeps=60, tol=1e-10, schedule="gauss-seidel")
    assert gs.sweeps <= jac.sweeps
    for vid in gm.variables:
        assert jac.bounds[vid].lo == pytest.approx(gs.bounds[vid].lo, abs=1e-6)
        assert jac.bounds[vid].hi == pytest.approx(gs.bounds[vid].hi, abs=1e-6)


def test_tightening_detects_local_infeasibility():
    doc = {
        "components": 1, "slack": "a",
        "nodes": [
            {"id": "a", "potential": [25.0], "injection": [[-5, 5]]},
            {"id": "b", "potential": [[24.9, 25.1]], "injection": [[-5, -4]],
             "cost": {"kind": "quadratic", "coeffs": [0.0, 0.0, 1.0]}},
        ],
        "edges": [{"from": "a", "to": "b", "physics": {"kind": "gas", "gamma": 1.0},
                   "flow_domain": [[-5, 5]]}],
    }
    gm = build_gm(load_network(doc))
    with pytest.raises(InfeasibleError) as err:
        tighten_all(gm, max_sweeps=10)
    assert err.value.stage == "tightening"


def test_analytic_instance_pins_pi1():
    gm = build_gm(load_network(ANALYTIC_GAS_2NODE))
    state = tighten_all(gm, max_sweeps=10, tol=1e-12)
    assert state.bounds["pi:n1:n0:0"] == Interval(21.0, 21.0)
    assert state.bounds["phi:n0:n1:0"] == Interval(2.0, 2.0)
    assert state.bounds["phi:n1:n0:0"] == Interval(-2.0, -2.0)


def test_tightening_improves_downstream_bound():
    from pcnf.discretize import build_partition, discretize_model
    from pcnf.treedp import solve_tree

    rng = random.Random(52)
    doc = random_network(rng, 5, kind="gas")
    gm = build_gm(load_network(doc))
    part_before = build_partition(gm, 4)
    v_before, _, _ = solve_tree(gm, part_before, discretize_model(gm, part_before))
    state = tighten_all(gm, max_sweeps=10)
    part_after = build_partition(gm, 4, bounds=state.bounds)
    v_after, _, _ = solve_tree(gm, part_after, discretize_model(gm, part_after))
    assert v_after >= v_before - 1e-12
