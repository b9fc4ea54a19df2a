import random

import numpy as np
import pytest

from helpers import ANALYTIC_GAS_2NODE, random_network
from pcnf.discretize import Partition, build_partition, discretize_model, partition_uniform
from pcnf.errors import InfeasibleError, InputError
from pcnf.factorgraph import CallableCost, FactorGraph, LinearEq, VariableNode, build_gm
from pcnf.intervals import Interval
from pcnf.lpbp import build_int_part_lp, solve_lp
from pcnf.network import load_network
from pcnf.treedp import backward_pass, forward_pass, root_tree, solve_tree


def table_cost(fid, var, values):
    """Unary factor whose value is constant on each unit-width cell."""
    def fn(x):
        return values[min(int(x), len(values) - 1)]

    def box_fn(bx):
        return values[min(int(bx.lo), len(values) - 1)]

    return CallableCost(fid, (var,), fn, box_fn)


def test_root_tree_on_path():
    net = load_network(ANALYTIC_GAS_2NODE)
    gm = build_gm(net)
    tree = root_tree(gm, "q:n1:0")
    assert tree.root == "q:n1:0"
    assert tree.order[-1] == "q:n1:0"
    assert len(tree.roots) == 1
    # every child's parent pointer is consistent
    for node, kids in tree.children.items():
        for kid in kids:
            assert tree.parent[kid] == node


def test_root_tree_rejects_loopy():
    rng = random.Random(40)
    doc = random_network(rng, 4, kind="gas", cyclic=True)
    gm = build_gm(load_network(doc))
    with pytest.raises(InputError, match="not a tree"):
        root_tree(gm, sorted(gm.variables)[0])


def test_root_tree_rejects_unknown_root():
    gm = build_gm(load_network(ANALYTIC_GAS_2NODE))
    with pytest.raises(InputError):
        root_tree(gm, "nope")


def test_forward_leaf_factor_message_is_table():
    variables = {"x": VariableNode("x", None, Interval(0, 2))}
    gm = FactorGraph(variables=variables,
                     cost_factors={"f": table_cost("f", "x", [0.0, 0.5])},
                     constraints={})
    part = Partition({"x": partition_uniform(Interval(0, 2), 2)})
    model = discretize_model(gm, part)
    tree = root_tree(gm, "x")
    messages = forward_pass(gm, tree, part, model)
    assert messages.gamma["f"].tolist() == [0.0, 0.5]


def test_variable_message_sums_child_factors():
    variables = {
        "x": VariableNode("x", None, Interval(0, 2)),
        "y": VariableNode("y", None, Interval(0, 2)),
    }
    link = LinearEq("c", ("x", "y"), (1.0, -1.0), 0.0)
    gm = FactorGraph(
        variables=variables,
        cost_factors={
            "f1": table_cost("f1", "x", [0.0, 1.0]),
            "f2": table_cost("f2", "x", [2.0, 0.0]),
        },
        constraints={"c": link},
    )
    part = Partition({
        "x": partition_uniform(Interval(0, 2), 2),
        "y": partition_uniform(Interval(0, 2), 2),
    })
    model = discretize_model(gm, part)
    tree = root_tree(gm, "y")
    messages = forward_pass(gm, tree, part, model)
    assert messages.kappa["x"].tolist() == [2.0, 1.0]


def test_backward_tie_breaks_to_lowest_label():
    variables = {"x": VariableNode("x", None, Interval(0, 2))}
    gm = FactorGraph(variables=variables,
                     cost_factors={"f": table_cost("f", "x", [0.7, 0.7])},
                     constraints={})
    part = Partition({"x": partition_uniform(Interval(0, 2), 2)})
    model = discretize_model(gm, part)
    tree = root_tree(gm, "x")
    messages = forward_pass(gm, tree, part, model)
    assignment = backward_pass(gm, tree, messages)
    assert assignment["x"] == 0


def test_recomputation_identity():
    rng = random.Random(41)
    for _ in range(5):
        doc = random_network(rng, rng.randint(3, 5), kind="gas")
        gm = build_gm(load_network(doc))
        part = build_partition(gm, 4)
        model = discretize_model(gm, part)
        value, assignment, _ = solve_tree(gm, part, model)
        total = 0.0
        for fid, df in model.factors.items():
            idx = tuple(assignment[v] for v in df.neighbors)
            total += float(df.table[idx])
        for cid, dc in model.constraints.items():
            idx = tuple(assignment[v] for v in dc.neighbors)
            assert idx in dc.tuple_set(), cid
        assert total == pytest.approx(value, abs=1e-12)


def test_root_invariance():
    rng = random.Random(42)
    doc = random_network(rng, 5, kind="dissipative")
    gm = build_gm(load_network(doc))
    part = build_partition(gm, 4)
    model = discretize_model(gm, part)
    values = []
    var_ids = sorted(gm.variables)
    for root in (var_ids[0], var_ids[len(var_ids) // 2], var_ids[-1]):
        value, _, _ = solve_tree(gm, part, model, root=root)
        values.append(value)
    assert max(values) - min(values) <= 1e-12


def test_dp_equals_lp_on_trees():
    rng = random.Random(43)
    for trial in range(6):
        doc = random_network(rng, rng.randint(3, 5),
                             kind="gas" if trial % 2 else "dissipative")
        gm = build_gm(load_network(doc))
        part = build_partition(gm, 4)
        model = discretize_model(gm, part)
        value, _, _ = solve_tree(gm, part, model)
        sol = solve_lp(build_int_part_lp(gm, part, model))
        assert sol.status == "optimal"
        assert value == pytest.approx(sol.objective, abs=1e-7)


def test_infeasible_discretization_raises():
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
    part = build_partition(gm, 4)
    model = discretize_model(gm, part)
    with pytest.raises(InfeasibleError):
        solve_tree(gm, part, model)


def test_messages_match_exhaustive_subtree_minimization():
    import itertools

    gm = build_gm(load_network(ANALYTIC_GAS_2NODE))
    part = build_partition(gm, 8)
    model = discretize_model(gm, part)
    tree = root_tree(gm, "q:n1:0")
    messages = forward_pass(gm, tree, part, model)
    # gamma of the node law toward the root must equal, per root cell, the
    # exhaustive minimum over all label assignments of the remaining subtree
    gamma = messages.gamma["law:n1:0"]
    others = [v for v in sorted(gm.variables) if v != "q:n1:0"]
    counts = [part.count(v) for v in others]
    for a_q in range(part.count("q:n1:0")):
        best = float("inf")
        for combo in itertools.product(*(range(c) for c in counts)):
            labels = dict(zip(others, combo))
            labels["q:n1:0"] = a_q
            ok = all(
                tuple(labels[v] for v in dc.neighbors) in dc.tuple_set()
                for dc in model.constraints.values()
            )
            if ok:
                best = min(best, 0.0)  # constraints carry no cost below the root
        assert gamma[a_q] == pytest.approx(best) or (
            gamma[a_q] == float("inf") and best == float("inf")
        )


def test_state_estimation_exact_data_objective_zero():
    doc = {
        "components": 1, "slack": "s", "objective": "state_estimation",
        "nodes": [
            {"id": "s", "potential": [25.0], "injection": [[-10, 10]]},
            {"id": "a", "potential": [21.0], "injection": [-2.0]},
        ],
        "edges": [{"from": "s", "to": "a", "physics": {"kind": "gas", "gamma": 1.0},
                   "flow_domain": [[-5, 5]]}],
    }
    gm = build_gm(load_network(doc))
    part = build_partition(gm, 8)
    model = discretize_model(gm, part)
    value, _, _ = solve_tree(gm, part, model)
    assert value == pytest.approx(0.0, abs=1e-12)


def test_representative_points_are_cell_midpoints():
    gm = build_gm(load_network(ANALYTIC_GAS_2NODE))
    part = build_partition(gm, 8)
    model = discretize_model(gm, part)
    _, assignment, rep = solve_tree(gm, part, model)
    for v, lab in assignment.items():
        assert rep[v] == pytest.approx(part.cell(v, lab).mid)
