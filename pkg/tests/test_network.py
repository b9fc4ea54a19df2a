import math
import random

import pytest

from pcnf.errors import InputError
from pcnf.intervals import Interval
from pcnf.network import (
    ACCurrentVoltage,
    ACPowerVoltage,
    CostFunction,
    CustomTable,
    Dissipative,
    EdgeSpec,
    GasWeymouth,
    TransformSpec,
    apply_transform,
    edge_flow,
    edge_flow_enclosure,
    load_network,
    validate_network,
)

GAS = GasWeymouth(gamma=1.0, offset=0.0)


def gas_edge(gamma=1.0, offset=0.0):
    return EdgeSpec("i", "j", GasWeymouth(gamma, offset), (Interval(-5, 5),))


def ac_edge(r, x, kind="power"):
    ph = ACPowerVoltage(r, x) if kind == "power" else ACCurrentVoltage(r, x)
    return EdgeSpec("i", "j", ph, (Interval(-5, 5), Interval(-5, 5)))


# ---------------------------------------------------------------------------
# point evaluation

def test_gas_flow_direct():
    assert edge_flow(gas_edge(), [4.0], [0.0])[0] == pytest.approx(2.0)


def test_gas_flow_zero_difference():
    assert edge_flow(gas_edge(), [7.0], [7.0])[0] == 0.0


def test_gas_flow_swapped_endpoints():
    assert edge_flow(gas_edge(), [0.0], [4.0])[0] == pytest.approx(-2.0)


def test_gas_flow_reverse_direction_negates():
    e = gas_edge(gamma=1.3, offset=0.4)
    rng = random.Random(1)
    for _ in range(200):
        pi, pj = rng.uniform(0, 30), rng.uniform(0, 30)
        fwd = edge_flow(e, [pi], [pj], forward=True)[0]
        rev = edge_flow(e, [pj], [pi], forward=False)[0]
        assert rev == pytest.approx(-fwd, abs=1e-12)


def test_gas_flow_monotone():
    e = gas_edge()
    rng = random.Random(2)
    for _ in range(200):
        pj = rng.uniform(0, 30)
        xs = sorted(rng.uniform(0, 30) for _ in range(3))
        vals = [edge_flow(e, [x], [pj])[0] for x in xs]
        assert vals == sorted(vals)
        pi = rng.uniform(0, 30)
        ys = sorted(rng.uniform(0, 30) for _ in range(3))
        vals = [edge_flow(e, [pi], [y])[0] for y in ys]
        assert vals == sorted(vals, reverse=True)


def test_ac_power_direct():
    e = ac_edge(1.0, 0.0)
    p, q = edge_flow(e, [2.0, 0.0], [1.0, 0.0])
    assert p == pytest.approx(2.0)
    assert q == pytest.approx(0.0)


def test_ac_lossless_reciprocity_pure_reactance():
    e = ac_edge(0.0, 0.35)
    rng = random.Random(3)
    for _ in range(300):
        vi = [rng.uniform(0.9, 1.1), rng.uniform(-0.2, 0.2)]
        vj = [rng.uniform(0.9, 1.1), rng.uniform(-0.2, 0.2)]
        p_ij = edge_flow(e, vi, vj, forward=True)[0]
        p_ji = edge_flow(e, vj, vi, forward=False)[0]
        assert p_ij + p_ji == pytest.approx(0.0, abs=1e-9)


def test_ac_current_antisymmetric():
    e = ac_edge(0.1, 0.3, kind="current")
    rng = random.Random(4)
    for _ in range(100):
        vi = [rng.uniform(0.9, 1.1), rng.uniform(-0.2, 0.2)]
        vj = [rng.uniform(0.9, 1.1), rng.uniform(-0.2, 0.2)]
        fwd = edge_flow(e, vi, vj, forward=True)
        rev = edge_flow(e, vj, vi, forward=False)
        assert rev[0] == pytest.approx(-fwd[0], abs=1e-12)
        assert rev[1] == pytest.approx(-fwd[1], abs=1e-12)


def test_dissipative_monotone_in_drop():
    for ph in (
        Dissipative(coefficient=1.4, exponent=1.3),
        Dissipative(table=((-2.0, -3.0), (0.0, 0.0), (1.0, 2.0), (2.0, 2.5))),
    ):
        e = EdgeSpec("i", "j", ph, (Interval(-5, 5),))
        drops = [-3.0, -1.0, -0.2, 0.0, 0.5, 1.7, 3.0]
        vals = [edge_flow(e, [d], [0.0])[0] for d in drops]
        assert vals == sorted(vals)


def test_non_finite_potential_rejected():
    with pytest.raises(InputError):
        edge_flow(gas_edge(), [math.nan], [0.0])


# ---------------------------------------------------------------------------
# enclosures

def test_gas_enclosure_endpoints():
    enc = edge_flow_enclosure(gas_edge(), [Interval(0, 4)], [Interval(0, 4)])[0]
    assert enc == Interval(-2.0, 2.0)


def test_gas_enclosure_degenerate_boxes():
    enc = edge_flow_enclosure(gas_edge(), [Interval(4, 4)], [Interval(0, 0)])[0]
    assert enc.lo == enc.hi == pytest.approx(2.0)


def test_ac_enclosure_contains_samples():
    e = ac_edge(1.0, 0.0)
    enc = edge_flow_enclosure(
        e, [Interval(1, 2), Interval(0, 0)], [Interval(1, 1), Interval(0, 0)]
    )
    assert enc[0].lo <= 0.0 and enc[0].hi >= 2.0
    rng = random.Random(5)
    for _ in range(500):
        a = rng.uniform(1, 2)
        p, q = edge_flow(e, [a, 0.0], [1.0, 0.0])
        assert enc[0].contains(p, tol=1e-12)
        assert enc[1].contains(q, tol=1e-12)


def test_enclosure_soundness_random_boxes():
    rng = random.Random(6)
    edges = [
        gas_edge(gamma=1.2, offset=0.3),
        EdgeSpec("i", "j", Dissipative(coefficient=0.8, exponent=1.4), (Interval(-5, 5),)),
        EdgeSpec("i", "j", CustomTable(table=((-3.0, -2.0), (0.0, 0.1), (3.0, 2.0)), pad=0.05),
                 (Interval(-5, 5),)),
    ]
    for _ in range(1000):
        e = edges[rng.randrange(len(edges))]
        lo1, hi1 = sorted(rng.uniform(0, 30) for _ in range(2))
        lo2, hi2 = sorted(rng.uniform(0, 30) for _ in range(2))
        for forward in (True, False):
            enc = edge_flow_enclosure(e, [Interval(lo1, hi1)], [Interval(lo2, hi2)], forward)[0]
            x = rng.uniform(lo1, hi1)
            y = rng.uniform(lo2, hi2)
            val = edge_flow(e, [x], [y], forward)[0]
            assert enc.lo - 1e-9 <= val <= enc.hi + 1e-9
    for _ in range(1000):
        e = ac_edge(rng.uniform(0.01, 1.0), rng.uniform(0.05, 1.0),
                    kind=rng.choice(["power", "current"]))
        boxes = []
        for _ in range(4):
            lo, hi = sorted(rng.uniform(-1.5, 1.5) for _ in range(2))
            boxes.append(Interval(lo, hi))
        enc = edge_flow_enclosure(e, boxes[:2], boxes[2:])
        pt_f = [rng.uniform(b.lo, b.hi) for b in boxes[:2]]
        pt_t = [rng.uniform(b.lo, b.hi) for b in boxes[2:]]
        vals = edge_flow(e, pt_f, pt_t)
        for k in range(2):
            assert enc[k].lo - 1e-9 <= vals[k] <= enc[k].hi + 1e-9


# ---------------------------------------------------------------------------
# transforms

def test_transform_multiplicative_gas():
    spec = TransformSpec("multiplicative", "a", "b", coeffs=(1.2,))
    assert apply_transform(spec, [25.0])[0] == pytest.approx(30.0)


def test_transform_identity():
    spec = TransformSpec("multiplicative", "a", "b", coeffs=(1.0,))
    for v in (0.0, 3.7, 19.2):
        assert apply_transform(spec, [v])[0] == v


def test_transform_phase_shifter_preserves_modulus():
    theta = 0.31
    spec = TransformSpec(
        "multiplicative", "a", "b", coeffs=(math.cos(theta), math.sin(theta))
    )
    out = apply_transform(spec, [1.02, -0.13])
    assert math.hypot(*out) == pytest.approx(math.hypot(1.02, -0.13))


def test_transform_nonpositive_gas_ratio_rejected():
    spec = TransformSpec("multiplicative", "a", "b", coeffs=(-0.5,))
    with pytest.raises(InputError):
        apply_transform(spec, [25.0])


def test_transform_additive_and_tabulated():
    add = TransformSpec("additive", "a", "b", coeffs=(2.5,))
    assert apply_transform(add, [1.0])[0] == 3.5
    tab = TransformSpec("tabulated", "a", "b", tables=(((0.0, 0.0), (10.0, 20.0)),))
    assert apply_transform(tab, [5.0])[0] == pytest.approx(10.0)


# ---------------------------------------------------------------------------
# cost functions

def test_cost_kinds_and_exact_minima():
    quad = CostFunction("quadratic", (1.0, -2.0, 1.0))  # (x-1)^2
    assert quad(3.0) == pytest.approx(4.0)
    assert quad.min_on(Interval(0, 2)) == 0.0
    assert quad.min_on(Interval(2, 5)) == pytest.approx(1.0)
    aff = CostFunction("affine", (1.0, -0.5))
    assert aff.min_on(Interval(0, 4)) == pytest.approx(-1.0)
    pwl = CostFunction("pwl", points=((0.0, 1.0), (1.0, 0.0), (2.0, 2.0)))
    assert pwl(0.5) == pytest.approx(0.5)
    assert pwl.min_on(Interval(0.25, 1.75)) == 0.0
    dev = CostFunction("abs_dev", (2.0, 1.0))
    assert dev(0.0) == pytest.approx(2.0)
    assert dev.min_on(Interval(0, 3)) == 0.0
    assert dev.min_on(Interval(2, 3)) == pytest.approx(2.0)


def test_cost_min_matches_dense_sampling():
    rng = random.Random(7)
    for _ in range(50):
        kind = rng.choice(["affine", "quadratic", "abs_dev", "pwl"])
        if kind == "pwl":
            xs = sorted(rng.uniform(-3, 3) for _ in range(4))
            cost = CostFunction("pwl", points=tuple((x, rng.uniform(0, 4)) for x in xs))
        elif kind == "affine":
            cost = CostFunction("affine", (rng.uniform(-1, 1), rng.uniform(-2, 2)))
        elif kind == "quadratic":
            cost = CostFunction("quadratic", tuple(rng.uniform(-1, 2) for _ in range(3)))
        else:
            cost = CostFunction("abs_dev", (rng.uniform(0, 2), rng.uniform(-2, 2)))
        lo, hi = sorted(rng.uniform(-2.5, 2.5) for _ in range(2))
        exact = cost.min_on(Interval(lo, hi))
        grid = min(cost(lo + (hi - lo) * i / 2000) for i in range(2001))
        assert exact <= grid + 1e-9
        assert exact >= grid - 0.01  # exact min lies near some grid point


# ---------------------------------------------------------------------------
# validation

def valid_gas_doc():
    return {
        "components": 1,
        "slack": "a",
        "nodes": [
            {"id": "a", "potential": [25.0], "injection": [[-5, 5]]},
            {"id": "b", "potential": [[10, 30]], "injection": [[-1, 1]]},
        ],
        "edges": [
            {"from": "a", "to": "b", "physics": {"kind": "gas", "gamma": 2.0},
             "flow_domain": [[-3, 3]]}
        ],
    }


def test_validate_ok():
    rep = validate_network(load_network(valid_gas_doc()))
    assert rep.ok and not rep.violations


def test_validate_zero_conductance():
    doc = valid_gas_doc()
    doc["edges"][0]["physics"]["gamma"] = 0.0
    rep = validate_network(load_network(doc))
    assert not rep.ok
    assert any("conductance must be positive" in v for v in rep.violations)


def test_validate_two_slacks():
    doc = valid_gas_doc()
    del doc["slack"]
    doc["nodes"][0]["slack"] = True
    doc["nodes"][1]["slack"] = True
    doc["nodes"][1]["potential"] = [20.0]
    rep = validate_network(load_network(doc))
    assert not rep.ok
    assert any("exactly one slack" in v for v in rep.violations)


def test_validate_collects_many_violations():
    doc = valid_gas_doc()
    doc["edges"].append({"from": "a", "to": "a",
                         "physics": {"kind": "gas", "gamma": 1.0},
                         "flow_domain": [[-1, 1]]})
    doc["edges"].append(dict(doc["edges"][0]))
    doc["nodes"][1]["potential"] = [[30, 10]]
    rep = validate_network(load_network(doc))
    assert not rep.ok
    text = "\n".join(rep.violations)
    assert "self-loops" in text
    assert "duplicate undirected edge" in text
    assert "empty interval" in text


def test_validate_dangling_endpoint_and_slack_potential():
    doc = valid_gas_doc()
    doc["edges"][0]["to"] = "zzz"
    doc["nodes"][0]["potential"] = [[20, 30]]
    rep = validate_network(load_network(doc))
    text = "\n".join(rep.violations)
    assert "does not exist" in text
    assert "must be a singleton" in text
