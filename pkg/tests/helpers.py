"""Shared instance builders for the test suite."""

import random

from pcnf.factorgraph import phi_id, pi_id, q_id
from pcnf.network import edge_flow

ANALYTIC_GAS_2NODE = {
    "components": 1,
    "slack": "n0",
    "nodes": [
        {"id": "n0", "potential": [25.0], "injection": [[-10.0, 10.0]]},
        {
            "id": "n1",
            "potential": [[0.0, 40.0]],
            "injection": [-2.0],
            "cost": {"kind": "quadratic", "coeffs": [1.0, 2.0, 1.0]},
        },
    ],
    "edges": [
        {
            "from": "n0",
            "to": "n1",
            "physics": {"kind": "gas", "gamma": 1.0, "offset": 0.0},
            "flow_domain": [[-5.0, 5.0]],
        }
    ],
}


def random_physics(rng: random.Random, kind: str) -> dict:
    if kind == "gas":
        return {"kind": "gas", "gamma": round(rng.uniform(0.8, 1.6), 3), "offset": 0.0}
    if kind == "dissipative":
        return {
            "kind": "dissipative",
            "coefficient": round(rng.uniform(0.5, 1.5), 3),
            "exponent": round(rng.uniform(0.7, 1.6), 3),
        }
    raise ValueError(kind)


def random_network(
    rng: random.Random,
    n_nodes: int,
    kind: str = "gas",
    cyclic: bool = False,
    max_degree: int = 3,
    flow_cap: float = 3.0,
) -> dict:
    """Random tree (or single-cycle) instance with a guaranteed feasible state.

    All potential domains contain the slack value and all injection/flow
    domains contain zero, so the all-equal-potentials zero-flow state is
    always feasible and the discretized problem is never empty.
    """
    names = [f"n{i}" for i in range(n_nodes)]
    nodes = []
    for i, name in enumerate(names):
        if i == 0:
            nodes.append({"id": name, "potential": [25.0], "injection": [[-10.0, 10.0]]})
            continue
        lo = -round(rng.uniform(0.4, 1.5), 3)
        hi = round(rng.uniform(0.4, 1.5), 3)
        target = round(rng.uniform(lo, hi), 3)
        # (q - target)^2 + small offset: nonnegative, pulls away from zero flow
        cost = {
            "kind": "quadratic",
            "coeffs": [round(target * target + 0.05, 6), -2.0 * target, 1.0],
        }
        nodes.append(
            {
                "id": name,
                "potential": [[15.0, 35.0]],
                "injection": [[lo, hi]],
                "cost": cost,
            }
        )
    degree = {name: 0 for name in names}
    edges = []
    pairs = set()

    def add_edge(a: str, b: str):
        edges.append(
            {
                "from": a,
                "to": b,
                "physics": random_physics(rng, kind),
                "flow_domain": [[-flow_cap, flow_cap]],
            }
        )
        degree[a] += 1
        degree[b] += 1
        pairs.add(frozenset((a, b)))

    for i in range(1, n_nodes):
        choices = [j for j in range(i) if degree[names[j]] < max_degree]
        parent = names[rng.choice(choices)]
        add_edge(parent, names[i])
    if cyclic:
        options = [
            (a, b)
            for ai, a in enumerate(names)
            for b in names[ai + 1:]
            if frozenset((a, b)) not in pairs
            and degree[a] < max_degree
            and degree[b] < max_degree
        ]
        if options:
            a, b = options[rng.randrange(len(options))]
            add_edge(a, b)
    return {"components": 1, "slack": "n0", "nodes": nodes, "edges": edges}


def sample_feasible_states(net, rng: random.Random, n: int, attempts: int = 400,
                           spread: float = 1.5):
    """Exactly feasible GM assignments: sampled potentials, derived flows,
    derived injections; a sample is kept only when every derived quantity
    falls inside its domain.  Potentials are drawn near the slack value so
    small-flow states dominate.  Only for transform-free networks."""
    k = net.components
    slack = net.slack_id
    center = [iv.lo for iv in net.node(slack).potential]
    out = []
    for _ in range(attempts):
        if len(out) >= n:
            break
        values = {}
        pis = {}
        for node in net.nodes:
            vals = []
            for ki in range(k):
                dom = node.potential[ki]
                if node.id == slack:
                    vals.append(dom.lo)
                    continue
                lo = max(dom.lo, center[ki] - spread)
                hi = min(dom.hi, center[ki] + spread)
                if lo > hi:
                    lo, hi = dom.lo, dom.hi
                vals.append(rng.uniform(lo, hi))
            pis[node.id] = vals
        ok = True
        flows = {}
        for e in net.edges:
            fwd = edge_flow(e, pis[e.frm], pis[e.to], forward=True)
            rev = edge_flow(e, pis[e.to], pis[e.frm], forward=False)
            for ki in range(k):
                if not e.flow_domain[ki].contains(fwd[ki]) or not e.flow_domain[ki].contains(rev[ki]):
                    ok = False
                flows[(e.frm, e.to, ki)] = fwd[ki]
                flows[(e.to, e.frm, ki)] = rev[ki]
            if not ok:
                break
        if not ok:
            continue
        for node in net.nodes:
            if node.id == slack:
                continue
            for ki in range(k):
                total = 0.0
                for e in net.edges:
                    if e.frm == node.id:
                        total += flows[(e.frm, e.to, ki)]
                    elif e.to == node.id:
                        total += flows[(e.to, e.frm, ki)]
                if not node.injection[ki].contains(total):
                    ok = False
                    break
                values[q_id(node.id, ki)] = total
            if not ok:
                break
        if not ok:
            continue
        for e in net.edges:
            for a, b in ((e.frm, e.to), (e.to, e.frm)):
                for ki in range(k):
                    values[pi_id(a, b, ki)] = pis[a][ki]
                    values[phi_id(a, b, ki)] = flows[(a, b, ki)]
        out.append(values)
    return out


def chain_network(n_nodes: int, injection_halfwidth: float = 0.05) -> dict:
    """Long gas chain for the linear-runtime check."""
    nodes = [{"id": "n0000", "potential": [25.0], "injection": [[-10.0, 10.0]]}]
    for i in range(1, n_nodes):
        w = injection_halfwidth
        nodes.append(
            {
                "id": f"n{i:04d}",
                "potential": [[20.0, 30.0]],
                "injection": [[-w, w]],
                "cost": {"kind": "quadratic", "coeffs": [0.01, 0.1, 1.0]},
            }
        )
    edges = [
        {
            "from": f"n{i:04d}",
            "to": f"n{i + 1:04d}",
            "physics": {"kind": "gas", "gamma": 1.0, "offset": 0.0},
            "flow_domain": [[-1.0, 1.0]],
        }
        for i in range(n_nodes - 1)
    ]
    return {"components": 1, "slack": "n0000", "nodes": nodes, "edges": edges}
