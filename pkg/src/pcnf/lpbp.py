"""Finite belief LPs over interval partitions, and their super-node hierarchy.

The plain LP has one belief per variable cell, one per factor cell tuple
(constraints only over feasible tuples), normalization and marginalization
equalities, plus joint beliefs on each directed-edge port (the potential-copy
and flow scalars a node law and an edge law share).  The port beliefs are
valid equalities for any true distribution, so the bound chain is preserved,
and they make the relaxation exact on port-merged trees, matching the tree DP.

Hierarchy LPs carry one belief table per super-node (a downward-closed family
of variable subsets containing every factor scope), with marginalization on
immediate-containment pairs; transitivity makes that equivalent to all pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, InputError
from . import simplex


def _san(name: str) -> str:
    return name.replace(":", ".")


@dataclass(frozen=True)
class Column:
    name: str
    objective: float
    kind: str          # "var" | "factor" | "port" | "member"
    owner: str
    label: tuple


@dataclass(frozen=True)
class Row:
    name: str
    coefs: tuple       # ((col_index, coefficient), ...)
    rhs: float


@dataclass
class BeliefLP:
    columns: list
    rows: list
    infeasible_constraints: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def dense(self):
        A = np.zeros((len(self.rows), len(self.columns)))
        b = np.zeros(len(self.rows))
        for i, row in enumerate(self.rows):
            for j, v in row.coefs:
                A[i, j] += v
            b[i] = row.rhs
        c = np.array([col.objective for col in self.columns])
        return c, A, b


@dataclass
class LPSolution:
    status: str                  # optimal | infeasible | unbounded | discretization-infeasible
    objective: float | None
    beliefs: dict
    iterations: int = 0
    integral: bool | None = None


# ---------------------------------------------------------------------------
# plain interval-partitioned LP

def _port_factors(gm, port):
    """Constraint/factor ids whose scope contains the whole port group."""
    out = []
    for fid in gm.factors_of(port[0]):
        f = gm.factor(fid)
        if all(v in f.neighbors for v in port):
            out.append(fid)
    return sorted(set(out))


def _port_projection(dc_neighbors, port, rows):
    positions = [dc_neighbors.index(v) for v in port]
    return {tuple(int(r[p]) for p in positions) for r in rows}


def _cross_filter(gm, model):
    """Drop constraint tuples whose port projection no other side supports.

    Equivalent presolve to the port consistency rows; returns per-constraint
    tuple arrays and the per-port kept joint-label sets.
    """
    tuples = {cid: dc.tuples for cid, dc in model.constraints.items()}
    ports = [p for p in gm.port_groups if _port_factors(gm, p)]
    changed = True
    while changed:
        changed = False
        label_sets = {}
        for port in ports:
            common = None
            for fid in _port_factors(gm, port):
                if fid not in tuples:
                    continue  # cost factor: no pruning
                dc = model.constraints[fid]
                proj = _port_projection(dc.neighbors, port, tuples[fid])
                common = proj if common is None else (common & proj)
            if common is None:
                counts = [model.partition.count(v) for v in port]
                common = set(itertools.product(*(range(c) for c in counts)))
            label_sets[port] = common
        for port in ports:
            common = label_sets[port]
            for fid in _port_factors(gm, port):
                if fid not in tuples:
                    continue
                dc = model.constraints[fid]
                positions = [dc.neighbors.index(v) for v in port]
                arr = tuples[fid]
                if not len(arr):
                    continue
                keep = np.array(
                    [tuple(int(r[p]) for p in positions) in common for r in arr],
                    dtype=bool,
                )
                if not keep.all():
                    tuples[fid] = arr[keep]
                    changed = True
    label_sets = {}
    for port in ports:
        common = None
        for fid in _port_factors(gm, port):
            if fid not in tuples:
                continue
            dc = model.constraints[fid]
            common_part = _port_projection(dc.neighbors, port, tuples[fid])
            common = common_part if common is None else (common & common_part)
        if common is not None:
            label_sets[port] = common
    return tuples, label_sets


def build_int_part_lp(gm, partition, model) -> BeliefLP:
    """Assemble the finite belief LP for the discretized model."""
    cols: list[Column] = []
    rows: list[Row] = []
    index: dict[str, int] = {}

    def add_col(name, objective, kind, owner, label):
        if name in index:
            raise InputError(f"belief name collision: {name}")
        index[name] = len(cols)
        cols.append(Column(name, objective, kind, owner, label))

    con_tuples, port_labels = _cross_filter(gm, model)
    infeasible = [cid for cid, arr in sorted(con_tuples.items()) if len(arr) == 0]

    for vid in sorted(gm.variables):
        for a in range(partition.count(vid)):
            add_col(f"b_i_{_san(vid)}_{a}", 0.0, "var", vid, (a,))

    factor_tuples: dict[str, list[tuple]] = {}
    for fid in sorted(gm.cost_factors):
        df = model.factors[fid]
        labels = list(np.ndindex(*df.table.shape))
        factor_tuples[fid] = labels
        for lab in labels:
            name = f"b_f_{_san(fid)}_{'.'.join(map(str, lab))}"
            add_col(name, float(df.table[lab]), "factor", fid, tuple(lab))
    for cid in sorted(gm.constraints):
        labels = [tuple(int(x) for x in row) for row in con_tuples[cid]]
        factor_tuples[cid] = labels
        for lab in labels:
            name = f"b_f_{_san(cid)}_{'.'.join(map(str, lab))}"
            add_col(name, 0.0, "factor", cid, lab)

    for port in sorted(port_labels):
        for lab in sorted(port_labels[port]):
            name = f"b_p_{_san(port[0])}_{'.'.join(map(str, lab))}"
            add_col(name, 0.0, "port", port[0], lab)

    # normalizations
    for vid in sorted(gm.variables):
        coefs = tuple(
            (index[f"b_i_{_san(vid)}_{a}"], 1.0) for a in range(partition.count(vid))
        )
        rows.append(Row(f"n_i_{_san(vid)}", coefs, 1.0))
    for fid in sorted(factor_tuples):
        coefs = tuple(
            (index[f"b_f_{_san(fid)}_{'.'.join(map(str, lab))}"], 1.0)
            for lab in factor_tuples[fid]
        )
        rows.append(Row(f"n_f_{_san(fid)}", coefs, 1.0))
    for port in sorted(port_labels):
        coefs = tuple(
            (index[f"b_p_{_san(port[0])}_{'.'.join(map(str, p))}"], 1.0)
            for p in sorted(port_labels[port])
        )
        rows.append(Row(f"n_p_{_san(port[0])}", coefs, 1.0))

    # marginalization onto single variables (the last cell of each family is
    # implied by the two normalizations, so its row is omitted)
    all_factors = gm.all_factors()
    for fid in sorted(factor_tuples):
        f = all_factors[fid]
        labels = factor_tuples[fid]
        for pos, vid in enumerate(f.neighbors):
            buckets: dict[int, list[int]] = {}
            for lab in labels:
                name = f"b_f_{_san(fid)}_{'.'.join(map(str, lab))}"
                buckets.setdefault(lab[pos], []).append(index[name])
            for a in range(partition.count(vid) - 1):
                coefs = [(index[f"b_i_{_san(vid)}_{a}"], 1.0)]
                coefs += [(j, -1.0) for j in buckets.get(a, [])]
                rows.append(Row(f"m_{_san(fid)}_{_san(vid)}_{a}", tuple(coefs), 0.0))

    # marginalization onto port joint labels (last label likewise implied)
    for port in sorted(port_labels):
        labels_kept = sorted(port_labels[port])
        for fid in _port_factors(gm, port):
            if fid not in factor_tuples:
                continue
            f = all_factors[fid]
            positions = [f.neighbors.index(v) for v in port]
            buckets = {}
            for lab in factor_tuples[fid]:
                name = f"b_f_{_san(fid)}_{'.'.join(map(str, lab))}"
                buckets.setdefault(tuple(lab[p] for p in positions), []).append(index[name])
            for plab in labels_kept[:-1]:
                key = ".".join(map(str, plab))
                coefs = [(index[f"b_p_{_san(port[0])}_{key}"], 1.0)]
                coefs += [(j, -1.0) for j in buckets.get(plab, [])]
                rows.append(
                    Row(f"mp_{_san(fid)}_{_san(port[0])}_{key}", tuple(coefs), 0.0)
                )

    return BeliefLP(
        columns=cols,
        rows=rows,
        infeasible_constraints=tuple(infeasible),
        meta={
            "kind": "int-part-lp-bp",
            "n_variables": len(gm.variables),
            "n_factors": len(gm.cost_factors),
            "n_constraints": len(gm.constraints),
        },
    )


# ---------------------------------------------------------------------------
# solving

def solve_lp(lp: BeliefLP, max_iter: int | None = None) -> LPSolution:
    if lp.infeasible_constraints:
        return LPSolution(
            status="discretization-infeasible",
            objective=None,
            beliefs={},
            iterations=0,
        )
    c, A, b = lp.dense()
    res = simplex.solve(c, A, b, max_iter=max_iter)
    if res.status != "optimal":
        return LPSolution(status=res.status, objective=None, beliefs={}, iterations=res.iterations)
    beliefs = {col.name: float(res.x[j]) for j, col in enumerate(lp.columns)}
    return LPSolution(
        status="optimal",
        objective=res.objective,
        beliefs=beliefs,
        iterations=res.iterations,
    )


def check_integrality(sol: LPSolution, tol: float = 1e-6):
    """True plus empty support when every belief is within tol of {0, 1}."""
    fractional = []
    for name in sorted(sol.beliefs):
        v = sol.beliefs[name]
        if min(abs(v), abs(1.0 - v)) > tol:
            fractional.append((name, v))
    ok = not fractional
    sol.integral = ok
    return ok, fractional


# ---------------------------------------------------------------------------
# super-node hierarchy

@dataclass(frozen=True)
class SuperNodeSet:
    members: tuple    # tuples of variable ids, each sorted; family sorted by (size, ids)

    def __contains__(self, item) -> bool:
        return tuple(sorted(item)) in set(self.members)


def _close_downward(members: set) -> set:
    out = set()
    stack = list(members)
    while stack:
        m = stack.pop()
        if m in out or not m:
            continue
        out.add(m)
        for i in range(len(m)):
            child = m[:i] + m[i + 1:]
            if child and child not in out:
                stack.append(child)
    return out


def generate_supernodes(gm, level: str = "minimal", t: int = 0, cap: int = 20000) -> SuperNodeSet:
    """Member family for the hierarchy LP.

    ``minimal``: union of power sets of every factor/constraint scope.
    ``size``: all variable subsets of size <= t, plus grounding scopes and
    their subsets (downward closure).
    """
    scopes = [tuple(sorted(f.neighbors)) for f in gm.all_factors().values()]
    members: set = set()
    if level == "minimal":
        members = _close_downward(set(scopes))
    elif level == "size":
        if t < 1:
            raise InputError("size level needs t >= 1")
        var_ids = sorted(gm.variables)
        count = sum(_n_choose_upto(len(var_ids), t))
        if count > cap:
            raise CapExceededError(
                f"size-{t} family over {len(var_ids)} variables has {count} members, cap {cap}"
            )
        for r in range(1, t + 1):
            for combo in itertools.combinations(var_ids, r):
                members.add(combo)
        members |= _close_downward(set(scopes))
    else:
        raise InputError(f"unknown super-node level {level!r}")
    if len(members) > cap:
        raise CapExceededError(f"super-node family has {len(members)} members, cap {cap}")
    ordered = sorted(members, key=lambda m: (len(m), m))
    return SuperNodeSet(tuple(ordered))


def _n_choose_upto(n, t):
    total = 1
    for r in range(1, t + 1):
        total = total * (n - r + 1) // r
        yield total


def validate_supernodes(gm, sns: SuperNodeSet) -> list[str]:
    """Both admissibility conditions: downward closure and grounding."""
    fam = set(sns.members)
    issues = []
    for m in sns.members:
        for i in range(len(m)):
            child = m[:i] + m[i + 1:]
            if child and child not in fam:
                issues.append(f"family not downward closed: missing {child} under {m}")
    for fid, f in gm.all_factors().items():
        scope = tuple(sorted(f.neighbors))
        if scope not in fam:
            issues.append(f"grounding scope of {fid} missing from family")
    return issues


def build_hierarchy_lp(gm, partition, model, sns: SuperNodeSet) -> BeliefLP:
    """Generalized LP over super-node beliefs, pruned by contained constraints."""
    issues = validate_supernodes(gm, sns)
    if issues:
        raise InputError("inadmissible super-node set: " + "; ".join(issues[:3]))
    fam = list(sns.members)
    fam_set = set(fam)

    con_sets = {}
    for cid, dc in model.constraints.items():
        con_sets[cid] = (dc.neighbors, dc.tuple_set())

    member_tuples: dict[tuple, list[tuple]] = {}
    for m in fam:
        checks = []
        for cid, (neigh, tset) in sorted(con_sets.items()):
            if set(neigh) <= set(m):
                positions = tuple(m.index(v) for v in neigh)
                checks.append((positions, tset))
        counts = [partition.count(v) for v in m]
        kept = []
        for lab in itertools.product(*(range(c) for c in counts)):
            ok = True
            for positions, tset in checks:
                if tuple(lab[p] for p in positions) not in tset:
                    ok = False
                    break
            if ok:
                kept.append(lab)
        member_tuples[m] = kept

    objective: dict[tuple, dict[tuple, float]] = {m: {} for m in fam}
    for fid in sorted(gm.cost_factors):
        df = model.factors[fid]
        scope = tuple(sorted(df.neighbors))
        target = objective[scope]
        for lab in member_tuples[scope]:
            fact_lab = tuple(lab[scope.index(v)] for v in df.neighbors)
            target[lab] = target.get(lab, 0.0) + float(df.table[fact_lab])

    cols: list[Column] = []
    rows: list[Row] = []
    index: dict[str, int] = {}

    def member_key(m):
        return "+".join(_san(v) for v in m)

    for m in fam:
        obj = objective[m]
        for lab in member_tuples[m]:
            name = f"b_s_{member_key(m)}_{'.'.join(map(str, lab))}"
            if name in index:
                raise InputError(f"belief name collision: {name}")
            index[name] = len(cols)
            cols.append(Column(name, obj.get(lab, 0.0), "member", member_key(m), lab))

    infeasible = []
    for m in fam:
        if not member_tuples[m]:
            infeasible.append(member_key(m))
        coefs = tuple(
            (index[f"b_s_{member_key(m)}_{'.'.join(map(str, lab))}"], 1.0)
            for lab in member_tuples[m]
        )
        rows.append(Row(f"n_s_{member_key(m)}", coefs, 1.0))

    for m in fam:
        if len(m) == 1:
            continue
        for drop in range(len(m)):
            child = m[:drop] + m[drop + 1:]
            if child not in fam_set:
                continue
            child_pos = [m.index(v) for v in child]
            buckets: dict[tuple, list[int]] = {}
            for lab in member_tuples[m]:
                key = tuple(lab[p] for p in child_pos)
                name = f"b_s_{member_key(m)}_{'.'.join(map(str, lab))}"
                buckets.setdefault(key, []).append(index[name])
            # last child tuple of each family is implied by the normalizations
            for clab in member_tuples[child][:-1]:
                coefs = [(index[f"b_s_{member_key(child)}_{'.'.join(map(str, clab))}"], 1.0)]
                coefs += [(j, -1.0) for j in buckets.get(clab, [])]
                rows.append(
                    Row(
                        f"ms_{member_key(m)}_{member_key(child)}_{'.'.join(map(str, clab))}",
                        tuple(coefs),
                        0.0,
                    )
                )

    return BeliefLP(
        columns=cols,
        rows=rows,
        infeasible_constraints=tuple(infeasible),
        meta={"kind": "hierarchy-lp", "n_members": len(fam)},
    )
