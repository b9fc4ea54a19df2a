"""Brute-force reference solvers used to validate bounds and feasibility.

The grid enumerator shares the Network/FactorGraph data types with the main
path but re-derives every feasibility test from the physics formulas on plain
(lo, hi) float pairs; it never consults the DiscretizedConstraint tables, so
agreement between the two is a genuine cross-check.  The enumeration budget
counts explored search nodes of the pruned recursion (a raw label-product cap
would refuse exactly the desk-scale instances this oracle exists to check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapExceededError
from . import factorgraph as fg
from . import network as nw

DEFAULT_CAP = 10_000_000


@dataclass
class OracleResult:
    value: float | None
    point: dict
    labels: dict
    residual: float
    enumerated: int
    feasible: bool
    mode: str


# ---------------------------------------------------------------------------
# interval helpers on bare (lo, hi) pairs, independent of the main path

def _bx_sub(a, b):
    return (a[0] - b[1], a[1] - b[0])


def _bx_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _bx_neg(a):
    return (-a[1], -a[0])


def _bx_mul(a, b):
    vals = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(vals), max(vals))


def _bx_scale(a, c):
    return (c * a[0], c * a[1]) if c >= 0 else (c * a[1], c * a[0])


def _bx_overlap(a, b):
    return max(a[0], b[0]) <= min(a[1], b[1])


def _interp(table, x):
    xs = [p[0] for p in table]
    ys = [p[1] for p in table]
    if x <= xs[0]:
        s = (ys[1] - ys[0]) / (xs[1] - xs[0])
        return ys[0] + s * (x - xs[0])
    if x >= xs[-1]:
        s = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        return ys[-1] + s * (x - xs[-1])
    for k in range(len(xs) - 1):
        if xs[k] <= x <= xs[k + 1]:
            t = (x - xs[k]) / (xs[k + 1] - xs[k])
            return ys[k] + t * (ys[k + 1] - ys[k])
    raise AssertionError


def _o_scalar_flow(ph, d):
    if isinstance(ph, nw.GasWeymouth):
        return 0.0 if d == 0 else ph.gamma * math.copysign(math.sqrt(abs(d)), d)
    if isinstance(ph, nw.Dissipative):
        if ph.table:
            return _interp(ph.table, d)
        return ph.coefficient * math.copysign(abs(d) ** ph.exponent, d)
    if isinstance(ph, nw.CustomTable):
        return _interp(ph.table, d)
    raise AssertionError(f"not scalar physics: {ph}")


def _o_scalar_flow_box(ph, dbox):
    lo = _o_scalar_flow(ph, dbox[0])
    hi = _o_scalar_flow(ph, dbox[1])
    if isinstance(ph, nw.CustomTable) and ph.pad:
        return (lo - ph.pad, hi + ph.pad)
    return (lo, hi)


def _o_ac_power_box(A, B, C, D, r, x):
    z2 = r * r + x * x
    dre = _bx_sub(A, C)
    dim = _bx_sub(B, D)
    e = _bx_add(_bx_mul(A, dre), _bx_mul(B, dim))
    f = _bx_sub(_bx_mul(B, dre), _bx_mul(A, dim))
    p = _bx_scale(_bx_sub(_bx_scale(e, r), _bx_scale(f, x)), 1.0 / z2)
    q = _bx_scale(_bx_add(_bx_scale(e, x), _bx_scale(f, r)), 1.0 / z2)
    return p, q


def _o_ac_current_box(A, B, C, D, r, x):
    z2 = r * r + x * x
    dre = _bx_sub(A, C)
    dim = _bx_sub(B, D)
    jre = _bx_scale(_bx_add(_bx_scale(dre, r), _bx_scale(dim, x)), 1.0 / z2)
    jim = _bx_scale(_bx_sub(_bx_scale(dim, r), _bx_scale(dre, x)), 1.0 / z2)
    return jre, jim


def _o_transform_box(spec, boxes_in, alpha_box):
    if spec.kind == "multiplicative":
        if spec.has_decision_ratio():
            a = alpha_box if alpha_box is not None else (spec.ratio_range.lo, spec.ratio_range.hi)
            return tuple(_bx_mul(b, a) for b in boxes_in)
        if len(spec.coeffs) == 2 and len(boxes_in) == 2:
            ar, ai = spec.coeffs
            re = _bx_sub(_bx_scale(boxes_in[0], ar), _bx_scale(boxes_in[1], ai))
            im = _bx_add(_bx_scale(boxes_in[1], ar), _bx_scale(boxes_in[0], ai))
            return (re, im)
        return tuple(_bx_scale(b, spec.coeffs[0]) for b in boxes_in)
    if spec.kind == "additive":
        return tuple((b[0] + c, b[1] + c) for b, c in zip(boxes_in, spec.coeffs))
    return tuple(
        (_interp(tab, b[0]), _interp(tab, b[1])) for tab, b in zip(spec.tables, boxes_in)
    )


def _o_box_feasible(con, boxes) -> bool:
    """Sound necessary test, written from the physics directly."""
    if isinstance(con, fg.NodeLaw):
        qs, copies, flows = con._split(list(boxes))
        for ki in range(len(con.components)):
            group = copies[ki]
            if group and max(c[0] for c in group) > min(c[1] for c in group):
                return False
            if con.has_q:
                slo = sum(f[0] for f in flows[ki])
                shi = sum(f[1] for f in flows[ki])
                if qs[ki][0] > shi or qs[ki][1] < slo:
                    return False
        return True
    if isinstance(con, fg.EdgeLaw):
        ph = con.edge.physics
        if con.diagonal:
            pij, fij, pji, fji = boxes
            d = (pij[0] - pji[1] + con.offset, pij[1] - pji[0] + con.offset)
            enc = _o_scalar_flow_box(ph, d)
            lo = max(enc[0], fij[0], -fji[1])
            hi = min(enc[1], fij[1], -fji[0])
            return lo <= hi
        A, B, C, D = boxes[:4]
        r, x = ph.resistance, ph.reactance
        if isinstance(ph, nw.ACPowerVoltage):
            fwd = _o_ac_power_box(A, B, C, D, r, x)
            rev = _o_ac_power_box(C, D, A, B, r, x)
        else:
            fwd = _o_ac_current_box(A, B, C, D, r, x)
            rev = tuple(_bx_neg(v) for v in fwd)
        return all(_bx_overlap(e, b) for e, b in zip(list(fwd) + list(rev), boxes[4:]))
    if isinstance(con, fg.TransformLaw):
        qs, pin, pout, fin, fout, alpha = con._split(list(boxes))
        for q, fi, fo in zip(qs, fin, fout):
            s = _bx_add(fi, fo)
            if q[0] > s[1] or q[1] < s[0]:
                return False
        want = _o_transform_box(con.spec, pin, alpha)
        return all(_bx_overlap(w, p) for w, p in zip(want, pout))
    if isinstance(con, fg.Aggregator):
        slo = sum(b[0] for b in boxes)
        shi = sum(b[1] for b in boxes)
        mag_lo = 0.0 if slo <= 0.0 <= shi else min(abs(slo), abs(shi))
        mag_hi = max(abs(slo), abs(shi))
        return mag_lo <= con.upper and mag_hi >= con.lower
    if isinstance(con, fg.LinearEq):
        lo = hi = 0.0
        for c, b in zip(con.coeffs, boxes):
            t = _bx_scale(b, c)
            lo += t[0]
            hi += t[1]
        return lo <= con.rhs <= hi
    raise AssertionError(f"unknown constraint kind {type(con)}")


def _point_residual(gm, values) -> float:
    """Largest true-constraint violation at a full point assignment."""
    worst = 0.0
    for con in gm.constraints.values():
        xs = [values[v] for v in con.neighbors]
        worst = max(worst, _o_violation(con, xs))
    return worst


def _o_violation(con, xs) -> float:
    if isinstance(con, fg.NodeLaw):
        qs, copies, flows = con._split(list(xs))
        r = 0.0
        for ki in range(len(con.components)):
            if copies[ki]:
                r = max(r, max(copies[ki]) - min(copies[ki]))
            if con.has_q:
                r = max(r, abs(qs[ki] - sum(flows[ki])))
        return r
    if isinstance(con, fg.EdgeLaw):
        ph = con.edge.physics
        if con.diagonal:
            pij, fij, pji, fji = xs
            want = _o_scalar_flow(ph, pij - pji + con.offset)
            return max(abs(fij - want), abs(fji + want))
        a, b, c, d = xs[:4]
        r_, x_ = ph.resistance, ph.reactance
        if isinstance(ph, nw.ACPowerVoltage):
            fwd = _o_ac_power_box((a, a), (b, b), (c, c), (d, d), r_, x_)
            rev = _o_ac_power_box((c, c), (d, d), (a, a), (b, b), r_, x_)
        else:
            fwd = _o_ac_current_box((a, a), (b, b), (c, c), (d, d), r_, x_)
            rev = tuple(_bx_neg(v) for v in fwd)
        want = [fwd[0][0], fwd[1][0], rev[0][0], rev[1][0]]
        return max(abs(w - v) for w, v in zip(want, xs[4:]))
    if isinstance(con, fg.TransformLaw):
        qs, pin, pout, fin, fout, alpha = con._split(list(xs))
        worst = 0.0
        for q, fi, fo in zip(qs, fin, fout):
            worst = max(worst, abs(q - fi - fo))
        want = _o_transform_box(con.spec, [(p, p) for p in pin],
                                (alpha, alpha) if alpha is not None else None)
        for w, p in zip(want, pout):
            worst = max(worst, abs(w[0] - p))
        return worst
    if isinstance(con, fg.Aggregator):
        s = abs(sum(xs))
        return max(0.0, con.lower - s, s - con.upper)
    if isinstance(con, fg.LinearEq):
        return abs(sum(c * x for c, x in zip(con.coeffs, xs)) - con.rhs)
    raise AssertionError


# ---------------------------------------------------------------------------
# pruned exhaustive search over cell labels

def _var_order(gm, model):
    order = []
    seen = set()
    for cid in sorted(gm.constraints):
        for v in sorted(gm.constraints[cid].neighbors):
            if v not in seen:
                seen.add(v)
                order.append(v)
    for v in sorted(gm.variables):
        if v not in seen:
            seen.add(v)
            order.append(v)
    return order


def _search_best(gm, model, cap, top_k, completions_per_prefix=2):
    """Top-k feasible label assignments by discretized objective, pruned.

    The objective is decided entirely by the cost factors' variables, so those
    are enumerated first (cells in increasing unary-cost order, incumbent
    pruning); every other variable is pure feasibility, where a couple of
    completions per objective prefix suffice.
    """
    partition = model.partition
    cost_vars = sorted({v for df in model.factors.values() for v in df.neighbors})
    cost_var_set = set(cost_vars)
    rest = [v for v in _var_order(gm, model) if v not in cost_var_set]
    order = cost_vars + rest
    pos = {v: i for i, v in enumerate(order)}
    n = len(order)
    n_obj = len(cost_vars)
    counts = [partition.count(v) for v in order]
    cells = [partition.cells(v) for v in order]
    hulls = [partition.domain(v) for v in order]

    triggers: list[list] = [[] for _ in range(n)]
    for cid in sorted(gm.constraints):
        con = gm.constraints[cid]
        for v in con.neighbors:
            triggers[pos[v]].append(con)

    cost_at: list[list] = [[] for _ in range(n)]
    prunable = True
    for fid in sorted(model.factors):
        df = model.factors[fid]
        if df.table.size and float(df.table.min()) < -1e-12:
            prunable = False
        depth = max(pos[v] for v in df.neighbors)
        cost_at[depth].append(df)

    # iterate each objective variable's cells cheapest-first (unary hint)
    seq: list[list[int]] = []
    for i in range(n):
        labs = list(range(counts[i]))
        if i < n_obj:
            hint = [0.0] * counts[i]
            for df in model.factors.values():
                if len(df.neighbors) == 1 and df.neighbors[0] == order[i]:
                    for a in labs:
                        hint[a] += float(df.table[a])
            labs.sort(key=lambda a: (hint[a], a))
        seq.append(labs)

    best: list[tuple[float, float, tuple]] = []
    explored = 0
    labels = [0] * n
    all_cons = [gm.constraints[cid] for cid in sorted(gm.constraints)]

    def boxes_for(con, depth):
        out = []
        for v in con.neighbors:
            i = pos[v]
            if i <= depth:
                c = cells[i][labels[i]]
                out.append((c.lo, c.hi))
            else:
                h = hulls[i]
                out.append((h.lo, h.hi))
        return out

    def midpoint_residual():
        # cheap tie-breaker: candidates aligned at cell midpoints repair best
        mids = {order[i]: cells[i][labels[i]].mid for i in range(n)}
        worst = 0.0
        for con in all_cons:
            worst = max(worst, _o_violation(con, [mids[v] for v in con.neighbors]))
        return worst

    def feasible_step(depth) -> bool:
        nonlocal explored
        explored += 1
        if explored > cap:
            raise CapExceededError("instance too large for oracle")
        for con in triggers[depth]:
            if not _o_box_feasible(con, boxes_for(con, depth)):
                return False
        return True

    def complete(depth, cost) -> int:
        """Fill the feasibility-only tail; returns completions recorded."""
        if depth == n:
            best.append((cost, midpoint_residual(), tuple(labels)))
            best.sort()
            del best[top_k:]
            return 1
        found = 0
        for a in seq[depth]:
            labels[depth] = a
            if not feasible_step(depth):
                continue
            found += complete(depth + 1, cost)
            if found >= completions_per_prefix:
                break
        return found

    def outer(depth, partial_cost):
        if depth == n_obj:
            complete(depth, partial_cost)
            return
        for a in seq[depth]:
            labels[depth] = a
            if not feasible_step(depth):
                continue
            cost = partial_cost
            for df in cost_at[depth]:
                idx = tuple(labels[pos[v]] for v in df.neighbors)
                cost += float(df.table[idx])
            if prunable and len(best) == top_k and cost > best[-1][0]:
                continue
            outer(depth + 1, cost)

    outer(0, 0.0)
    return best, explored, order


def _repair_point(gm, model, labels_by_var):
    """In-cell point: potentials at copy-cell midpoints, flows from physics
    clamped to their cells, injections from conservation clamped to theirs."""
    partition = model.partition
    values = {}
    net = gm.source
    cell_of = {v: partition.cell(v, labels_by_var[v]) for v in labels_by_var}
    if net is None:
        return {v: cell_of[v].mid for v in cell_of}

    # potential copies: common intersection per (node, component) when equal
    by_node: dict = {}
    for vid, var in gm.variables.items():
        if isinstance(var.semantic, fg.PotentialCopy):
            s = var.semantic
            by_node.setdefault((s.node, s.component), []).append(vid)
    transform_nodes = {n.id for n in net.nodes if n.transform is not None}
    for (node, _k), vids in sorted(by_node.items()):
        if node in transform_nodes:
            continue
        lo = max(cell_of[v].lo for v in vids)
        hi = min(cell_of[v].hi for v in vids)
        mid = 0.5 * (lo + hi) if lo <= hi else cell_of[vids[0]].mid
        for v in vids:
            values[v] = cell_of[v].clamp(mid)
    for vid, var in gm.variables.items():
        if isinstance(var.semantic, fg.ControlVar):
            values[vid] = cell_of[vid].mid
    for node in sorted(transform_nodes):
        spec = net.node(node).transform
        k = net.components
        pin = [cell_of[fg.pi_id(node, spec.in_node, ki)].mid for ki in range(k)]
        alpha = values.get(fg.alpha_id(node))
        pout = nw.apply_transform(spec, pin, alpha=alpha)
        for ki in range(k):
            values[fg.pi_id(node, spec.in_node, ki)] = pin[ki]
            out_id = fg.pi_id(node, spec.out_node, ki)
            values[out_id] = cell_of[out_id].clamp(pout[ki])

    edges = sorted(net.edges, key=lambda e: (e.frm, e.to))
    for e in edges:
        k = net.components
        pf = [values[fg.pi_id(e.frm, e.to, ki)] for ki in range(k)]
        pt = [values[fg.pi_id(e.to, e.frm, ki)] for ki in range(k)]
        fwd = nw.edge_flow(e, pf, pt, forward=True)
        rev = nw.edge_flow(e, pt, pf, forward=False)
        for ki in range(k):
            fid = fg.phi_id(e.frm, e.to, ki)
            rid = fg.phi_id(e.to, e.frm, ki)
            values[fid] = cell_of[fid].clamp(fwd[ki])
            values[rid] = cell_of[rid].clamp(rev[ki])

    _set_injections(gm, values, cell_of)
    return values


def _set_injections(gm, values, cell_of):
    net = gm.source
    for vid, var in gm.variables.items():
        if isinstance(var.semantic, fg.InjectionVar):
            s = var.semantic
            total = 0.0
            for e in net.incident(s.node):
                other = e.to if e.frm == s.node else e.frm
                total += values[fg.phi_id(s.node, other, s.component)]
            values[vid] = cell_of[vid].clamp(total)


def _polish_leaves(gm, model, values, labels_by_var):
    """Bisect leaf potentials inside their cells to zero leaf conservation."""
    net = gm.source
    if net is None:
        return
    partition = model.partition
    slack = net.slack_id
    for n in sorted(net.nodes, key=lambda d: d.id):
        edges = net.incident(n.id)
        if len(edges) != 1 or n.id == slack or n.transform is not None:
            continue
        e = edges[0]
        if not nw.physics_is_diagonal(e.physics):
            continue
        other = e.to if e.frm == n.id else e.frm
        for ki in range(net.components):
            qid = fg.q_id(n.id, ki)
            if qid not in values:
                continue
            pid = fg.pi_id(n.id, other, ki)
            fid = fg.phi_id(n.id, other, ki)
            rid = fg.phi_id(other, n.id, ki)
            q_cell = partition.cell(qid, labels_by_var[qid])
            f_cell = partition.cell(fid, labels_by_var[fid])
            r_cell = partition.cell(rid, labels_by_var[rid])
            cell = partition.cell(pid, labels_by_var[pid])
            pi_other = values[fg.pi_id(other, n.id, ki)]

            def flow_at(p):
                # pi_from is always the potential at the leaf side of the direction
                if e.frm == n.id:
                    return nw.edge_flow(e, [p], [pi_other], forward=True)[ki]
                return nw.edge_flow(e, [p], [pi_other], forward=False)[ki]

            f_lo, f_hi = sorted((flow_at(cell.lo), flow_at(cell.hi)))
            lo = max(q_cell.lo, f_cell.lo, -r_cell.hi, f_lo)
            hi = min(q_cell.hi, f_cell.hi, -r_cell.lo, f_hi)
            if lo > hi:
                continue
            target = 0.5 * (lo + hi)
            a, b = cell.lo, cell.hi
            for _ in range(80):
                midp = 0.5 * (a + b)
                if flow_at(midp) < target:
                    a = midp
                else:
                    b = midp
            p_star = 0.5 * (a + b)
            values[pid] = p_star
            values[fid] = flow_at(p_star)
            values[rid] = r_cell.clamp(-values[fid])
    cell_of = {v: partition.cell(v, labels_by_var[v]) for v in labels_by_var}
    _set_injections(gm, values, cell_of)


def grid_enumerate(gm, model, mode: str = "discretized", cap: int = DEFAULT_CAP,
                   top_k: int = 25, feas_tol: float = 1e-6) -> OracleResult:
    """Exhaustive (pruned) search over one cell label per variable.

    ``discretized``: minimize the table objective over label tuples passing
    the oracle's own feasibility tests; the result is an upper bound on
    nothing and a lower-bound certificate for nothing -- it IS the discretized
    optimum the relaxations are compared against.  ``continuous``: repair the
    best tuples into in-cell points (flows from physics, injections from
    conservation, leaf potentials bisected) and report the best true cost with
    its honest constraint residual.
    """
    if mode not in ("discretized", "continuous"):
        raise ValueError(f"unknown oracle mode {mode!r}")
    best, explored, order = _search_best(gm, model, cap, top_k)
    if not best:
        return OracleResult(None, {}, {}, math.inf, explored, False, mode)
    if mode == "discretized":
        value, _mid_resid, labels = best[0]
        labels_by_var = {v: labels[i] for i, v in enumerate(order)}
        point = {v: model.partition.cell(v, a).mid for v, a in labels_by_var.items()}
        residual = _point_residual(gm, point)
        return OracleResult(value, point, labels_by_var, residual,
                            explored, residual <= feas_tol, mode)
    candidates = []
    for _tab_value, _mid_resid, labels in best:
        labels_by_var = {v: labels[i] for i, v in enumerate(order)}
        values = _repair_point(gm, model, labels_by_var)
        _polish_leaves(gm, model, values, labels_by_var)
        true_cost = sum(
            f.evaluate([values[v] for v in f.neighbors]) for f in gm.cost_factors.values()
        )
        residual = _point_residual(gm, values)
        candidates.append((true_cost, residual, values, labels_by_var))
    candidates.sort(key=lambda c: (c[0], c[1]))
    value, residual, values, labels_by_var = candidates[0]
    return OracleResult(value, values, labels_by_var, residual,
                        explored, residual <= feas_tol, mode)


def global_bounds(gm, model, cap_vars: int = 4, cap: int = DEFAULT_CAP):
    """Brute-force global tightening for toy models: the per-variable hull of
    every cell appearing in some jointly feasible label assignment.

    Solving this exactly is as hard as the original problem, so it is only
    exposed at this enumeration scale (<= cap_vars variables).
    """
    if len(gm.variables) > cap_vars:
        raise CapExceededError(
            f"global tightening limited to {cap_vars} variables, got {len(gm.variables)}"
        )
    partition = model.partition
    order = _var_order(gm, model)
    counts = [partition.count(v) for v in order]
    cells = [partition.cells(v) for v in order]
    cons = [gm.constraints[cid] for cid in sorted(gm.constraints)]
    hulls: dict = {}
    explored = 0
    labels = [0] * len(order)

    def rec(depth):
        nonlocal explored
        if depth == len(order):
            for i, v in enumerate(order):
                c = cells[i][labels[i]]
                lo, hi = hulls.get(v, (math.inf, -math.inf))
                hulls[v] = (min(lo, c.lo), max(hi, c.hi))
            return
        for a in range(counts[depth]):
            labels[depth] = a
            explored += 1
            if explored > cap:
                raise CapExceededError("instance too large for oracle")
            boxes_ok = True
            for con in cons:
                boxes = []
                for v in con.neighbors:
                    i = order.index(v)
                    if i <= depth:
                        cc = cells[i][labels[i]]
                        boxes.append((cc.lo, cc.hi))
                    else:
                        h = partition.domain(v)
                        boxes.append((h.lo, h.hi))
                if not _o_box_feasible(con, boxes):
                    boxes_ok = False
                    break
            if boxes_ok:
                rec(depth + 1)

    rec(0)
    return {v: hulls.get(v) for v in order}


# ---------------------------------------------------------------------------
# vertex-enumeration LP cross-check

@dataclass
class VertexResult:
    status: str
    value: float | None
    vertices: int = 0


def lp_vertex_enumerate(lp, cap_vars: int = 8) -> VertexResult:
    """Exact LP optimum by enumerating basic solutions; tiny LPs only."""
    c, A, b = lp.dense()
    m, n = A.shape
    if n > cap_vars:
        raise CapExceededError(f"vertex enumeration limited to {cap_vars} variables, got {n}")
    if m == 0:
        return VertexResult("optimal", 0.0, 1)
    rank = int(np.linalg.matrix_rank(A)) if A.size else 0
    if rank == 0:
        if np.max(np.abs(b)) > 1e-9:
            return VertexResult("infeasible", None, 0)
        return VertexResult("optimal", 0.0, 1)
    best = None
    count = 0
    from itertools import combinations

    for cols in combinations(range(n), rank):
        sub = A[:, cols]
        sol, *_ = np.linalg.lstsq(sub, b, rcond=None)
        x = np.zeros(n)
        x[list(cols)] = sol
        if np.any(x < -1e-9):
            continue
        if np.max(np.abs(A @ x - b)) > 1e-7:
            continue
        count += 1
        val = float(c @ x)
        if best is None or val < best:
            best = val
    if best is None:
        return VertexResult("infeasible", None, 0)
    return VertexResult("optimal", best, count)
