"""Bipartite graphical model built from a physical network.

Variable nodes are scalars: one potential copy per (node, incident edge,
component), one directed flow per (edge direction, component), one injection
per (non-slack node, component), plus compression-ratio controls.  Constraint
nodes carry membership predicates, sound box-feasibility tests, feasible-cell
enumeration and interval projections; cost factor nodes carry point evaluation
and certified box lower bounds.

The slack node contributes no injection variable: its balance is implicit
(its node law only equates potential copies).  Tree-ness is evaluated on the
port-merged graph in which each directed edge's (potential copy, flow) pair
per component counts as a single node; this is the reading of the construction
under which radial networks yield acyclic models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import InputError
from .intervals import (
    Interval,
    abs_interval,
    divide,
    hull,
    intersect,
    intersect_all,
    square,
    sum_intervals,
)
from . import network as nw

CERTAIN = "certain"
POSSIBLE = "possible"


# ---------------------------------------------------------------------------
# variable nodes

@dataclass(frozen=True)
class PotentialCopy:
    node: str
    toward: str
    component: int


@dataclass(frozen=True)
class FlowVar:
    frm: str
    to: str
    component: int


@dataclass(frozen=True)
class InjectionVar:
    node: str
    component: int


@dataclass(frozen=True)
class ControlVar:
    node: str
    component: int


@dataclass(frozen=True)
class VariableNode:
    id: str
    semantic: object
    domain: Interval


# ---------------------------------------------------------------------------
# cost factor nodes

class CostFactorNode:
    """Nonnegative factor with point evaluation and a certified box lower bound."""

    kind = "cost"

    def __init__(self, fid: str, neighbors: tuple[str, ...]):
        self.id = fid
        self.neighbors = tuple(neighbors)

    def evaluate(self, xs) -> float:
        raise NotImplementedError

    def box_lower(self, boxes) -> float:
        raise NotImplementedError


class UnivariateCost(CostFactorNode):
    kind = "cost"

    def __init__(self, fid, var_id, cost: nw.CostFunction):
        super().__init__(fid, (var_id,))
        self.cost = cost

    def evaluate(self, xs):
        return self.cost(xs[0])

    def box_lower(self, boxes):
        return self.cost.min_on(boxes[0])


class EdgeLossCost(CostFactorNode):
    """Resistive loss of one AC line over the four potential-copy scalars."""

    kind = "loss"

    def __init__(self, fid, neighbors, resistance, reactance):
        super().__init__(fid, neighbors)
        z2 = resistance * resistance + reactance * reactance
        self.scale = resistance / z2

    def evaluate(self, xs):
        a, b, c, d = xs
        return ((a - c) ** 2 + (b - d) ** 2) * self.scale

    def box_lower(self, boxes):
        A, B, C, D = boxes
        s = square(A - C) + square(B - D)
        return s.scale(self.scale).lo


class IVPowerCost(CostFactorNode):
    """Cost of the complex power V I* in rectangular components."""

    kind = "ivcost"

    def __init__(self, fid, neighbors, cost_active, cost_reactive):
        super().__init__(fid, neighbors)
        self.cost_active = cost_active
        self.cost_reactive = cost_reactive

    def evaluate(self, xs):
        vre, vim, ire, iim = xs
        total = 0.0
        if self.cost_active is not None:
            total += self.cost_active(vre * ire + vim * iim)
        if self.cost_reactive is not None:
            total += self.cost_reactive(vim * ire - vre * iim)
        return total

    def box_lower(self, boxes):
        VRE, VIM, IRE, IIM = boxes
        total = 0.0
        if self.cost_active is not None:
            total += self.cost_active.min_on(VRE * IRE + VIM * IIM)
        if self.cost_reactive is not None:
            total += self.cost_reactive.min_on(VIM * IRE - VRE * IIM)
        return total


class ResidualCost(CostFactorNode):
    """Conservation mismatch |q - sum(flows)| used by state estimation."""

    kind = "residual"

    def __init__(self, fid, neighbors, weight=1.0):
        super().__init__(fid, neighbors)
        self.weight = weight

    def evaluate(self, xs):
        return self.weight * abs(xs[0] - sum(xs[1:]))

    def box_lower(self, boxes):
        r = boxes[0] - sum_intervals(boxes[1:])
        return self.weight * abs_interval(r).lo


class CallableCost(CostFactorNode):
    """Generic factor from explicit callables (tests and synthetic models)."""

    kind = "custom"

    def __init__(self, fid, neighbors, fn, box_fn):
        super().__init__(fid, neighbors)
        self.fn = fn
        self.box_fn = box_fn

    def evaluate(self, xs):
        return self.fn(*xs)

    def box_lower(self, boxes):
        return self.box_fn(*boxes)


# ---------------------------------------------------------------------------
# constraint nodes

class ConstraintNode:
    """Hard constraint over scalar variable neighbors.

    ``enumerate_feasible`` must over-approximate: every cell tuple containing
    a feasible point is returned.  ``project`` returns a sound superset of the
    values a neighbor can take subject to the constraint with the remaining
    neighbors boxed, or ``None`` when the constraint is certainly empty.
    """

    kind = "constraint"

    def __init__(self, cid: str, neighbors: tuple[str, ...]):
        self.id = cid
        self.neighbors = tuple(neighbors)

    def satisfied(self, xs, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def box_feasible(self, boxes) -> bool:
        raise NotImplementedError

    def enumerate_feasible(self, cells):
        raise NotImplementedError

    def project(self, pos: int, boxes, m: int = 16) -> Interval | None:
        if not self.box_feasible(boxes):
            return None
        return self._cell_filter_project(pos, boxes, m)

    def _cell_filter_project(self, pos, boxes, m) -> Interval | None:
        """Generic fallback: keep the m sub-cells of boxes[pos] passing the box test."""
        box = boxes[pos]
        if box.is_singleton():
            return box if self.box_feasible(boxes) else None
        edges = [box.lo + box.width * i / m for i in range(m + 1)]
        kept = None
        probe = list(boxes)
        for i in range(m):
            probe[pos] = Interval(edges[i], edges[i + 1])
            if self.box_feasible(probe):
                cell = probe[pos]
                kept = cell if kept is None else hull(kept, cell)
        return kept


def _conservation_combos(q_cells, flow_cells_list):
    """Label tuples (a_q, a_f1, ..) with 0 in cell(q) - sum cell(f). Exact."""
    n = len(flow_cells_list)
    suffix = [Interval(0.0, 0.0)] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = suffix[i + 1] + Interval(
            min(c.lo for c in flow_cells_list[i]), max(c.hi for c in flow_cells_list[i])
        )
    q_hull = Interval(min(c.lo for c in q_cells), max(c.hi for c in q_cells))
    out = []

    def rec(i, partial, prefix):
        if i == n:
            for aq, qc in enumerate(q_cells):
                if qc.intersects(partial):
                    out.append((aq,) + prefix)
            return
        for af, fc in enumerate(flow_cells_list[i]):
            step = partial + fc
            if (step + suffix[i + 1]).intersects(q_hull):
                rec(i + 1, step, prefix + (af,))

    rec(0, Interval(0.0, 0.0), ())
    return out


def _intersecting_combos(cells_list):
    """Label tuples whose cells share a common point. Exact in one dimension."""
    out = []

    def rec(i, lo, hi, prefix):
        if i == len(cells_list):
            out.append(prefix)
            return
        for a, c in enumerate(cells_list[i]):
            nlo, nhi = max(lo, c.lo), min(hi, c.hi)
            if nlo <= nhi:
                rec(i + 1, nlo, nhi, prefix + (a,))

    rec(0, -math.inf, math.inf, ())
    return out


class NodeLaw(ConstraintNode):
    """Potential-copy equality plus (for non-slack nodes) flow conservation.

    One instance per component for componentwise (diagonal) physics; for
    coupled physics (AC) a single instance spans every component so that the
    node's ports stay whole in the merged graph.  Neighbor order: injections
    (one per component) + copies grouped by component + flows grouped by
    component.  Components share no variables, so the feasible set is the
    product of the per-component parts.
    """

    kind = "NodeLaw"

    def __init__(self, cid, node, components, q_vars, copies_by_k, flows_by_k):
        neighbors = tuple(q_vars)
        for group in copies_by_k:
            neighbors += tuple(group)
        for group in flows_by_k:
            neighbors += tuple(group)
        super().__init__(cid, neighbors)
        self.node = node
        self.components = tuple(components)
        self.has_q = bool(q_vars)
        self.nq = len(q_vars)
        self.copy_sizes = [len(g) for g in copies_by_k]
        self.flow_sizes = [len(g) for g in flows_by_k]

    def _split(self, seq):
        """Per-component views: (qs, copies_by_k, flows_by_k)."""
        qs = seq[:self.nq]
        off = self.nq
        copies = []
        for size in self.copy_sizes:
            copies.append(seq[off:off + size])
            off += size
        flows = []
        for size in self.flow_sizes:
            flows.append(seq[off:off + size])
            off += size
        return qs, copies, flows

    def satisfied(self, xs, tol=1e-9):
        qs, copies, flows = self._split(list(xs))
        for ki in range(len(self.components)):
            group = copies[ki]
            if group and max(group) - min(group) > tol:
                return False
            if self.has_q and abs(qs[ki] - sum(flows[ki])) > tol:
                return False
        return True

    def box_feasible(self, boxes):
        qs, copies, flows = self._split(list(boxes))
        for ki in range(len(self.components)):
            if copies[ki] and intersect_all(copies[ki]) is None:
                return False
            if self.has_q:
                if not (qs[ki] - sum_intervals(flows[ki])).contains(0.0):
                    return False
        return True

    def enumerate_feasible(self, cells):
        qs, copies, flows = self._split(list(cells))
        nk = len(self.components)
        copy_parts = [_intersecting_combos(copies[ki]) if copies[ki] else [()]
                      for ki in range(nk)]
        cons_parts = [
            _conservation_combos(qs[ki], flows[ki]) if self.has_q else [()]
            for ki in range(nk)
        ]
        tuples = []
        for cons_combo in _product_lists(cons_parts):
            q_lbl = tuple(p[0] for p in cons_combo) if self.has_q else ()
            flow_lbl = ()
            for p in cons_combo:
                flow_lbl += p[1:] if self.has_q else ()
            for copy_combo in _product_lists(copy_parts):
                copy_lbl = ()
                for p in copy_combo:
                    copy_lbl += p
                tuples.append(q_lbl + copy_lbl + flow_lbl)
        tuples.sort()
        return tuples, [CERTAIN] * len(tuples)

    def _role(self, pos):
        if pos < self.nq:
            return ("q", pos, 0)
        off = self.nq
        for ki, size in enumerate(self.copy_sizes):
            if pos < off + size:
                return ("copy", ki, pos - off)
            off += size
        for ki, size in enumerate(self.flow_sizes):
            if pos < off + size:
                return ("flow", ki, pos - off)
            off += size
        raise IndexError(pos)

    def project(self, pos, boxes, m=16):
        qs, copies, flows = self._split(list(boxes))
        for ki in range(len(self.components)):
            if copies[ki] and intersect_all(copies[ki]) is None:
                return None
            if self.has_q:
                if not (qs[ki] - sum_intervals(flows[ki])).contains(0.0):
                    return None
        role, ki, idx = self._role(pos)
        if role == "q":
            return sum_intervals(flows[ki])
        if role == "copy":
            others = [c for i, c in enumerate(copies[ki]) if i != idx]
            return intersect_all(others) if others else boxes[pos]
        if self.has_q:
            others = [f for i, f in enumerate(flows[ki]) if i != idx]
            return qs[ki] - sum_intervals(others)
        return boxes[pos]


class EdgeLaw(ConstraintNode):
    """Physics relation of one edge: both directed flows against the copies.

    Diagonal physics (component given): neighbors [pi_ij, phi_ij, pi_ji,
    phi_ji]; the reverse flow is the exact negation, so feasibility asks for a
    flow value in enclosure(pi boxes) & box(phi_ij) & -box(phi_ji), which is
    exact for the monotone kinds.  Coupled AC (component None): neighbors
    [pi_ij0, pi_ij1, pi_ji0, pi_ji1, phi_ij0, phi_ij1, phi_ji0, phi_ji1] with
    per-direction interval tests.
    """

    kind = "EdgeLaw"

    def __init__(self, cid, edge: nw.EdgeSpec, component, neighbors):
        super().__init__(cid, neighbors)
        self.edge = edge
        self.component = component
        self.diagonal = component is not None
        ph = edge.physics
        self.offset = ph.offset if isinstance(ph, nw.GasWeymouth) else 0.0
        self.exact = self.diagonal and not (
            isinstance(ph, nw.CustomTable) and ph.pad > 0
        )

    # -- diagonal helpers ---------------------------------------------------
    def _flow_set(self, box_pi_ij, box_pi_ji, box_phi_ij, box_phi_ji):
        enc = nw._monotone_map_interval(
            self.edge.physics, (box_pi_ij - box_pi_ji).shift(self.offset)
        )
        g = intersect(enc, box_phi_ij)
        if g is None:
            return None
        return intersect(g, -box_phi_ji)

    def satisfied(self, xs, tol=1e-9):
        if self.diagonal:
            pij, fij, pji, fji = xs
            want = nw._monotone_map(self.edge.physics, pij - pji + self.offset)
            return abs(fij - want) <= tol and abs(fji + want) <= tol
        a, b, c, d, fij0, fij1, fji0, fji1 = xs
        fwd = nw.edge_flow(self.edge, (a, b), (c, d), forward=True)
        rev = nw.edge_flow(self.edge, (c, d), (a, b), forward=False)
        return (
            abs(fij0 - fwd[0]) <= tol
            and abs(fij1 - fwd[1]) <= tol
            and abs(fji0 - rev[0]) <= tol
            and abs(fji1 - rev[1]) <= tol
        )

    def box_feasible(self, boxes):
        if self.diagonal:
            return self._flow_set(boxes[0], boxes[2], boxes[1], boxes[3]) is not None
        A, B, C, D = boxes[:4]
        fwd = nw.edge_flow_enclosure(self.edge, (A, B), (C, D), forward=True)
        rev = nw.edge_flow_enclosure(self.edge, (C, D), (A, B), forward=False)
        return (
            fwd[0].intersects(boxes[4])
            and fwd[1].intersects(boxes[5])
            and rev[0].intersects(boxes[6])
            and rev[1].intersects(boxes[7])
        )

    def enumerate_feasible(self, cells):
        tuples = []
        if self.diagonal:
            pij_cells, fij_cells, pji_cells, fji_cells = cells
            for ai, ci in enumerate(pij_cells):
                for aj, cj in enumerate(pji_cells):
                    enc = nw._monotone_map_interval(
                        self.edge.physics, (ci - cj).shift(self.offset)
                    )
                    for bi, fi in enumerate(fij_cells):
                        g = intersect(enc, fi)
                        if g is None:
                            continue
                        for bj, fj in enumerate(fji_cells):
                            if intersect(g, -fj) is not None:
                                tuples.append((ai, bi, aj, bj))
            tuples.sort()
            return tuples, [CERTAIN if self.exact else POSSIBLE] * len(tuples)
        pc = cells[:4]
        fc = cells[4:]
        for a0, A in enumerate(pc[0]):
            for a1, B in enumerate(pc[1]):
                for a2, C in enumerate(pc[2]):
                    for a3, D in enumerate(pc[3]):
                        fwd = nw.edge_flow_enclosure(self.edge, (A, B), (C, D), True)
                        rev = nw.edge_flow_enclosure(self.edge, (C, D), (A, B), False)
                        cands = []
                        ok = True
                        for enc, cell_list in zip(list(fwd) + list(rev), fc):
                            hits = [i for i, c in enumerate(cell_list) if c.intersects(enc)]
                            if not hits:
                                ok = False
                                break
                            cands.append(hits)
                        if not ok:
                            continue
                        for b0 in cands[0]:
                            for b1 in cands[1]:
                                for b2 in cands[2]:
                                    for b3 in cands[3]:
                                        tuples.append((a0, a1, a2, a3, b0, b1, b2, b3))
        tuples.sort()
        return tuples, [POSSIBLE] * len(tuples)

    def project(self, pos, boxes, m=16):
        if not self.diagonal:
            return super().project(pos, boxes, m)
        g = self._flow_set(boxes[0], boxes[2], boxes[1], boxes[3])
        if g is None:
            return None
        if pos == 1:
            return g
        if pos == 3:
            return -g
        drange = nw.monotone_map_inverse(self.edge.physics, g)
        if drange is None:
            return super().project(pos, boxes, m)
        # d = pi_ij - pi_ji + offset
        if pos == 0:
            return (drange + boxes[2]).shift(-self.offset)
        return (boxes[0].shift(self.offset)) - drange


class TransformLaw(ConstraintNode):
    """Combined law of a transform node: conservation plus the port relation.

    Neighbor order: injections (per component), in copies, out copies, in
    flows, out flows, then the optional compression-ratio control.
    """

    kind = "Transform"

    def __init__(self, cid, node, spec: nw.TransformSpec, k, q_ids, in_copies,
                 out_copies, in_flows, out_flows, alpha_id=None):
        neighbors = tuple(q_ids) + tuple(in_copies) + tuple(out_copies) + \
            tuple(in_flows) + tuple(out_flows) + ((alpha_id,) if alpha_id else ())
        super().__init__(cid, neighbors)
        self.node = node
        self.spec = spec
        self.k = k
        self.nq = len(q_ids)
        self.has_alpha = alpha_id is not None

    def _split(self, seq):
        k, nq = self.k, self.nq
        qs = seq[:nq]
        pin = seq[nq:nq + k]
        pout = seq[nq + k:nq + 2 * k]
        fin = seq[nq + 2 * k:nq + 3 * k]
        fout = seq[nq + 3 * k:nq + 4 * k]
        alpha = seq[-1] if self.has_alpha else None
        return qs, pin, pout, fin, fout, alpha

    def satisfied(self, xs, tol=1e-9):
        qs, pin, pout, fin, fout, alpha = self._split(list(xs))
        for q, fi, fo in zip(qs, fin, fout):
            if abs(q - fi - fo) > tol:
                return False
        want = nw.apply_transform(self.spec, pin, alpha=alpha)
        return all(abs(w - p) <= tol for w, p in zip(want, pout))

    def box_feasible(self, boxes):
        qs, pin, pout, fin, fout, alpha = self._split(list(boxes))
        for q, fi, fo in zip(qs, fin, fout):
            if not (q - fi - fo).contains(0.0):
                return False
        want = nw.transform_box(self.spec, pin, alpha_box=alpha)
        return all(w.intersects(p) for w, p in zip(want, pout))

    def enumerate_feasible(self, cells):
        qs, pin, pout, fin, fout, alpha = self._split(list(cells))
        cons_parts = []
        for q_cells, fi_cells, fo_cells in zip(qs, fin, fout):
            cons_parts.append(_conservation_combos(q_cells, [fi_cells, fo_cells]))
        alpha_cells = alpha if self.has_alpha else [None]
        port_part = []
        exact = self.spec.kind != "multiplicative" or self.k == 1
        for combo in _product_indices([len(c) for c in pin]):
            pin_boxes = [pin[i][a] for i, a in enumerate(combo)]
            for aa, abox in enumerate(alpha_cells):
                want = nw.transform_box(self.spec, pin_boxes, alpha_box=abox)
                for out_combo in _product_indices([len(c) for c in pout]):
                    if all(want[i].intersects(pout[i][a]) for i, a in enumerate(out_combo)):
                        port_part.append((combo, out_combo, (aa,) if self.has_alpha else ()))
        tuples = []
        for parts in _product_lists(cons_parts):
            q_lbl = tuple(p[0] for p in parts)
            fin_lbl = tuple(p[1] for p in parts)
            fout_lbl = tuple(p[2] for p in parts)
            for pin_lbl, pout_lbl, a_lbl in port_part:
                tuples.append(q_lbl + pin_lbl + pout_lbl + fin_lbl + fout_lbl + a_lbl)
        tuples.sort()
        return tuples, [CERTAIN if exact else POSSIBLE] * len(tuples)

    def project(self, pos, boxes, m=16):
        qs, pin, pout, fin, fout, alpha = self._split(list(boxes))
        if not self.box_feasible(boxes):
            return None
        k, nq = self.k, self.nq
        if pos < nq:
            return fin[pos] + fout[pos]
        if nq + 2 * k <= pos < nq + 3 * k:
            i = pos - nq - 2 * k
            return qs[i] - fout[i]
        if nq + 3 * k <= pos < nq + 4 * k:
            i = pos - nq - 3 * k
            return qs[i] - fin[i]
        if nq + k <= pos < nq + 2 * k:
            i = pos - nq - k
            want = nw.transform_box(self.spec, pin, alpha_box=alpha)
            return want[i]
        if nq <= pos < nq + k and self.spec.kind == "multiplicative" and k == 1:
            a = alpha if alpha is not None else Interval.point(self.spec.coeffs[0])
            r = divide(pout[0], a)
            return r if r is not None else boxes[pos]
        if self.has_alpha and pos == len(boxes) - 1:
            r = divide(pout[0], pin[0])
            return r if r is not None else boxes[pos]
        if nq <= pos < nq + k and self.spec.kind == "additive":
            i = pos - nq
            return pout[i].shift(-self.spec.coeffs[i])
        return self._cell_filter_project(pos, boxes, m)


class Aggregator(ConstraintNode):
    """Bound on the magnitude of a group injection sum: lo <= |sum q| <= hi."""

    kind = "Aggregator"

    def __init__(self, cid, neighbors, lower, upper, component):
        super().__init__(cid, neighbors)
        self.lower = lower
        self.upper = upper
        self.component = component

    def satisfied(self, xs, tol=1e-9):
        s = abs(sum(xs))
        return self.lower - tol <= s <= self.upper + tol

    def box_feasible(self, boxes):
        mag = abs_interval(sum_intervals(boxes))
        return mag.intersects(Interval(self.lower, self.upper))

    def enumerate_feasible(self, cells):
        hulls = [Interval(min(c.lo for c in cl), max(c.hi for c in cl)) for cl in cells]
        n = len(cells)
        suffix = [Interval(0.0, 0.0)] * (n + 1)
        for i in range(n - 1, -1, -1):
            suffix[i] = suffix[i + 1] + hulls[i]
        target_hull = Interval(-self.upper, self.upper)
        out = []

        def rec(i, partial, prefix):
            if i == n:
                mag = abs_interval(partial)
                if mag.intersects(Interval(self.lower, self.upper)):
                    out.append(prefix)
                return
            for a, c in enumerate(cells[i]):
                step = partial + c
                if (step + suffix[i + 1]).intersects(target_hull):
                    rec(i + 1, step, prefix + (a,))

        rec(0, Interval(0.0, 0.0), ())
        out.sort()
        return out, [CERTAIN] * len(out)

    def project(self, pos, boxes, m=16):
        if not self.box_feasible(boxes):
            return None
        others = sum_intervals(b for i, b in enumerate(boxes) if i != pos)
        branches = []
        for t in (Interval(self.lower, self.upper), Interval(-self.upper, -self.lower)):
            branches.append(t - others)
        return hull(branches[0], branches[1])


class LinearEq(ConstraintNode):
    """sum(coeff * x) = rhs; used by synthetic models and tests."""

    kind = "LinearEq"

    def __init__(self, cid, neighbors, coeffs, rhs):
        super().__init__(cid, neighbors)
        self.coeffs = tuple(float(c) for c in coeffs)
        self.rhs = float(rhs)

    def satisfied(self, xs, tol=1e-9):
        return abs(sum(c * x for c, x in zip(self.coeffs, xs)) - self.rhs) <= tol

    def box_feasible(self, boxes):
        s = sum_intervals(b.scale(c) for c, b in zip(self.coeffs, boxes))
        return s.contains(self.rhs)

    def enumerate_feasible(self, cells):
        scaled = [[c.scale(co) for c in cl] for co, cl in zip(self.coeffs, cells)]
        n = len(cells)
        suffix = [Interval(0.0, 0.0)] * (n + 1)
        for i in range(n - 1, -1, -1):
            lo = min(c.lo for c in scaled[i])
            hi = max(c.hi for c in scaled[i])
            suffix[i] = suffix[i + 1] + Interval(lo, hi)
        out = []

        def rec(i, partial, prefix):
            if i == n:
                if partial.contains(self.rhs):
                    out.append(prefix)
                return
            for a, c in enumerate(scaled[i]):
                step = partial + c
                if (step + suffix[i + 1]).contains(self.rhs):
                    rec(i + 1, step, prefix + (a,))

        rec(0, Interval(0.0, 0.0), ())
        out.sort()
        return out, [CERTAIN] * len(out)

    def project(self, pos, boxes, m=16):
        if not self.box_feasible(boxes):
            return None
        c = self.coeffs[pos]
        if c == 0.0:
            return boxes[pos]
        rest = sum_intervals(
            b.scale(co) for i, (co, b) in enumerate(zip(self.coeffs, boxes)) if i != pos
        )
        return (Interval.point(self.rhs) - rest).scale(1.0 / c)


def _product_indices(sizes):
    if not sizes:
        yield ()
        return
    head, rest = sizes[0], sizes[1:]
    for i in range(head):
        for tail in _product_indices(rest):
            yield (i,) + tail


def _product_lists(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product_lists(lists[1:]):
            yield (head,) + tail


# ---------------------------------------------------------------------------
# the factor graph

@dataclass(frozen=True)
class FactorGraph:
    variables: dict
    cost_factors: dict
    constraints: dict
    port_groups: tuple[tuple[str, ...], ...] = ()
    source: nw.Network | None = None
    _adj: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        adj: dict[str, list[str]] = {v: [] for v in self.variables}
        for f in list(self.cost_factors.values()) + list(self.constraints.values()):
            for v in f.neighbors:
                adj[v].append(f.id)
        object.__setattr__(self, "_adj", {v: tuple(sorted(fs)) for v, fs in adj.items()})

    def factors_of(self, var_id: str) -> tuple[str, ...]:
        return self._adj[var_id]

    def factor(self, fid: str):
        return self.cost_factors.get(fid) or self.constraints[fid]

    def all_factors(self):
        out = dict(self.cost_factors)
        out.update(self.constraints)
        return out

    def variable_ids(self) -> list[str]:
        return sorted(self.variables)


def pi_id(node, toward, k):
    return f"pi:{node}:{toward}:{k}"


def phi_id(frm, to, k):
    return f"phi:{frm}:{to}:{k}"


def q_id(node, k):
    return f"q:{node}:{k}"


def alpha_id(node):
    return f"alpha:{node}:0"


OBJECTIVES = ("min_cost", "distribution_loss", "optimal_gas", "state_estimation")


def build_gm(net: nw.Network, objective: str | None = None) -> FactorGraph:
    """Construct the graphical model for a validated network."""
    report = nw.validate_network(net)
    if not report.ok:
        raise InputError("invalid network: " + "; ".join(report.violations))
    obj = objective or net.objective
    if obj not in OBJECTIVES:
        raise InputError(f"unknown objective {obj!r}")
    k = net.components
    slack = net.slack_id
    kinds = {e.physics.kind for e in net.edges}
    _check_objective_supported(obj, kinds)

    nodes = sorted(net.nodes, key=lambda n: n.id)
    edges = sorted(net.edges, key=lambda e: (e.frm, e.to))
    variables: dict[str, VariableNode] = {}
    constraints: dict[str, ConstraintNode] = {}
    costs: dict[str, CostFactorNode] = {}
    ports: list[tuple[str, ...]] = []

    incident = {n.id: [] for n in nodes}
    for e in edges:
        incident[e.frm].append(e.to)
        incident[e.to].append(e.frm)

    # coupled physics ties the components together, so ports and node laws
    # must span every component to keep radial networks acyclic
    coupled = any(not nw.physics_is_diagonal(e.physics) for e in edges)

    for e in edges:
        for a, b in ((e.frm, e.to), (e.to, e.frm)):
            group_pis = []
            group_phis = []
            for ki in range(k):
                p = pi_id(a, b, ki)
                f = phi_id(a, b, ki)
                variables[p] = VariableNode(p, PotentialCopy(a, b, ki), net.node(a).potential[ki])
                variables[f] = VariableNode(f, FlowVar(a, b, ki), e.flow_domain[ki])
                group_pis.append(p)
                group_phis.append(f)
                if not coupled:
                    ports.append((p, f))
            if coupled:
                ports.append(tuple(group_pis) + tuple(group_phis))
    for n in nodes:
        if n.id == slack:
            continue
        if obj == "state_estimation" and not incident[n.id]:
            continue
        for ki in range(k):
            q = q_id(n.id, ki)
            variables[q] = VariableNode(q, InjectionVar(n.id, ki), n.injection[ki])
    for n in nodes:
        t = n.transform
        if t is not None and t.has_decision_ratio():
            a = alpha_id(n.id)
            variables[a] = VariableNode(a, ControlVar(n.id, 0), t.ratio_range)

    for n in nodes:
        name = n.id
        neighbors = sorted(incident[name])
        if n.transform is not None:
            constraints.update(_build_transform_law(net, n, neighbors, k, slack))
            continue
        conservation = name != slack and obj != "state_estimation"
        if coupled:
            components = list(range(k))
            copies_by_k = [[pi_id(name, j, ki) for j in neighbors] for ki in components]
            if conservation:
                q_vars = [q_id(name, ki) for ki in components]
                flows_by_k = [[phi_id(name, j, ki) for j in neighbors] for ki in components]
            else:
                q_vars = []
                flows_by_k = [[] for _ in components]
            if conservation or neighbors:
                cid = f"law:{name}"
                constraints[cid] = NodeLaw(cid, name, components, q_vars,
                                           copies_by_k, flows_by_k)
            continue
        for ki in range(k):
            copies = [pi_id(name, j, ki) for j in neighbors]
            flows = [phi_id(name, j, ki) for j in neighbors]
            cid = f"law:{name}:{ki}"
            if conservation:
                constraints[cid] = NodeLaw(cid, name, [ki], [q_id(name, ki)],
                                           [copies], [flows])
            elif copies:
                constraints[cid] = NodeLaw(cid, name, [ki], [], [copies], [[]])

    for e in edges:
        if nw.physics_is_diagonal(e.physics):
            for ki in range(k):
                cid = f"edge:{e.frm}:{e.to}:{ki}"
                neigh = (
                    pi_id(e.frm, e.to, ki), phi_id(e.frm, e.to, ki),
                    pi_id(e.to, e.frm, ki), phi_id(e.to, e.frm, ki),
                )
                constraints[cid] = EdgeLaw(cid, e, ki, neigh)
        else:
            cid = f"edge:{e.frm}:{e.to}"
            neigh = (
                pi_id(e.frm, e.to, 0), pi_id(e.frm, e.to, 1),
                pi_id(e.to, e.frm, 0), pi_id(e.to, e.frm, 1),
                phi_id(e.frm, e.to, 0), phi_id(e.frm, e.to, 1),
                phi_id(e.to, e.frm, 0), phi_id(e.to, e.frm, 1),
            )
            constraints[cid] = EdgeLaw(cid, e, None, neigh)

    _build_cost_factors(net, obj, nodes, edges, incident, slack, k, variables, costs)

    for idx, agg in enumerate(net.aggregators):
        cid = f"agg:{idx}"
        members = sorted(agg.members)
        neigh = tuple(q_id(m, agg.component) for m in members)
        constraints[cid] = Aggregator(cid, neigh, agg.lower, agg.upper, agg.component)

    gm = FactorGraph(
        variables=variables,
        cost_factors=costs,
        constraints=constraints,
        port_groups=tuple(ports),
        source=net,
    )
    _check_cost_nonnegative(gm)
    return gm


def _check_objective_supported(obj, kinds):
    if obj == "distribution_loss" and kinds - {"ac_power"}:
        bad = ", ".join(sorted(kinds - {"ac_power"}))
        raise InputError(f"unsupported objective/physics combination: distribution_loss with {bad}")
    if obj == "optimal_gas" and kinds - {"gas"}:
        bad = ", ".join(sorted(kinds - {"gas"}))
        raise InputError(f"unsupported objective/physics combination: optimal_gas with {bad}")
    if "ac_current" in kinds and len(kinds) > 1:
        raise InputError("unsupported objective/physics combination: mixed ac_current network")


def _build_transform_law(net, n, neighbors, k, slack):
    t = n.transform
    if n.id == slack:
        raise InputError("transform on the slack node is not supported")
    others = sorted(neighbors)
    if set(others) != {t.in_node, t.out_node}:
        raise InputError(f"node {n.id}: transform ports do not match its neighbors")
    q_ids = [q_id(n.id, ki) for ki in range(k)]
    in_copies = [pi_id(n.id, t.in_node, ki) for ki in range(k)]
    out_copies = [pi_id(n.id, t.out_node, ki) for ki in range(k)]
    in_flows = [phi_id(n.id, t.in_node, ki) for ki in range(k)]
    out_flows = [phi_id(n.id, t.out_node, ki) for ki in range(k)]
    aid = alpha_id(n.id) if t.has_decision_ratio() else None
    cid = f"xform:{n.id}"
    law = TransformLaw(cid, n.id, t, k, q_ids, in_copies, out_copies, in_flows,
                       out_flows, alpha_id=aid)
    return {cid: law}


def _build_cost_factors(net, obj, nodes, edges, incident, slack, k, variables, costs):
    if obj == "distribution_loss":
        for e in edges:
            fid = f"losscost:{e.frm}:{e.to}"
            neigh = (
                pi_id(e.frm, e.to, 0), pi_id(e.frm, e.to, 1),
                pi_id(e.to, e.frm, 0), pi_id(e.to, e.frm, 1),
            )
            costs[fid] = EdgeLossCost(fid, neigh, e.physics.resistance, e.physics.reactance)
        return
    if obj == "state_estimation":
        for n in nodes:
            if n.id == slack:
                continue
            for ki in range(k):
                flows = [phi_id(n.id, j, ki) for j in sorted(incident[n.id])]
                if not flows:
                    continue
                fid = f"resid:{n.id}:{ki}"
                costs[fid] = ResidualCost(fid, (q_id(n.id, ki),) + tuple(flows))
        return
    # min_cost and optimal_gas
    iv_net = any(e.physics.kind == "ac_current" for e in edges)
    for n in nodes:
        if n.id == slack:
            continue
        node_costs = n.costs if n.costs else (None,) * k
        if iv_net:
            if all(c is None for c in node_costs):
                continue
            neigh_nodes = sorted(incident[n.id])
            if not neigh_nodes:
                raise InputError(f"node {n.id}: current-voltage cost needs an incident edge")
            j = neigh_nodes[0]
            fid = f"ivcost:{n.id}"
            neigh = (pi_id(n.id, j, 0), pi_id(n.id, j, 1), q_id(n.id, 0), q_id(n.id, 1))
            costs[fid] = IVPowerCost(fid, neigh, node_costs[0],
                                     node_costs[1] if k > 1 else None)
            continue
        for ki in range(k):
            c = node_costs[ki] if ki < len(node_costs) else None
            if c is None:
                continue
            fid = f"cost:{n.id}:{ki}"
            costs[fid] = UnivariateCost(fid, q_id(n.id, ki), c)
    if obj == "optimal_gas":
        for n in nodes:
            t = n.transform
            if t is not None and t.has_decision_ratio() and t.ratio_cost is not None:
                fid = f"alphacost:{n.id}"
                costs[fid] = UnivariateCost(fid, alpha_id(n.id), t.ratio_cost)


def _check_cost_nonnegative(gm: FactorGraph):
    for fid, f in sorted(gm.cost_factors.items()):
        boxes = [gm.variables[v].domain for v in f.neighbors]
        low = f.box_lower(boxes)
        if low < -1e-12:
            raise InputError(
                f"cost factor {fid} is negative (min {low}) on its domain; "
                "factors must map to nonnegative reals"
            )


def add_aggregator(gm: FactorGraph, member_nodes, lower, upper, component=0) -> FactorGraph:
    """Return a new graph with one extra aggregator constraint."""
    if lower < 0 or lower > upper:
        raise InputError("aggregator bounds must satisfy 0 <= lower <= upper")
    members = sorted(set(member_nodes))
    if len(members) < 2:
        raise InputError("aggregator needs at least two member nodes")
    neigh = []
    for m in members:
        qid = q_id(m, component)
        if qid not in gm.variables:
            raise InputError(f"aggregator member {m} has no injection variable for component {component}")
        neigh.append(qid)
    base = f"agg:{','.join(members)}:{component}"
    cid = base
    suffix = 2
    while cid in gm.constraints:
        cid = f"{base}:{suffix}"
        suffix += 1
    constraints = dict(gm.constraints)
    constraints[cid] = Aggregator(cid, tuple(neigh), float(lower), float(upper), component)
    return replace(gm, constraints=constraints)


# ---------------------------------------------------------------------------
# structure

def _coarse_id(gm: FactorGraph):
    owner = {}
    for group in gm.port_groups:
        rep = "port:" + group[0]
        for v in group:
            owner[v] = rep
    return lambda v: owner.get(v, v)


def is_tree(gm: FactorGraph) -> bool:
    """True iff the port-merged bipartite graph is acyclic (per component)."""
    coarse = _coarse_id(gm)
    parent: dict[str, str] = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    verts = set()
    for v in gm.variables:
        verts.add(coarse(v))
    for fid in list(gm.cost_factors) + list(gm.constraints):
        verts.add(fid)
    for v in verts:
        parent[v] = v
    for fid, f in gm.all_factors().items():
        seen = []
        for v in f.neighbors:
            c = coarse(v)
            if c not in seen:
                seen.append(c)
        for c in seen:
            ra, rb = find(fid), find(c)
            if ra == rb:
                return False
            parent[ra] = rb
    return True


def gm_counts(gm: FactorGraph) -> dict:
    return {
        "variables": len(gm.variables),
        "cost_factors": len(gm.cost_factors),
        "constraints": len(gm.constraints),
        "ports": len(gm.port_groups),
    }


def dump_gm(gm: FactorGraph) -> str:
    """Stable line-oriented dump for golden tests and debugging."""
    lines = []
    for vid in sorted(gm.variables):
        v = gm.variables[vid]
        d = v.domain
        lines.append(f"var {vid} kind={type(v.semantic).__name__} domain=[{d.lo!r},{d.hi!r}]")
    for fid in sorted(gm.cost_factors):
        f = gm.cost_factors[fid]
        lines.append(f"factor {fid} kind={f.kind} neighbors={','.join(f.neighbors)}")
    for cid in sorted(gm.constraints):
        c = gm.constraints[cid]
        lines.append(f"constraint {cid} kind={c.kind} neighbors={','.join(c.neighbors)}")
    return "\n".join(lines) + "\n"


def assignment_satisfies(gm: FactorGraph, values: dict, tol: float = 1e-9) -> bool:
    """Membership of a full point assignment in every constraint set."""
    for c in gm.constraints.values():
        xs = [values[v] for v in c.neighbors]
        if not c.satisfied(xs, tol=tol):
            return False
    return True
