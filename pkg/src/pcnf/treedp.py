"""Exact min-sum dynamic programming on tree-structured models.

One forward (leaves to root) and one backward (root to leaves) sweep over the
port-merged tree.  Coarse nodes are either singleton variables or directed
edge ports, whose labels are the cell-index tuples of their members; factor
and constraint nodes sit between them.  Constraints enter as hard factors
(zero on feasible cell tuples, +inf off them), so the recursion covers cost
and constraint nodes uniformly.  Every argmin tie breaks to the lowest label
index, which keeps runs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, InputError
from .factorgraph import is_tree


@dataclass
class RootedTree:
    root: str
    roots: list
    parent: dict
    children: dict
    order: list          # processing order, leaves first
    groups: dict         # coarse id -> member variable ids
    var_group: dict      # variable id -> coarse id


@dataclass
class Messages:
    kappa: dict          # coarse variable id -> table toward its parent factor
    gamma: dict          # factor id -> table toward its parent coarse variable
    model: object        # discretized tables used (needed by the backward pass)
    tree: object


def _coarse_groups(gm):
    groups = {}
    var_group = {}
    for port in gm.port_groups:
        gid = "port:" + port[0]
        groups[gid] = tuple(port)
        for v in port:
            var_group[v] = gid
    for vid in gm.variables:
        if vid not in var_group:
            groups[vid] = (vid,)
            var_group[vid] = vid
    return groups, var_group


def root_tree(gm, root: str) -> RootedTree:
    """Orient the port-merged bipartite graph away from the chosen variable."""
    if not is_tree(gm):
        raise InputError("not a tree")
    if root not in gm.variables:
        raise InputError(f"root {root!r} is not a variable node")
    groups, var_group = _coarse_groups(gm)

    adjacency = {gid: set() for gid in groups}
    for fid, f in gm.all_factors().items():
        adjacency[fid] = set()
        for v in f.neighbors:
            gid = var_group[v]
            adjacency[fid].add(gid)
            adjacency[gid].add(fid)

    parent: dict = {}
    children: dict = {v: [] for v in adjacency}
    order: list = []
    roots = [var_group[root]]
    visited = set()

    def explore(start):
        parent[start] = None
        stack = [(start, iter(sorted(adjacency[start])))]
        visited.add(start)
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt in visited:
                    continue
                visited.add(nxt)
                parent[nxt] = node
                children[node].append(nxt)
                stack.append((nxt, iter(sorted(adjacency[nxt]))))
                advanced = True
                break
            if not advanced:
                order.append(node)
                stack.pop()

    explore(roots[0])
    # disconnected pieces: root each at its smallest group vertex
    for gid in sorted(groups):
        if gid not in visited:
            roots.append(gid)
            explore(gid)
    for gid in sorted(adjacency):
        if gid not in visited:
            roots.append(gid)
            explore(gid)
    return RootedTree(
        root=roots[0],
        roots=roots,
        parent=parent,
        children=children,
        order=order,
        groups=groups,
        var_group=var_group,
    )


def _group_shape(tree, partition, gid):
    return tuple(partition.count(v) for v in tree.groups[gid])


def _factor_rows(gm, model, fid):
    """(rows, values): cell tuples and their factor values, lexicographic."""
    if fid in model.constraints:
        dc = model.constraints[fid]
        rows = dc.tuples
        vals = np.zeros(len(rows))
        return rows, vals
    df = model.factors[fid]
    shape = df.table.shape
    rows = np.array(list(np.ndindex(*shape)), dtype=np.int32).reshape(-1, len(shape))
    return rows, df.table.reshape(-1).astype(float).copy()


def _shared_info(tree, partition, gm, fid, gid):
    """Positions shared between factor fid and group gid.

    Returns (member_axes, row_cols, shared_shape): group member axes touched
    by the factor, the matching columns of the factor's row array, and the
    cell counts along those axes.
    """
    f = gm.factor(fid)
    members = tree.groups[gid]
    member_axes = []
    row_cols = []
    for axis, v in enumerate(members):
        if v in f.neighbors:
            member_axes.append(axis)
            row_cols.append(f.neighbors.index(v))
    shape = tuple(partition.count(members[a]) for a in member_axes)
    return member_axes, row_cols, shape


def _flat_shared(rows, row_cols, shape):
    idx = np.zeros(len(rows), dtype=np.int64)
    for col, dim in zip(row_cols, shape):
        idx = idx * dim + rows[:, col]
    return idx


def forward_pass(gm, tree: RootedTree, partition, model) -> Messages:
    """Leaves-to-root sweep computing all kappa and gamma tables."""
    kappa: dict = {}
    gamma: dict = {}
    factors = gm.all_factors()
    for node in tree.order:
        if node in factors:
            gamma[node] = _factor_message(gm, tree, partition, model, node, kappa)
        else:
            shape = _group_shape(tree, partition, node)
            total = np.zeros(int(np.prod(shape)))
            for child in tree.children[node]:
                total = total + gamma[child]
            kappa[node] = total
    return Messages(kappa=kappa, gamma=gamma, model=model, tree=tree)


def _factor_message(gm, tree, partition, model, fid, kappa):
    rows, vals = _factor_rows(gm, model, fid)
    total = vals.copy()
    for child in tree.children[fid]:
        axes, cols, shape = _shared_info(tree, partition, gm, fid, child)
        k_shared = _min_onto_shared(kappa[child], _group_shape(tree, partition, child), axes)
        if len(rows) and len(cols):
            total = total + k_shared.reshape(-1)[_flat_shared(rows, cols, shape)]
        elif len(rows):
            total = total + float(k_shared.min())
    parent = tree.parent[fid]
    if parent is None:
        # factor as its own component root: collapse to a scalar pseudo-message
        return np.array([total.min() if len(total) else np.inf])
    p_shape = _group_shape(tree, partition, parent)
    axes, cols, shape = _shared_info(tree, partition, gm, fid, parent)
    acc = np.full(int(np.prod(shape)) if shape else 1, np.inf)
    if len(rows):
        idx = _flat_shared(rows, cols, shape)
        np.minimum.at(acc, idx, total)
    return _expand_to_group(acc.reshape(shape if shape else (1,)), p_shape, axes).reshape(-1)


def _min_onto_shared(flat, group_shape, keep_axes):
    a = flat.reshape(group_shape if group_shape else (1,))
    drop = tuple(i for i in range(len(group_shape)) if i not in keep_axes)
    if drop:
        a = a.min(axis=drop)
    return a


def _expand_to_group(shared, group_shape, member_axes):
    if not group_shape:
        return shared
    view_shape = [1] * len(group_shape)
    for k, axis in enumerate(member_axes):
        view_shape[axis] = group_shape[axis]
    a = shared.reshape(view_shape)
    return np.ascontiguousarray(np.broadcast_to(a, group_shape))


def backward_pass(gm, tree: RootedTree, messages: Messages) -> dict:
    """Root-to-leaves assignment; returns one cell label per scalar variable."""
    model = messages.model
    partition = model.partition
    factors = gm.all_factors()
    coarse_label: dict = {}

    for root in tree.roots:
        if root in factors:
            # degenerate single-factor component; nothing to assign below it
            if not np.isfinite(messages.gamma[root]).any():
                raise InfeasibleError("discretization-infeasible", stage="discretization")
            continue
        shape = _group_shape(tree, partition, root)
        total = np.zeros(int(np.prod(shape)))
        for child in tree.children[root]:
            total = total + messages.gamma[child]
        if not np.isfinite(total.min()):
            raise InfeasibleError("discretization-infeasible", stage="discretization")
        coarse_label[root] = int(np.argmin(total))

    stack = list(tree.roots)
    while stack:
        node = stack.pop()
        for fid in sorted(tree.children.get(node, []), reverse=True):
            if fid in factors:
                _assign_children(gm, tree, partition, model, messages, fid, coarse_label)
                for child in tree.children[fid]:
                    stack.append(child)
            else:
                stack.append(fid)

    assignment = {}
    for gid, members in tree.groups.items():
        if gid not in coarse_label:
            continue
        shape = _group_shape(tree, partition, gid)
        labels = np.unravel_index(coarse_label[gid], shape if shape else (1,))
        for v, lab in zip(members, labels):
            assignment[v] = int(lab)
    return assignment


def _assign_children(gm, tree, partition, model, messages, fid, coarse_label):
    rows, vals = _factor_rows(gm, model, fid)
    total = vals.copy()
    child_info = []
    for child in tree.children[fid]:
        axes, cols, shape = _shared_info(tree, partition, gm, fid, child)
        g_shape = _group_shape(tree, partition, child)
        k_shared = _min_onto_shared(messages.kappa[child], g_shape, axes)
        child_info.append((child, axes, cols, shape, g_shape))
        if len(rows) and len(cols):
            total = total + k_shared.reshape(-1)[_flat_shared(rows, cols, shape)]
    parent = tree.parent[fid]
    mask = np.ones(len(rows), dtype=bool)
    if parent is not None:
        axes, cols, shape = _shared_info(tree, partition, gm, fid, parent)
        if cols:
            p_shape = _group_shape(tree, partition, parent)
            p_label = np.unravel_index(coarse_label[parent], p_shape)
            want = 0
            for col_dim, axis in zip(shape, axes):
                want = want * col_dim + p_label[axis]
            mask = _flat_shared(rows, cols, shape) == want
    cand = np.nonzero(mask)[0]
    if len(cand) == 0 or not np.isfinite(total[cand].min()):
        raise InfeasibleError("discretization-infeasible", stage="discretization")
    best = int(cand[np.argmin(total[cand])])
    row = rows[best]
    for child, axes, cols, shape, g_shape in child_info:
        full = list(np.zeros(len(g_shape), dtype=int))
        kap = messages.kappa[child].reshape(g_shape if g_shape else (1,))
        slicer = [slice(None)] * len(g_shape)
        for axis, col in zip(axes, cols):
            full[axis] = int(row[col])
            slicer[axis] = int(row[col])
        wild_axes = [i for i in range(len(g_shape)) if i not in axes]
        if wild_axes:
            sub = kap[tuple(slicer)]
            flat = int(np.argmin(sub.reshape(-1)))
            wild_labels = np.unravel_index(flat, tuple(g_shape[i] for i in wild_axes))
            for axis, lab in zip(wild_axes, wild_labels):
                full[axis] = int(lab)
        flat_label = 0
        for dim, lab in zip(g_shape, full):
            flat_label = flat_label * dim + lab
        coarse_label[child] = int(flat_label)


def solve_tree(gm, partition, model, root: str | None = None):
    """DP optimum of the discretized problem on a tree model.

    Returns (bound value, per-variable cell labels, per-variable representative
    midpoints).  The representative point is diagnostic only; it is not claimed
    feasible for the continuous problem.
    """
    if root is None:
        root = min(gm.variables)
    tree = root_tree(gm, root)
    messages = forward_pass(gm, tree, partition, model)
    root_gid = tree.var_group[root]
    shape = _group_shape(tree, partition, root_gid)
    total = np.zeros(int(np.prod(shape)))
    for child in tree.children[root_gid]:
        total = total + messages.gamma[child]
    value = float(total.min())
    for gid in tree.roots[1:]:
        if gid in gm.all_factors():
            value += float(messages.gamma[gid].min())
            continue
        sub = np.zeros(int(np.prod(_group_shape(tree, partition, gid))))
        for child in tree.children[gid]:
            sub = sub + messages.gamma[child]
        value += float(sub.min())
    if not np.isfinite(value):
        raise InfeasibleError("discretization-infeasible", stage="discretization")
    assignment = backward_pass(gm, tree, messages)
    rep = {v: partition.cell(v, lab).mid for v, lab in assignment.items()}
    return value, assignment, rep
