"""Domain shrinking by local constraint propagation before discretization.

Each variable is tightened against every incident constraint node with the
other neighbors boxed at their current intervals; cost factors never tighten.
Monotone and linear constraint kinds use exact interval projections, the rest
fall back to filtering m sub-cells of the variable's own interval, so the
result is always a sound superset of the local feasible set.  Sweeps are
Jacobi by default (all variables against the previous sweep's bounds, safe to
run in parallel) with a Gauss-Seidel option that usually converges in fewer
sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InfeasibleError
from .intervals import Interval, intersect


@dataclass
class BoundsState:
    bounds: dict
    sweeps: int = 0
    last_change: float = math.inf
    history: list = field(default_factory=list)

    def interval(self, var_id: str) -> Interval:
        return self.bounds[var_id]


def initial_bounds(gm) -> BoundsState:
    return BoundsState(bounds={vid: v.domain for vid, v in gm.variables.items()})


def tighten_once(gm, state: BoundsState, var_id: str, m: int = 16) -> Interval:
    """New interval for one variable from all its incident constraints."""
    current = state.bounds[var_id]
    for cid in gm.factors_of(var_id):
        factor = gm.factor(cid)
        if cid not in gm.constraints:
            continue  # cost factors do not tighten
        pos = factor.neighbors.index(var_id)
        boxes = [state.bounds[v] for v in factor.neighbors]
        boxes[pos] = current
        proj = factor.project(pos, boxes, m=m)
        if proj is None:
            raise InfeasibleError(
                f"variable {var_id} has no feasible value under {cid}", stage="tightening"
            )
        shrunk = intersect(current, proj)
        if shrunk is None:
            raise InfeasibleError(
                f"variable {var_id} interval emptied by {cid}", stage="tightening"
            )
        current = shrunk
    return current


def tighten_all(
    gm,
    state: BoundsState | None = None,
    max_sweeps: int = 50,
    tol: float = 1e-6,
    m: int = 16,
    schedule: str = "jacobi",
) -> BoundsState:
    """Repeat full sweeps until the largest endpoint move drops below tol."""
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    if schedule not in ("jacobi", "gauss-seidel"):
        raise ValueError(f"unknown schedule {schedule!r}")
    if state is None:
        state = initial_bounds(gm)
    order = sorted(gm.variables)
    bounds = dict(state.bounds)
    sweeps = 0
    change = math.inf
    history = []
    while sweeps < max_sweeps and change > tol:
        frozen = BoundsState(bounds=dict(bounds))
        live = BoundsState(bounds=bounds)
        change = 0.0
        for vid in order:
            src = frozen if schedule == "jacobi" else live
            new = tighten_once(gm, src, vid, m=m)
            old = bounds[vid]
            assert new.lo >= old.lo - 1e-12 and new.hi <= old.hi + 1e-12, "nesting violated"
            change = max(change, abs(new.lo - old.lo), abs(new.hi - old.hi))
            bounds[vid] = new
        sweeps += 1
        history.append(change)
    return BoundsState(bounds=bounds, sweeps=sweeps, last_change=change, history=history)
