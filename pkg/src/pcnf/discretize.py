"""Interval partitions of variable domains and the finite tables built on them.

A partition stores sorted breakpoints per variable; cells are the closed
intervals between consecutive breakpoints (shared endpoints allowed, coverage
exact).  Factor tables hold certified lower bounds per cell tuple; constraint
tables hold every cell tuple whose box cannot be refuted by the interval test
(over-approximation only, never under-approximation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .intervals import Interval


@dataclass(frozen=True)
class Partition:
    breakpoints: dict

    def cells(self, var_id: str) -> list[Interval]:
        bp = self.breakpoints[var_id]
        if len(bp) == 2 and bp[0] == bp[1]:
            return [Interval(bp[0], bp[1])]
        return [Interval(bp[i], bp[i + 1]) for i in range(len(bp) - 1)]

    def count(self, var_id: str) -> int:
        bp = self.breakpoints[var_id]
        if len(bp) == 2 and bp[0] == bp[1]:
            return 1
        return len(bp) - 1

    def cell(self, var_id: str, label: int) -> Interval:
        return self.cells(var_id)[label]

    def domain(self, var_id: str) -> Interval:
        bp = self.breakpoints[var_id]
        return Interval(bp[0], bp[-1])

    def refine(self, var_id: str, label: int) -> "Partition":
        """Bisect one cell; every other cell is untouched (nesting holds)."""
        cell = self.cell(var_id, label)
        if cell.width == 0.0:
            raise ValueError(f"cannot refine zero-width cell {label} of {var_id}")
        mid = cell.mid
        bp = list(self.breakpoints[var_id])
        bp.insert(label + 1, mid)
        new = dict(self.breakpoints)
        new[var_id] = tuple(bp)
        return Partition(new)

    def widths(self, var_id: str) -> list[float]:
        return [c.width for c in self.cells(var_id)]


def partition_uniform(domain: Interval, t: int) -> tuple[float, ...]:
    """Breakpoints of t equal-width cells covering the domain exactly."""
    if t < 1:
        raise ValueError("cell count must be at least 1")
    if domain.is_singleton():
        return (domain.lo, domain.hi)
    bp = [domain.lo + domain.width * i / t for i in range(t + 1)]
    bp[0] = domain.lo
    bp[-1] = domain.hi
    return tuple(bp)


def build_partition(gm, t: int, bounds: dict | None = None) -> Partition:
    """Uniform t-cell partition of every variable (singletons get one cell).

    ``bounds`` overrides variable domains (tightened boxes).
    """
    out = {}
    for vid, var in gm.variables.items():
        dom = bounds[vid] if bounds is not None else var.domain
        out[vid] = partition_uniform(dom, t)
    return Partition(out)


@dataclass(frozen=True)
class DiscretizedFactor:
    factor_id: str
    neighbors: tuple[str, ...]
    table: np.ndarray
    provenance: str


@dataclass(frozen=True)
class DiscretizedConstraint:
    constraint_id: str
    neighbors: tuple[str, ...]
    tuples: np.ndarray          # (n_feasible, degree) int32, lexicographically sorted
    verdicts: tuple[str, ...]   # "certain" | "possible", aligned with tuples

    @property
    def empty(self) -> bool:
        return len(self.tuples) == 0

    def tuple_set(self) -> set:
        return {tuple(int(x) for x in row) for row in self.tuples}


def lower_bound_table(factor, partition: Partition) -> DiscretizedFactor:
    """Certified per-cell lower bounds of a cost factor."""
    cell_lists = [partition.cells(v) for v in factor.neighbors]
    shape = tuple(len(c) for c in cell_lists)
    table = np.empty(shape, dtype=float)
    for idx in np.ndindex(*shape):
        boxes = [cell_lists[d][i] for d, i in enumerate(idx)]
        val = factor.box_lower(boxes)
        if not math.isfinite(val):
            raise InputError(f"factor {factor.id} not lower-bounded on cell {idx}")
        table[idx] = val
    provenance = "closed-form" if factor.kind == "cost" else "interval"
    return DiscretizedFactor(factor.id, factor.neighbors, table, provenance)


def feasible_tuples(constraint, partition: Partition) -> DiscretizedConstraint:
    """All cell tuples the interval test cannot refute, with verdicts."""
    cell_lists = [partition.cells(v) for v in constraint.neighbors]
    tuples, verdicts = constraint.enumerate_feasible(cell_lists)
    arr = np.array(tuples, dtype=np.int32).reshape(len(tuples), len(constraint.neighbors))
    return DiscretizedConstraint(constraint.id, constraint.neighbors, arr, tuple(verdicts))


@dataclass(frozen=True)
class DiscretizedModel:
    partition: Partition
    factors: dict
    constraints: dict

    def empty_constraints(self) -> list[str]:
        return sorted(cid for cid, dc in self.constraints.items() if dc.empty)


def discretize_model(gm, partition: Partition) -> DiscretizedModel:
    factors = {fid: lower_bound_table(f, partition) for fid, f in sorted(gm.cost_factors.items())}
    constraints = {cid: feasible_tuples(c, partition) for cid, c in sorted(gm.constraints.items())}
    return DiscretizedModel(partition, factors, constraints)
