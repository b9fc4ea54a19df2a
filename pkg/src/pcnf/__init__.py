"""Certified lower bounds for physics-constrained network flow optimization.

Networks (gas, AC power, generic dissipative flows) become factor-graph
models; interval-partitioned belief LPs, exact tree dynamic programming,
super-node hierarchies and bound tightening produce certified bounds and
candidate assignments, validated against brute-force oracles.
"""

from .errors import CapExceededError, InfeasibleError, InputError, PcnfError, SolverError
from .intervals import Interval
from .network import (
    ACCurrentVoltage,
    ACPowerVoltage,
    AggregatorSpec,
    CostFunction,
    CustomTable,
    Dissipative,
    EdgeSpec,
    GasWeymouth,
    Network,
    NodeSpec,
    TransformSpec,
    apply_transform,
    edge_flow,
    edge_flow_enclosure,
    load_network,
    validate_network,
)
from .factorgraph import FactorGraph, add_aggregator, build_gm, dump_gm, is_tree
from .discretize import (
    DiscretizedConstraint,
    DiscretizedFactor,
    DiscretizedModel,
    Partition,
    build_partition,
    discretize_model,
    feasible_tuples,
    lower_bound_table,
    partition_uniform,
)
from .lpbp import (
    BeliefLP,
    LPSolution,
    SuperNodeSet,
    build_hierarchy_lp,
    build_int_part_lp,
    check_integrality,
    generate_supernodes,
    solve_lp,
)
from .lpio import export_lp, export_lp_string, lp_equal, parse_lp_file, parse_lp_string
from .treedp import Messages, RootedTree, backward_pass, forward_pass, root_tree, solve_tree
from .tighten import BoundsState, initial_bounds, tighten_all, tighten_once
from .oracle import OracleResult, global_bounds, grid_enumerate, lp_vertex_enumerate
from .pipeline import RunConfig, run_export, run_oracle, run_solve, run_validate

__version__ = "0.1.0"
