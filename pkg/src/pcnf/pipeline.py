"""End-to-end drivers shared by the HTTP service and the CLI.

parse -> validate -> build GM -> (tighten) -> partition -> solve (tree DP or
belief LP) -> optional refinement rounds -> report.  Reports are plain dicts,
JSON-ready, with stable key ordering; wall-clock timings live under the
separate "timings" key so determinism comparisons can drop them.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

from .errors import CapExceededError, InfeasibleError, InputError
from . import discretize as dz
from . import factorgraph as fg
from . import lpbp
from . import lpio
from . import oracle as orc
from . import tighten as bt
from . import treedp
from .network import load_network, validate_network

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_CAP = 4

STATE_EXIT = {
    "solved": EXIT_OK,
    "ok": EXIT_OK,
    "input-invalid": EXIT_INVALID,
    "parse-error": EXIT_PARSE,
    "discretization-infeasible": EXIT_INFEASIBLE,
    "locally-infeasible": EXIT_INFEASIBLE,
    "lp-infeasible": EXIT_INFEASIBLE,
    "cap-exceeded": EXIT_CAP,
}


@dataclass
class RunConfig:
    t: int = 8
    refine_rounds: int = 0
    tighten_sweeps: int = 0
    hierarchy: str = "off"        # off | minimal | size:<K>
    solver: str = "auto"          # auto | lp | tree
    export_format: str = "mps"
    seed: int = 0
    refine: str = "widest"        # widest | fractional
    with_oracle: bool = False
    objective: str | None = None
    oracle_cap: int | None = None
    feas_tol: float = 1e-9
    int_tol: float = 1e-6

    def check(self):
        if self.t < 1:
            raise InputError("cells per variable t must be >= 1")
        if self.refine_rounds < 0:
            raise InputError("refinement rounds must be >= 0")
        if self.tighten_sweeps < 0:
            raise InputError("tighten sweeps must be >= 0")
        if self.solver not in ("auto", "lp", "tree"):
            raise InputError(f"unknown solver {self.solver!r}")
        if self.refine not in ("widest", "fractional"):
            raise InputError(f"unknown refinement policy {self.refine!r}")
        if self.hierarchy != "off":
            if self.solver == "tree":
                raise InputError("conflicting flags: --hierarchy requires the LP solver")
            if self.hierarchy != "minimal" and not self.hierarchy.startswith("size:"):
                raise InputError(f"unknown hierarchy level {self.hierarchy!r}")
        if self.export_format not in ("mps", "lp"):
            raise InputError(f"unknown export format {self.export_format!r}")

    def to_dict(self):
        return {
            "t": self.t,
            "refine_rounds": self.refine_rounds,
            "tighten_sweeps": self.tighten_sweeps,
            "hierarchy": self.hierarchy,
            "solver": self.solver,
            "export_format": self.export_format,
            "seed": self.seed,
            "refine": self.refine,
            "with_oracle": self.with_oracle,
            "objective": self.objective,
        }


def resolve_cap(config: RunConfig) -> int:
    env = os.environ.get("PCNF_ORACLE_CAP")
    if env is not None:
        return int(env)
    if config.oracle_cap is not None:
        return config.oracle_cap
    return orc.DEFAULT_CAP


def _load(source):
    try:
        net = load_network(source)
    except InputError as exc:
        return None, {"state": "parse-error", "error": str(exc)}
    except json.JSONDecodeError as exc:
        return None, {
            "state": "parse-error",
            "error": f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
        }
    return net, None


def run_validate(source) -> dict:
    net, err = _load(source)
    if err:
        return err
    report = validate_network(net)
    return {
        "state": "ok" if report.ok else "input-invalid",
        "ok": report.ok,
        "violations": list(report.violations),
    }


def _prepare(source, config: RunConfig):
    """Common front half: load, validate, build, tighten, partition."""
    net, err = _load(source)
    if err:
        return None, err
    vrep = validate_network(net)
    if not vrep.ok:
        return None, {"state": "input-invalid", "violations": list(vrep.violations)}
    timings = {}
    t0 = time.perf_counter()
    gm = fg.build_gm(net, config.objective)
    timings["build_gm"] = time.perf_counter() - t0
    bounds = None
    tight_info = None
    if config.tighten_sweeps > 0:
        t0 = time.perf_counter()
        try:
            state = bt.tighten_all(gm, max_sweeps=config.tighten_sweeps)
        except InfeasibleError as exc:
            return None, {"state": "locally-infeasible", "error": str(exc)}
        timings["tighten"] = time.perf_counter() - t0
        bounds = state.bounds
        tight_info = {
            "sweeps": state.sweeps,
            "boxes": {v: [iv.lo, iv.hi] for v, iv in sorted(state.bounds.items())},
        }
    partition = dz.build_partition(gm, config.t, bounds)
    return (net, gm, partition, tight_info, timings), None


def _solve_round(gm, partition, config: RunConfig):
    """One solve on the current partition; returns a round record."""
    model = dz.discretize_model(gm, partition)
    record = {"solver": None, "bound": None, "integral": None, "fractional": []}
    use_tree = config.solver == "tree" or (
        config.solver == "auto" and config.hierarchy == "off" and fg.is_tree(gm)
    )
    if config.solver == "tree" and not fg.is_tree(gm):
        raise InputError("not a tree")
    if use_tree:
        value, assignment, rep = treedp.solve_tree(gm, partition, model)
        record.update(solver="tree", bound=value, integral=True)
        return record, model, assignment
    if config.hierarchy == "off":
        lp = lpbp.build_int_part_lp(gm, partition, model)
    else:
        level, t = ("minimal", 0) if config.hierarchy == "minimal" else (
            "size", int(config.hierarchy.split(":", 1)[1])
        )
        sns = lpbp.generate_supernodes(gm, level=level, t=t)
        lp = lpbp.build_hierarchy_lp(gm, partition, model, sns)
    sol = lpbp.solve_lp(lp)
    if sol.status == "discretization-infeasible":
        raise InfeasibleError("empty feasible cell set", stage="discretization")
    if sol.status != "optimal":
        raise InfeasibleError(f"LP status {sol.status}", stage="lp")
    integral, fractional = lpbp.check_integrality(sol, tol=config.int_tol)
    assignment = _assignment_from_beliefs(gm, partition, sol, config.hierarchy != "off")
    record.update(
        solver="lp" if config.hierarchy == "off" else f"lp/{config.hierarchy}",
        bound=sol.objective,
        integral=integral,
        fractional=[name for name, _ in fractional[:50]],
        lp_size={"columns": lp.n_cols, "rows": lp.n_rows},
        iterations=sol.iterations,
    )
    return record, model, assignment


def _assignment_from_beliefs(gm, partition, sol, hierarchy: bool):
    assignment = {}
    for vid in sorted(gm.variables):
        prefix = f"b_s_{lpbp._san(vid)}_" if hierarchy else f"b_i_{lpbp._san(vid)}_"
        best_lab, best_val = 0, -1.0
        for a in range(partition.count(vid)):
            v = sol.beliefs.get(f"{prefix}{a}", 0.0)
            if v > best_val + 1e-12:
                best_lab, best_val = a, v
        assignment[vid] = best_lab
    return assignment


def _refine_target(gm, partition, assignment, record, policy):
    """Variable/cell to split next; None when everything is degenerate."""
    candidates = []
    if policy == "fractional" and record.get("fractional"):
        frac_vars = set()
        for name in record["fractional"]:
            if name.startswith("b_i_") or name.startswith("b_s_"):
                body = name[4:]
                var, _, lab = body.rpartition("_")
                frac_vars.add(var)
        for vid in sorted(gm.variables):
            if lpbp._san(vid) in frac_vars:
                lab = assignment[vid]
                candidates.append((partition.cell(vid, lab).width, vid, lab))
    if not candidates:
        for vid in sorted(gm.variables):
            lab = assignment[vid]
            candidates.append((partition.cell(vid, lab).width, vid, lab))
    candidates.sort(key=lambda c: (-c[0], c[1]))
    width, vid, lab = candidates[0]
    if width <= 0.0:
        return None
    return vid, lab


def run_solve(source, config: RunConfig) -> dict:
    config.check()
    prep, err = _prepare(source, config)
    if err:
        return err
    net, gm, partition, tight_info, timings = prep
    cap = resolve_cap(config)
    report = {
        "state": "solved",
        "config": config.to_dict(),
        "instance": {
            "objective": config.objective or net.objective,
            "components": net.components,
            "is_tree": fg.is_tree(gm),
            **fg.gm_counts(gm),
        },
        "rounds": [],
        "timings": timings,
    }
    if tight_info:
        report["tightened"] = tight_info

    assignment = None
    try:
        for rnd in range(config.refine_rounds + 1):
            t0 = time.perf_counter()
            record, model, assignment = _solve_round(gm, partition, config)
            timings[f"solve_round_{rnd}"] = time.perf_counter() - t0
            record["round"] = rnd
            if config.with_oracle:
                t0 = time.perf_counter()
                disc = orc.grid_enumerate(gm, model, "discretized", cap=cap)
                cont = orc.grid_enumerate(gm, model, "continuous", cap=cap)
                timings[f"oracle_round_{rnd}"] = time.perf_counter() - t0
                record["oracle_discretized"] = disc.value
                record["oracle_upper"] = cont.value
                record["oracle_residual"] = cont.residual
                if cont.value is not None and record["bound"] is not None:
                    denom = max(abs(cont.value), 1e-12)
                    record["gap"] = (cont.value - record["bound"]) / denom
                record["bound_le_oracle"] = (
                    disc.value is None or record["bound"] <= disc.value + 1e-7
                )
            report["rounds"].append(record)
            if rnd < config.refine_rounds:
                target = _refine_target(gm, partition, assignment, record, config.refine)
                if target is None:
                    break
                partition = partition.refine(*target)
    except InfeasibleError as exc:
        report["state"] = (
            "discretization-infeasible" if exc.stage == "discretization" else "lp-infeasible"
        )
        report["error"] = str(exc)
        return report
    except CapExceededError as exc:
        report["state"] = "cap-exceeded"
        report["error"] = str(exc)
        return report

    final = report["rounds"][-1]
    report["bound"] = final["bound"]
    report["integrality"] = final["integral"]
    report["partition"] = {v: list(bp) for v, bp in sorted(partition.breakpoints.items())}
    report["assignment"] = {
        v: {
            "cell": assignment[v],
            "interval": [partition.cell(v, assignment[v]).lo, partition.cell(v, assignment[v]).hi],
            "representative": partition.cell(v, assignment[v]).mid,
        }
        for v in sorted(assignment)
    }
    return report


def run_export(source, config: RunConfig) -> dict:
    config.check()
    prep, err = _prepare(source, config)
    if err:
        return err
    net, gm, partition, _tight, timings = prep
    t0 = time.perf_counter()
    model = dz.discretize_model(gm, partition)
    if config.hierarchy == "off":
        lp = lpbp.build_int_part_lp(gm, partition, model)
    else:
        level, t = ("minimal", 0) if config.hierarchy == "minimal" else (
            "size", int(config.hierarchy.split(":", 1)[1])
        )
        sns = lpbp.generate_supernodes(gm, level=level, t=t)
        lp = lpbp.build_hierarchy_lp(gm, partition, model, sns)
    text = lpio.export_lp_string(lp, config.export_format)
    timings["export"] = time.perf_counter() - t0
    return {
        "state": "solved",
        "format": config.export_format,
        "content": text,
        "lp_size": {"columns": lp.n_cols, "rows": lp.n_rows},
        "timings": timings,
    }


def run_oracle(source, config: RunConfig) -> dict:
    config.check()
    prep, err = _prepare(source, config)
    if err:
        return err
    net, gm, partition, _tight, timings = prep
    cap = resolve_cap(config)
    model = dz.discretize_model(gm, partition)
    out = {"state": "solved", "config": config.to_dict(), "timings": timings}
    try:
        t0 = time.perf_counter()
        disc = orc.grid_enumerate(gm, model, "discretized", cap=cap)
        cont = orc.grid_enumerate(gm, model, "continuous", cap=cap)
        timings["oracle"] = time.perf_counter() - t0
    except CapExceededError as exc:
        return {"state": "cap-exceeded", "error": str(exc), "timings": timings}
    if disc.value is None:
        out["state"] = "discretization-infeasible"
        out["enumerated"] = disc.enumerated
        return out
    out["discretized"] = {"value": disc.value, "residual": disc.residual,
                          "enumerated": disc.enumerated}
    out["continuous"] = {
        "value": cont.value,
        "residual": cont.residual,
        "feasible": cont.feasible,
        "point": {k: cont.point[k] for k in sorted(cont.point)},
    }
    return out


def report_to_json(report: dict) -> str:
    """Stable serialization; 'timings' is the only run-dependent section."""
    return json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"


def exit_code(report: dict) -> int:
    return STATE_EXIT.get(report.get("state", "solved"), EXIT_OK)
