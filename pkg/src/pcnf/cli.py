"""Command line client: pcnf validate|solve|export|oracle <input.json> [flags].

By default the pipeline runs in-process; with --server the CLI becomes a thin
HTTP client posting the same payloads to a running pcnf service.

Exit codes: 0 solved/ok, 1 invariant violation, 2 parse error, 3 infeasible,
4 resource cap.
"""

from __future__ import annotations

import argparse
import json
import sys
import urllib.request

from . import pipeline
from .errors import PcnfError


def _parser():
    p = argparse.ArgumentParser(prog="pcnf", description=__doc__.split("\n")[0])
    p.add_argument("command", choices=["validate", "solve", "export", "oracle"])
    p.add_argument("input", help="network JSON file")
    p.add_argument("--t", type=int, default=8, help="cells per variable (default 8)")
    p.add_argument("--refine-rounds", type=int, default=0, dest="refine_rounds")
    p.add_argument("--tighten", type=int, default=0, dest="tighten_sweeps",
                   help="bound-tightening sweeps (0 = off)")
    p.add_argument("--hierarchy", default="off", help="off | minimal | size:K")
    p.add_argument("--solver", default="auto", choices=["auto", "lp", "tree"])
    p.add_argument("--export-format", default="mps", choices=["mps", "lp"],
                   dest="export_format")
    p.add_argument("--refine", default="widest", choices=["widest", "fractional"])
    p.add_argument("--with-oracle", action="store_true", dest="with_oracle")
    p.add_argument("--objective", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write the report (or LP file) here")
    p.add_argument("--server", default=None, help="base URL of a running pcnf service")
    return p


def _config(args) -> pipeline.RunConfig:
    return pipeline.RunConfig(
        t=args.t,
        refine_rounds=args.refine_rounds,
        tighten_sweeps=args.tighten_sweeps,
        hierarchy=args.hierarchy,
        solver=args.solver,
        export_format=args.export_format,
        seed=args.seed,
        refine=args.refine,
        with_oracle=args.with_oracle,
        objective=args.objective,
    )


def _post(server, endpoint, payload):
    req = urllib.request.Request(
        server.rstrip("/") + endpoint,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode("utf-8"))


def _run(args) -> dict:
    if args.server:
        with open(args.input, "r", encoding="utf-8") as fh:
            network = json.load(fh)
        payload = {"network": network, "options": _config(args).to_dict()}
        out = _post(args.server, f"/{args.command}", payload)
        return out.get("report", out)
    if args.command == "validate":
        return pipeline.run_validate(args.input)
    config = _config(args)
    if args.command == "solve":
        return pipeline.run_solve(args.input, config)
    if args.command == "export":
        return pipeline.run_export(args.input, config)
    return pipeline.run_oracle(args.input, config)


def _summary(command, report) -> str:
    state = report.get("state", "?")
    if command == "validate":
        if state == "ok":
            return "valid"
        return "invalid:\n  " + "\n  ".join(report.get("violations", [report.get("error", "")]))
    if state != "solved":
        return f"{state}: {report.get('error', '')}".rstrip(": ")
    if command == "solve":
        parts = [f"bound {report['bound']:.9g}"]
        final = report["rounds"][-1]
        if "gap" in final:
            parts.append(f"gap {final['gap']:.3%}")
        parts.append(f"integral {report['integrality']}")
        parts.append(f"solver {final['solver']}")
        return "  ".join(parts)
    if command == "oracle":
        d = report["discretized"]
        c = report["continuous"]
        return (
            f"discretized {d['value']:.9g}  upper {c['value']:.9g}  "
            f"residual {c['residual']:.3g}  enumerated {d['enumerated']}"
        )
    return f"exported {report.get('format')} ({report['lp_size']['columns']} columns)"


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        report = _run(args)
    except PcnfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return pipeline.EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return pipeline.EXIT_PARSE

    if args.command == "export" and report.get("state") == "solved":
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(report["content"])
        else:
            sys.stdout.write(report["content"])
    elif args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(pipeline.report_to_json(report))

    print(_summary(args.command, report))
    return pipeline.exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
