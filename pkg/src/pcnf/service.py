"""HTTP service exposing the solver pipeline.

Run with ``uvicorn pcnf.service:app``.  Each endpoint takes the network
document inline plus the solve options and returns the same report the CLI
writes; solver-level outcomes (infeasibility, caps) come back as 200s with a
``state`` field, while malformed payloads are 400s.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import pipeline
from .errors import PcnfError

app = FastAPI(title="pcnf", description="physics-constrained network flow bounds")


class SolveOptions(BaseModel):
    t: int = 8
    refine_rounds: int = 0
    tighten_sweeps: int = 0
    hierarchy: str = "off"
    solver: str = "auto"
    export_format: str = "mps"
    seed: int = 0
    refine: str = "widest"
    with_oracle: bool = False
    objective: str | None = None
    oracle_cap: int | None = None

    def to_config(self) -> pipeline.RunConfig:
        return pipeline.RunConfig(**self.model_dump())


class NetworkRequest(BaseModel):
    network: dict = Field(..., description="network document (same schema as the JSON file)")
    options: SolveOptions = SolveOptions()


class ValidateResponse(BaseModel):
    state: str
    ok: bool = False
    violations: list[str] = []
    error: str | None = None


class ReportResponse(BaseModel):
    state: str
    report: dict


class ExportResponse(BaseModel):
    state: str
    format: str = ""
    content: str = ""
    error: str | None = None


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/validate", response_model=ValidateResponse)
def validate(req: NetworkRequest):
    out = pipeline.run_validate(req.network)
    return ValidateResponse(
        state=out["state"],
        ok=out.get("ok", False),
        violations=out.get("violations", []),
        error=out.get("error"),
    )


@app.post("/solve", response_model=ReportResponse)
def solve(req: NetworkRequest):
    try:
        report = pipeline.run_solve(req.network, req.options.to_config())
    except PcnfError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return ReportResponse(state=report["state"], report=report)


@app.post("/export", response_model=ExportResponse)
def export(req: NetworkRequest):
    try:
        report = pipeline.run_export(req.network, req.options.to_config())
    except PcnfError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return ExportResponse(
        state=report["state"],
        format=report.get("format", ""),
        content=report.get("content", ""),
        error=report.get("error"),
    )


@app.post("/oracle", response_model=ReportResponse)
def oracle(req: NetworkRequest):
    try:
        report = pipeline.run_oracle(req.network, req.options.to_config())
    except PcnfError as exc:
        raise HTTPException(status_code=400, detail=str(exc))
    return ReportResponse(state=report["state"], report=report)
