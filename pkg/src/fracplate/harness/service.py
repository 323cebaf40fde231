"""HTTP service exposing the study drivers.

The request body is the flat study configuration as JSON; the response
carries the report rows and the CSV text.  ``execute`` is the single
entry point shared by the HTTP handlers and the in-process CLI path.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from ..solve import FactorizationError
from .config import StudyConfig
from .studies import CSV_HEADER, export_system, rows_to_csv, run_study

__all__ = ["app", "StudyRequest", "StudyResponse", "RowModel", "MatricesResponse", "execute", "export"]


class StudyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: StudyConfig
    threads: int = Field(1, ge=1, le=64)


class RowModel(BaseModel):
    theory: str
    bc: str
    alpha: float
    lf_frac: float | None
    Nx: int
    Ny: int
    quantity: str
    value: float
    reference: float | None
    pct_error: float | None


class StudyResponse(BaseModel):
    study: str
    header: list[str]
    rows: list[RowModel]
    csv: str


class MatricesResponse(BaseModel):
    """Matrix Market texts of the reduced stiffness and mass."""

    n_free: int
    stiffness: str
    mass: str


def execute(request: StudyRequest) -> StudyResponse:
    rows = run_study(request.config, request.threads)
    models = [RowModel(theory=r.theory, bc=r.bc, alpha=r.alpha, lf_frac=r.lf_frac, Nx=r.Nx, Ny=r.Ny,
                       quantity=r.quantity, value=r.value, reference=r.reference, pct_error=r.pct_error)
              for r in rows]
    return StudyResponse(study=request.config.study, header=list(CSV_HEADER), rows=models, csv=rows_to_csv(rows))


def export(config: StudyConfig) -> MatricesResponse:
    with tempfile.TemporaryDirectory() as tmp:
        paths = export_system(config, Path(tmp) / "system")
        return MatricesResponse(n_free=paths["n_free"], stiffness=Path(paths["K"]).read_text(),
                                mass=Path(paths["M"]).read_text())


app = FastAPI(title="fracplate", description="Fractional-order nonlocal plate studies")


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/studies", response_model=StudyResponse)
def studies(request: StudyRequest):
    try:
        return execute(request)
    except (ValueError, FactorizationError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))


@app.post("/matrices", response_model=MatricesResponse)
def matrices(config: StudyConfig):
    try:
        return export(config)
    except (ValueError, FactorizationError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
