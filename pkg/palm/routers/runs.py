import json
from pathlib import Path

from fastapi import APIRouter, Depends, HTTPException
from fastapi.responses import FileResponse
from sqlmodel import Session, select

from palm.dependencies import get_db, get_run_record
from palm.models import RunRecord, RunStatus

router = APIRouter()


@router.get("/runs")
def list_runs(limit: int = 20, status: RunStatus | None = None, db: Session = Depends(get_db)):
    query = select(RunRecord)
    if status is not None:
        query = query.where(RunRecord.status == status)
    runs = db.exec(
        query.order_by(RunRecord.started_at.desc(), RunRecord.id.desc()).limit(limit)
    ).all()
    return runs


@router.get("/runs/{run_id}")
def get_run(run: RunRecord = Depends(get_run_record)):
    report = None
    if run.report_path and Path(run.report_path).is_file():
        report = json.loads(Path(run.report_path).read_text())
    return {"run": run.model_dump(mode="json"), "report": report}


@router.get("/runs/{run_id}/trace")
def get_run_trace(run: RunRecord = Depends(get_run_record)):
    if not run.trace_path or not Path(run.trace_path).is_file():
        raise HTTPException(404, "Trace not found")
    return FileResponse(
        run.trace_path,
        media_type="text/csv",
        filename=f"run-{run.id}-trace.csv",
    )
