"""Request-scoped dependencies of the run ledger API."""

import logging
from collections.abc import Generator

from fastapi import Depends, HTTPException, Request
from sqlmodel import Session

from palm.database import get_session
from palm.models import RunRecord

log = logging.getLogger(__name__)


def get_db(request: Request) -> Generator[Session, None, None]:
    """Ledger session on the engine the app lifespan opened."""
    yield from get_session(request.app.state.engine)


def get_run_record(run_id: int, db: Session = Depends(get_db)) -> RunRecord:
    run = db.get(RunRecord, run_id)
    if run is None:
        log.debug(f"run {run_id} is not in the ledger")
        raise HTTPException(404, "Run not found")
    return run
