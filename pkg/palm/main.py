import logging
from collections.abc import AsyncIterator
from contextlib import asynccontextmanager

from fastapi import Depends, FastAPI
from sqlmodel import Session, func, select

from palm.config import get_settings
from palm.database import get_engine, init_db
from palm.dependencies import get_db
from palm.models import RunRecord, RunStatus
from palm.routers import runs

log = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncIterator[None]:
    engine = get_engine()
    init_db(engine)
    app.state.engine = engine
    log.info("Run ledger ready")

    yield

    engine.dispose()


settings = get_settings()

app = FastAPI(
    title=settings.app_name,
    debug=settings.debug,
    lifespan=lifespan,
)

app.include_router(runs.router)


@app.get("/api/status")
def api_status(db: Session = Depends(get_db)) -> dict[str, object]:
    counts = dict(
        db.exec(select(RunRecord.status, func.count()).group_by(RunRecord.status)).all()
    )
    return {
        "app": settings.app_name,
        "status": "running",
        "runs": {status.value: counts.get(status, 0) for status in RunStatus},
    }


@app.get("/health")
def health(db: Session = Depends(get_db)) -> dict[str, str]:
    db.exec(select(RunRecord).limit(1))
    return {"status": "healthy", "db": "connected"}
